#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mgcn/checkpoint.hpp"
#include "mgcn/correlation.hpp"
#include "mgcn/encoder.hpp"
#include "mgcn/graph.hpp"

namespace mgcn {

// B: plain supervised backbone. B+I adds interpolation mixing, B+C adds the
// correlation term (classification stays unmixed), full keeps both.
enum class AblationVariant { kBackboneOnly, kWithMixup, kWithCorrelation, kFull };

// Report labels: B, B+I, B+C, Ours.
const char* ablation_label(AblationVariant v);

struct TrainConfig {
  double mix_rate = 0.9;     // interpolation rate; 1 disables mixing
  double corr_weight = 0.5;  // weight of the correlation term in the objective
  double lr = 2e-2;
  double weight_decay = 5e-4;
  int epochs = 1000;
  int runs = 10;
  std::uint64_t seed = 0;
  int correlation_batch = 0;  // 0 = correlate all nodes
  AblationVariant ablation = AblationVariant::kFull;
  CorrelationLossForm corr_loss_form = CorrelationLossForm::kDecomposed;
  EncoderConfig encoder;
  int threads = 0;  // worker cap for run_multi; 0 = hardware concurrency

  void validate() const;  // throws ConfigError
};

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double loss_c = 0, loss_r = 0, loss = 0;
  double acc_train = 0, acc_val = 0, acc_test = 0;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::vector<EpochMetrics> history;
  int best_epoch = 0;        // epoch of highest validation accuracy (earliest tie)
  double best_val_acc = 0;
  double test_acc = 0;       // test accuracy at best_epoch
  Checkpoint best_params;    // parameter snapshot at best_epoch
};

struct MultiRunResult {
  std::vector<RunResult> runs;  // index = run id; seeds are base seed + index
  double mean_test_acc = 0;
  double std_test_acc = 0;  // population standard deviation
};

// One full training run with cfg.seed / an explicit seed. Aborts with
// TrainingAbort when the loss goes non-finite.
RunResult train(const Dataset& ds, const TrainConfig& cfg);
RunResult train_with_seed(const Dataset& ds, const TrainConfig& cfg,
                          std::uint64_t seed);

// Fraction of mask nodes whose predicted class (argmax of the classifier
// output, ties to the lowest class id) equals the label. Dropout disabled.
double evaluate(const EncoderParams& params, const EncoderConfig& cfg,
                const Dataset& ds, std::span<const int> mask);

// cfg.runs independent seeds; may use up to cfg.threads workers. Output is
// identical regardless of worker count.
MultiRunResult run_multi(const Dataset& ds, const TrainConfig& cfg);

struct AblationRow {
  std::string variant;
  double mean = 0;
  double stddev = 0;
  int runs = 0;
};

// Runs all four variants with shared seeds; rows ordered B, B+I, B+C, Ours.
std::vector<AblationRow> run_ablation(const Dataset& ds, const TrainConfig& cfg);

// Newline-delimited JSON, one object per epoch per run with fields
// {run, epoch, loss_c, loss_r, loss, acc_train, acc_val, acc_test}.
void write_metrics_ndjson(std::ostream& out, const MultiRunResult& result);
// CSV with header variant,mean,std,runs.
void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);
// Fixed 4-decimal "mean±std" rendering for summary lines.
std::string format_mean_std(double mean, double stddev);

// Embeddings of the whole dataset under eval mode.
Mat compute_embeddings(const EncoderParams& params, const EncoderConfig& cfg,
                       const Dataset& ds);

// N×N cosine-similarity CSV of the final embeddings with rows/columns
// grouped by label (stable order: label, then node id), plus a sidecar
// "<path>.labels" listing "node_id,label" in that order.
void export_similarity(const EncoderParams& params, const EncoderConfig& cfg,
                       const Dataset& ds, const std::filesystem::path& path);
// CSV of H with a trailing label column (N rows, d+1 columns).
void export_embeddings(const EncoderParams& params, const EncoderConfig& cfg,
                       const Dataset& ds, const std::filesystem::path& path);

}  // namespace mgcn
