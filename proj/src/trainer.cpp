#include "mgcn/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <ostream>
#include <sstream>
#include <thread>
#include <utility>

#include <json.hpp>

#include "mgcn/dataset_io.hpp"
#include "mgcn/errors.hpp"
#include "mgcn/mixview.hpp"
#include "mgcn/rng.hpp"

namespace mgcn {

const char* ablation_label(AblationVariant v) {
  switch (v) {
    case AblationVariant::kBackboneOnly: return "B";
    case AblationVariant::kWithMixup: return "B+I";
    case AblationVariant::kWithCorrelation: return "B+C";
    case AblationVariant::kFull: return "Ours";
  }
  throw ConfigError("unknown ablation variant");
}

void TrainConfig::validate() const {
  if (!(mix_rate >= 0.0 && mix_rate <= 1.0)) {
    throw ConfigError("mix rate must lie in [0,1]");
  }
  if (!(corr_weight >= 0.0)) throw ConfigError("correlation weight must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (runs < 1) throw ConfigError("runs must be >= 1");
  if (correlation_batch < 0) throw ConfigError("correlation batch must be >= 0");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  encoder.validate();
}

namespace {

std::vector<int> predict_labels(const Mat& probabilities) {
  std::vector<int> pred(probabilities.rows());
  for (Index i = 0; i < probabilities.rows(); ++i) {
    int best = 0;
    double best_p = probabilities(i, 0);
    for (Index c = 1; c < probabilities.cols(); ++c) {
      if (probabilities(i, c) > best_p) {  // strict: ties keep the lowest id
        best_p = probabilities(i, c);
        best = static_cast<int>(c);
      }
    }
    pred[i] = best;
  }
  return pred;
}

double mask_accuracy(const std::vector<int>& pred, const std::vector<int>& labels,
                     std::span<const int> mask) {
  if (mask.empty()) throw ConfigError("accuracy over an empty mask");
  int hits = 0;
  for (int v : mask) hits += pred[v] == labels[v];
  return static_cast<double>(hits) / static_cast<double>(mask.size());
}

struct EpochAccuracy {
  double train = 0, val = 0, test = 0;
};

EpochAccuracy eval_accuracies(const FeatureCache& cache, const NormAdj& adj,
                              const EncoderParams& params,
                              const EncoderConfig& enc_cfg, const Dataset& ds) {
  Rng unused(0);  // eval mode draws nothing
  DiffValue h = encode_backbone(cache, adj, params, enc_cfg, false, unused);
  DiffValue probs = classify(h, params);
  std::vector<int> pred = predict_labels(probs.data());
  return {mask_accuracy(pred, ds.labels, ds.splits.train),
          mask_accuracy(pred, ds.labels, ds.splits.val),
          mask_accuracy(pred, ds.labels, ds.splits.test)};
}

}  // namespace

RunResult train_with_seed(const Dataset& ds, const TrainConfig& cfg,
                          std::uint64_t seed) {
  cfg.validate();
  ds.validate();
  if (cfg.correlation_batch > ds.num_nodes()) {
    throw ConfigError("correlation batch exceeds the node count");
  }

  const bool use_mix = cfg.ablation == AblationVariant::kWithMixup ||
                       cfg.ablation == AblationVariant::kFull;
  const bool use_corr = cfg.ablation == AblationVariant::kWithCorrelation ||
                        cfg.ablation == AblationVariant::kFull;

  NormAdj adj = normalize_adjacency(ds.graph);
  FeatureCache cache = FeatureCache::build(ds.features);
  EncoderParams params =
      init_params(ds.feature_dim(), cfg.encoder.hidden_dim, ds.num_classes,
                  cfg.encoder.num_hops, cfg.encoder.ppr_alpha, seed);
  std::vector<Parameter> param_set = params.parameters();
  AdamState adam;
  // Epoch-level sampling runs on a stream distinct from the init draws.
  Rng rng(derive_seed(seed, 1));
  const Mat y_train = one_hot_train_labels(ds.labels, ds.splits, ds.num_classes);
  const int n = ds.num_nodes();

  RunResult result;
  result.seed = seed;
  result.history.reserve(cfg.epochs);
  result.best_val_acc = -1.0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    DiffValue h = encode_backbone(cache, adj, params, cfg.encoder, true, rng);

    // Views: 1 feeds only the correlation term, 2 also feeds the classifier.
    MixedView view1, view2;
    if (use_corr) {
      view1 = make_view(1, h, y_train, ds.splits, cfg.mix_rate, rng, false);
    }
    if (use_mix || use_corr) {
      view2 = make_view(2, h, y_train, ds.splits, cfg.mix_rate, rng, use_mix);
    }

    DiffValue loss_c;
    if (use_mix) {
      DiffValue pred = classify(select_rows(view2.h_mixed, ds.splits.train), params);
      loss_c = classification_loss(pred, view2.y_mixed);
    } else {
      DiffValue pred = classify(select_rows(h, ds.splits.train), params);
      loss_c = classification_loss(pred, y_train);
    }

    DiffValue loss_r;
    DiffValue loss = loss_c;
    if (use_corr) {
      std::vector<int> batch = correlation_batch(n, cfg.correlation_batch, rng);
      if (static_cast<int>(batch.size()) == n) {
        loss_r = correlation_reduction_loss(view1.h_mixed, view2.h_mixed,
                                            cfg.corr_loss_form);
      } else {
        loss_r = correlation_reduction_loss(select_rows(view1.h_mixed, batch),
                                            select_rows(view2.h_mixed, batch),
                                            cfg.corr_loss_form);
      }
      loss = add(loss_c, scale(loss_r, cfg.corr_weight));
    }

    double loss_value = loss.scalar_value();
    if (!std::isfinite(loss_value)) {
      throw TrainingAbort("non-finite loss at epoch " + std::to_string(epoch) +
                          " (seed " + std::to_string(seed) + ")");
    }
    backward(loss);
    adam.step(param_set, cfg.lr, cfg.weight_decay);

    EpochAccuracy acc = eval_accuracies(cache, adj, params, cfg.encoder, ds);
    EpochMetrics m;
    m.epoch = epoch;
    m.loss_c = loss_c.scalar_value();
    m.loss_r = use_corr ? loss_r.scalar_value() : 0.0;
    m.loss = loss_value;
    m.acc_train = acc.train;
    m.acc_val = acc.val;
    m.acc_test = acc.test;
    result.history.push_back(m);

    if (acc.val > result.best_val_acc) {
      result.best_val_acc = acc.val;
      result.best_epoch = epoch;
      result.test_acc = acc.test;
      result.best_params = params.to_checkpoint();
    }
  }
  return result;
}

RunResult train(const Dataset& ds, const TrainConfig& cfg) {
  return train_with_seed(ds, cfg, cfg.seed);
}

double evaluate(const EncoderParams& params, const EncoderConfig& cfg,
                const Dataset& ds, std::span<const int> mask) {
  if (mask.empty()) throw ConfigError("evaluate called with an empty mask");
  NormAdj adj = normalize_adjacency(ds.graph);
  FeatureCache cache = FeatureCache::build(ds.features);
  Rng unused(0);
  DiffValue h = encode_backbone(cache, adj, params, cfg, false, unused);
  std::vector<int> pred = predict_labels(classify(h, params).data());
  return mask_accuracy(pred, ds.labels, mask);
}

MultiRunResult run_multi(const Dataset& ds, const TrainConfig& cfg) {
  cfg.validate();
  MultiRunResult result;
  result.runs.resize(cfg.runs);

  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  int workers = cfg.threads > 0 ? cfg.threads : static_cast<int>(hw);
  workers = std::clamp(workers, 1, cfg.runs);

  if (workers == 1) {
    for (int i = 0; i < cfg.runs; ++i) {
      result.runs[i] = train_with_seed(ds, cfg, cfg.seed + static_cast<std::uint64_t>(i));
    }
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int i = next.fetch_add(1); i < cfg.runs; i = next.fetch_add(1)) {
            result.runs[i] =
                train_with_seed(ds, cfg, cfg.seed + static_cast<std::uint64_t>(i));
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  double sum = 0.0;
  for (const auto& r : result.runs) sum += r.test_acc;
  result.mean_test_acc = sum / cfg.runs;
  double sq = 0.0;
  for (const auto& r : result.runs) {
    double d = r.test_acc - result.mean_test_acc;
    sq += d * d;
  }
  result.std_test_acc = std::sqrt(sq / cfg.runs);
  return result;
}

std::vector<AblationRow> run_ablation(const Dataset& ds, const TrainConfig& cfg) {
  std::vector<AblationRow> rows;
  for (AblationVariant v :
       {AblationVariant::kBackboneOnly, AblationVariant::kWithMixup,
        AblationVariant::kWithCorrelation, AblationVariant::kFull}) {
    TrainConfig variant_cfg = cfg;
    variant_cfg.ablation = v;
    MultiRunResult r = run_multi(ds, variant_cfg);
    rows.push_back({ablation_label(v), r.mean_test_acc, r.std_test_acc, cfg.runs});
  }
  return rows;
}

void write_metrics_ndjson(std::ostream& out, const MultiRunResult& result) {
  for (std::size_t run = 0; run < result.runs.size(); ++run) {
    for (const EpochMetrics& m : result.runs[run].history) {
      nlohmann::json line = {
          {"run", run},           {"epoch", m.epoch},
          {"loss_c", m.loss_c},   {"loss_r", m.loss_r},
          {"loss", m.loss},       {"acc_train", m.acc_train},
          {"acc_val", m.acc_val}, {"acc_test", m.acc_test},
      };
      out << line.dump() << '\n';
    }
  }
}

void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "variant,mean,std,runs\n";
  for (const auto& r : rows) {
    out << r.variant << ',' << format_double(r.mean) << ','
        << format_double(r.stddev) << ',' << r.runs << '\n';
  }
}

std::string format_mean_std(double mean, double stddev) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(4);
  ss << mean << "±" << stddev;
  return ss.str();
}

}  // namespace mgcn
