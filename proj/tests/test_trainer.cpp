#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mgcn/correlation.hpp"
#include "mgcn/errors.hpp"
#include "mgcn/mixview.hpp"
#include "mgcn/tensor.hpp"
#include "mgcn/trainer.hpp"
#include "oracles.hpp"

using namespace mgcn;

namespace {

Dataset tiny_sbm(std::vector<int> blocks, double p_in, double p_out,
                 double shift, std::uint64_t seed) {
  SbmParams p;
  p.block_sizes = std::move(blocks);
  p.p_in = p_in;
  p.p_out = p_out;
  p.feature_shift = shift;
  p.seed = seed;
  return generate_sbm(p);
}

TrainConfig small_cfg(int epochs, int runs = 1) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.runs = runs;
  cfg.encoder.hidden_dim = 8;
  cfg.encoder.num_hops = 3;
  cfg.threads = 1;
  return cfg;
}

}  // namespace

TEST_CASE("configs are validated") {
  TrainConfig cfg = small_cfg(10);
  CHECK_NOTHROW(cfg.validate());
  cfg.mix_rate = 1.2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_cfg(10);
  cfg.corr_weight = -0.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_cfg(10);
  cfg.lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_cfg(0);
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_cfg(10);
  cfg.runs = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_cfg(10);
  cfg.correlation_batch = -2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("the plain backbone memorizes the separable two-clique instance") {
  Dataset ds = tiny_sbm({5, 5}, 1.0, 0.0, 2.0, 0);
  TrainConfig cfg = small_cfg(200);
  cfg.ablation = AblationVariant::kBackboneOnly;
  RunResult run = train(ds, cfg);
  bool reached = false;
  for (const EpochMetrics& m : run.history) {
    if (m.acc_train == 1.0) {
      reached = true;
      break;
    }
  }
  CHECK(reached);
}

TEST_CASE("the first-epoch loss is reproduced by the explicit route") {
  Dataset ds = tiny_sbm({10, 10}, 0.6, 0.1, 1.5, 3);
  TrainConfig cfg = small_cfg(3);
  RunResult run = train_with_seed(ds, cfg, 5);

  // Replay epoch 1 from the same seed with the non-fused loss path: encoder
  // dropout draws, then the two view permutations, in the trainer's order.
  NormAdj adj = normalize_adjacency(ds.graph);
  FeatureCache cache = FeatureCache::build(ds.features);
  EncoderParams params =
      init_params(ds.feature_dim(), cfg.encoder.hidden_dim, ds.num_classes,
                  cfg.encoder.num_hops, cfg.encoder.ppr_alpha, 5);
  Rng epoch_rng(derive_seed(5, 1));
  DiffValue h =
      encode_backbone(cache, adj, params, cfg.encoder, true, epoch_rng);
  Mat y_train = one_hot_train_labels(ds.labels, ds.splits, ds.num_classes);
  MixedView v1 = make_view(1, h, y_train, ds.splits, cfg.mix_rate, epoch_rng,
                           false);
  MixedView v2 = make_view(2, h, y_train, ds.splits, cfg.mix_rate, epoch_rng,
                           true);
  DiffValue pred = classify(select_rows(v2.h_mixed, ds.splits.train), params);
  DiffValue loss_c = classification_loss(pred, v2.y_mixed);
  // The trainer evaluates the fused loss; replaying through the explicit
  // matrix is an independent route that must land on the same number.
  DiffValue loss_r = correlation_reduction_loss(
      correlation_matrix(v1.h_mixed, v2.h_mixed), cfg.corr_loss_form);
  double expected =
      loss_c.scalar_value() + cfg.corr_weight * loss_r.scalar_value();
  CHECK(std::abs(run.history[0].loss - expected) < 1e-10);
  CHECK(std::abs(run.history[0].loss_c - loss_c.scalar_value()) < 1e-10);
  CHECK(std::abs(run.history[0].loss_r - loss_r.scalar_value()) < 1e-10);
}

TEST_CASE("the logged objective is the weighted sum every epoch") {
  Dataset ds = tiny_sbm({8, 8, 8}, 0.5, 0.05, 1.0, 7);
  for (auto variant :
       {AblationVariant::kFull, AblationVariant::kWithMixup,
        AblationVariant::kWithCorrelation, AblationVariant::kBackboneOnly}) {
    TrainConfig cfg = small_cfg(20);
    cfg.ablation = variant;
    RunResult run = train(ds, cfg);
    REQUIRE(run.history.size() == 20);
    for (const EpochMetrics& m : run.history) {
      CHECK(std::abs(m.loss - (m.loss_c + cfg.corr_weight * m.loss_r)) <
            1e-10);
      CHECK(std::isfinite(m.loss));
      CHECK(m.acc_train >= 0.0);
      CHECK(m.acc_train <= 1.0);
      CHECK(m.acc_val >= 0.0);
      CHECK(m.acc_val <= 1.0);
      CHECK(m.acc_test >= 0.0);
      CHECK(m.acc_test <= 1.0);
    }
  }
}

TEST_CASE("training twice with one seed is identical") {
  Dataset ds = tiny_sbm({9, 9}, 0.5, 0.1, 1.0, 11);
  TrainConfig cfg = small_cfg(15);
  RunResult a = train_with_seed(ds, cfg, 2);
  RunResult b = train_with_seed(ds, cfg, 2);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].loss == b.history[i].loss);
    CHECK(a.history[i].loss_c == b.history[i].loss_c);
    CHECK(a.history[i].loss_r == b.history[i].loss_r);
    CHECK(a.history[i].acc_test == b.history[i].acc_test);
  }
  CHECK(a.best_epoch == b.best_epoch);
  CHECK(a.test_acc == b.test_acc);
  REQUIRE(a.best_params.size() == b.best_params.size());
  for (const auto& [name, mat] : a.best_params) {
    CHECK((mat - b.best_params.at(name)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("the backbone variant carries no correlation or mixing") {
  Dataset ds = tiny_sbm({8, 8}, 0.6, 0.1, 1.0, 13);
  TrainConfig cfg = small_cfg(10);
  cfg.ablation = AblationVariant::kBackboneOnly;
  RunResult run = train(ds, cfg);
  for (const EpochMetrics& m : run.history) {
    CHECK(m.loss_r == 0.0);
    CHECK(m.loss == m.loss_c);
  }

  cfg.ablation = AblationVariant::kWithMixup;
  RunResult mix_run = train(ds, cfg);
  for (const EpochMetrics& m : mix_run.history) CHECK(m.loss_r == 0.0);
  // Mixing changes the supervised loss stream relative to the plain backbone.
  bool differs = false;
  for (std::size_t i = 0; i < mix_run.history.size(); ++i) {
    differs = differs || mix_run.history[i].loss_c != run.history[i].loss_c;
  }
  CHECK(differs);

  cfg.ablation = AblationVariant::kWithCorrelation;
  RunResult corr_run = train(ds, cfg);
  CHECK(corr_run.history[0].loss_r > 0.0);
}

TEST_CASE("reported accuracy comes from the earliest best-validation epoch") {
  Dataset ds = tiny_sbm({10, 10}, 0.5, 0.1, 1.2, 17);
  TrainConfig cfg = small_cfg(25);
  RunResult run = train(ds, cfg);
  int expect_best = 0;
  double best_val = -1.0;
  for (const EpochMetrics& m : run.history) {
    if (m.acc_val > best_val) {
      best_val = m.acc_val;
      expect_best = m.epoch;
    }
  }
  CHECK(run.best_epoch == expect_best);
  CHECK(run.best_val_acc == best_val);
  CHECK(run.test_acc == run.history[run.best_epoch - 1].acc_test);

  // The snapshot reproduces the logged accuracy when evaluated afresh.
  EncoderParams snap = EncoderParams::from_checkpoint(run.best_params);
  double acc = evaluate(snap, cfg.encoder, ds, ds.splits.test);
  CHECK(acc == run.test_acc);
}

TEST_CASE("an untrained zero head predicts the first class everywhere") {
  Dataset ds = tiny_sbm({6, 6, 6}, 0.5, 0.1, 1.0, 19);
  EncoderConfig enc;
  enc.hidden_dim = 8;
  enc.num_hops = 2;
  EncoderParams p = init_params(ds.feature_dim(), 8, 3, 2, 0.1, 0);
  p.wc.data().setZero();
  p.bc.data().setZero();
  // Balanced classes: argmax ties resolve to class 0, so accuracy is 1/C.
  double acc = evaluate(p, enc, ds, ds.splits.test);
  int zeros = 0;
  for (int v : ds.splits.test) zeros += ds.labels[v] == 0 ? 1 : 0;
  CHECK(acc ==
        doctest::Approx(zeros / double(ds.splits.test.size())).epsilon(1e-12));

  CHECK_THROWS_AS(evaluate(p, enc, ds, std::vector<int>{}), ConfigError);
}

TEST_CASE("a divergent learning rate aborts instead of clipping") {
  Dataset ds = tiny_sbm({6, 6}, 0.8, 0.1, 1.0, 23);
  TrainConfig cfg = small_cfg(5);
  // Step one moves every weight to ~1e200; the epoch-two forward pass then
  // overflows, and the trainer must refuse to keep going on a garbage loss.
  cfg.lr = 1e200;
  CHECK_THROWS_AS(train(ds, cfg), TrainingAbort);
}

TEST_CASE("multi-run aggregation is a population summary over shared data") {
  Dataset ds = tiny_sbm({8, 8}, 0.6, 0.1, 1.2, 29);
  TrainConfig cfg = small_cfg(10, 3);
  MultiRunResult res = run_multi(ds, cfg);
  REQUIRE(res.runs.size() == 3);
  for (std::size_t i = 0; i < res.runs.size(); ++i) {
    CHECK(res.runs[i].seed == cfg.seed + i);
  }
  double mean = 0;
  for (const RunResult& r : res.runs) mean += r.test_acc;
  mean /= 3.0;
  double var = 0;
  for (const RunResult& r : res.runs)
    var += (r.test_acc - mean) * (r.test_acc - mean);
  var /= 3.0;
  CHECK(res.mean_test_acc == doctest::Approx(mean).epsilon(1e-15));
  CHECK(res.std_test_acc == doctest::Approx(std::sqrt(var)).epsilon(1e-12));

  TrainConfig one = small_cfg(10, 1);
  MultiRunResult single = run_multi(ds, one);
  CHECK(single.std_test_acc == 0.0);
}

TEST_CASE("worker count does not change the emitted bytes") {
  Dataset ds = tiny_sbm({7, 7}, 0.6, 0.1, 1.2, 31);
  TrainConfig cfg = small_cfg(8, 3);
  cfg.threads = 1;
  MultiRunResult seq = run_multi(ds, cfg);
  cfg.threads = 3;
  MultiRunResult par = run_multi(ds, cfg);
  std::ostringstream a, b;
  write_metrics_ndjson(a, seq);
  write_metrics_ndjson(b, par);
  CHECK(a.str() == b.str());
}

TEST_CASE("the metrics stream carries exactly the agreed fields") {
  Dataset ds = tiny_sbm({6, 6}, 0.7, 0.1, 1.0, 37);
  TrainConfig cfg = small_cfg(2, 2);
  MultiRunResult res = run_multi(ds, cfg);
  std::ostringstream out;
  write_metrics_ndjson(out, res);
  std::istringstream lines(out.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    auto obj = nlohmann::json::parse(line);
    std::set<std::string> keys;
    for (auto it = obj.begin(); it != obj.end(); ++it) keys.insert(it.key());
    CHECK(keys == std::set<std::string>{"run", "epoch", "loss_c", "loss_r",
                                        "loss", "acc_train", "acc_val",
                                        "acc_test"});
    ++count;
  }
  CHECK(count == 4);  // 2 runs x 2 epochs
}

TEST_CASE("the ablation table has the four agreed rows in order") {
  Dataset ds = tiny_sbm({5, 5}, 1.0, 0.0, 2.0, 41);
  TrainConfig cfg = small_cfg(40, 2);
  std::vector<AblationRow> rows = run_ablation(ds, cfg);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].variant == "B");
  CHECK(rows[1].variant == "B+I");
  CHECK(rows[2].variant == "B+C");
  CHECK(rows[3].variant == "Ours");
  for (const AblationRow& r : rows) CHECK(r.runs == 2);
  // On the cleanly separable instance the full model does not trail the
  // plain backbone.
  CHECK(rows[3].mean >= rows[0].mean);

  std::ostringstream csv;
  write_ablation_csv(csv, rows);
  std::istringstream lines(csv.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header == "variant,mean,std,runs");
  int data_lines = 0;
  std::string line;
  while (std::getline(lines, line)) ++data_lines;
  CHECK(data_lines == 4);

  std::vector<AblationRow> again = run_ablation(ds, cfg);
  for (int i = 0; i < 4; ++i) {
    CHECK(rows[i].mean == again[i].mean);
    CHECK(rows[i].stddev == again[i].stddev);
  }
}

TEST_CASE("the correlation term decays over training on a learnable graph") {
  Dataset ds = tiny_sbm({12, 12, 12}, 0.5, 0.02, 1.5, 43);
  TrainConfig cfg = small_cfg(60);
  RunResult run = train(ds, cfg);
  CHECK(run.history.back().loss_r < run.history.front().loss_r);
}

TEST_CASE("summary lines render four decimals with a plus-minus") {
  CHECK(format_mean_std(0.80894, 0.0095) == "0.8089±0.0095");
  CHECK(format_mean_std(1.0, 0.0) == "1.0000±0.0000");
}
