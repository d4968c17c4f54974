#include "mgcn/cli.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mgcn/dataset_io.hpp"
#include "mgcn/errors.hpp"
#include "mgcn/gradcheck.hpp"
#include "mgcn/mixview.hpp"
#include "mgcn/trainer.hpp"

namespace mgcn::cli {

namespace {

struct Options {
  std::string dataset;
  std::vector<int> sbm_blocks = {100, 100, 100};
  double sbm_pin = 0.1;
  double sbm_pout = 0.01;
  int sbm_dim = 6;
  double sbm_shift = 1.0;
  double train_frac = 0.025;
  double val_frac = 0.025;
  std::string feature_norm = "auto";  // auto | row | none
  std::string backbone = "gpr";
  std::string ablation = "full";
  std::string corr_form = "decomposed";
  std::string out_dir = "out";
  std::string config_path;
  TrainConfig cfg;
  bool lr_given = false;

  // gradcheck
  double eps = 1e-4;
  bool corrupt = false;

  // export
  std::string checkpoint_path;
  std::string similarity_out;
  std::string embeddings_out;

  // sweep
  std::string sweep_param;
  std::vector<double> sweep_grid;
};

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Per-corpus default learning rates; anything unrecognized trains at 2e-2.
double default_lr(const std::string& dataset) {
  static const std::map<std::string, double> rates = {
      {"citeseer", 1e-3}, {"dblp", 5e-2}, {"cora", 2e-2},
      {"amac", 2e-2},     {"acm", 1e-2},  {"amap", 1e-2},
  };
  std::string name = lowercase(
      std::filesystem::path(dataset).filename().string());
  auto it = rates.find(name);
  return it == rates.end() ? 2e-2 : it->second;
}

void finalize_config(Options& o) {
  if (!o.lr_given) o.cfg.lr = default_lr(o.dataset);
  o.cfg.encoder.backbone = o.backbone == "gcn2" ? EncoderConfig::Backbone::kGcn2
                                                : EncoderConfig::Backbone::kGpr;
  static const std::map<std::string, AblationVariant> variants = {
      {"B", AblationVariant::kBackboneOnly},
      {"B+I", AblationVariant::kWithMixup},
      {"B+C", AblationVariant::kWithCorrelation},
      {"full", AblationVariant::kFull},
  };
  o.cfg.ablation = variants.at(o.ablation);
  o.cfg.corr_loss_form = o.corr_form == "mean_square"
                             ? CorrelationLossForm::kMeanSquare
                             : CorrelationLossForm::kDecomposed;
  o.cfg.validate();
}

Dataset resolve_dataset(const Options& o) {
  if (o.dataset == "sbm") {
    SbmParams p;
    p.block_sizes = o.sbm_blocks;
    p.p_in = o.sbm_pin;
    p.p_out = o.sbm_pout;
    p.feature_dim = o.sbm_dim;
    p.feature_shift = o.sbm_shift;
    p.seed = o.cfg.seed;
    Dataset ds = generate_sbm(p);
    ds.splits = make_splits(ds.labels, o.train_frac, o.val_frac, o.cfg.seed);
    if (o.feature_norm == "row") row_normalize_features(ds);
    ds.validate();
    return ds;
  }
  Dataset ds = load_dataset(o.dataset, o.train_frac, o.val_frac, o.cfg.seed);
  // File corpora (bag-of-words style) train better row-normalized; synthetic
  // Gaussian features do not. "auto" picks by source.
  if (o.feature_norm == "row" || o.feature_norm == "auto") {
    row_normalize_features(ds);
  }
  return ds;
}

std::ofstream open_output(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  return out;
}

void add_sbm_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--sbm-blocks", o.sbm_blocks, "Synthetic block sizes")
      ->delimiter(',');
  cmd->add_option("--sbm-pin", o.sbm_pin, "Within-block edge probability")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--sbm-pout", o.sbm_pout, "Between-block edge probability")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--sbm-dim", o.sbm_dim, "Synthetic feature dimension")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--sbm-shift", o.sbm_shift, "Class-mean feature shift");
}

void add_dataset_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--dataset", o.dataset,
                  "Dataset directory, or 'sbm' for a synthetic graph")
      ->required();
  add_sbm_options(cmd, o);
  cmd->add_option("--train-frac", o.train_frac, "Train fraction per class")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--val-frac", o.val_frac, "Validation fraction per class")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--feature-norm", o.feature_norm,
                  "Row-normalize features: auto, row or none")
      ->check(CLI::IsMember({"auto", "row", "none"}));
}

void add_train_options(CLI::App* cmd, Options& o) {
  add_dataset_options(cmd, o);
  cmd->add_option("--lambda", o.cfg.mix_rate, "Interpolation rate")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--alpha", o.cfg.corr_weight, "Correlation loss weight")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--lr", o.cfg.lr, "Learning rate (default: per-dataset)")
      ->check(CLI::PositiveNumber)
      ->each([&o](const std::string&) { o.lr_given = true; });
  cmd->add_option("--weight-decay", o.cfg.weight_decay, "Coupled weight decay")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--epochs", o.cfg.epochs, "Training epochs")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--runs", o.cfg.runs, "Independent seeded runs")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.cfg.seed, "Base seed");
  cmd->add_option("--threads", o.cfg.threads, "Worker cap for multi-run")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--hidden-dim", o.cfg.encoder.hidden_dim, "Embedding width")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--hops", o.cfg.encoder.num_hops, "Propagation steps")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--ppr-alpha", o.cfg.encoder.ppr_alpha,
                  "Teleport rate of the hop-weight init");
  cmd->add_option("--dropout", o.cfg.encoder.dropout_rate, "Dropout rate");
  cmd->add_option("--backbone", o.backbone, "Encoder backbone")
      ->check(CLI::IsMember({"gpr", "gcn2"}));
  cmd->add_option("--ablation", o.ablation, "Model variant")
      ->check(CLI::IsMember({"B", "B+I", "B+C", "full"}));
  cmd->add_option("--corr-form", o.corr_form, "Correlation loss form")
      ->check(CLI::IsMember({"decomposed", "mean_square"}));
  cmd->add_option("--corr-batch", o.cfg.correlation_batch,
                  "Correlated nodes per epoch (0 = all)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out-dir", o.out_dir, "Output directory");
  cmd->add_option("--config", o.config_path,
                  "Flat key=value config file; explicit flags win");
}

// Applies a flat key=value config file to options the command line left
// untouched. Unknown keys, duplicates, unreadable files and invalid values
// are all usage errors. Runs inside the subcommand callback, after parsing,
// so option counts already reflect what the user typed.
void apply_config_file(CLI::App& cmd, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    s.erase(0, s.find_first_not_of(ws));
    s.erase(s.find_last_not_of(ws) + 1);
    return s;
  };
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string entry = trim(line);
    if (entry.empty() || entry[0] == '#') continue;
    auto eq = entry.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        " is not key=value: " + entry);
    }
    std::string key = trim(entry.substr(0, eq));
    std::string value = trim(entry.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ConfigError("duplicate config key " + key);
    }
    CLI::Option* opt = (key == "config" || key == "help")
                           ? nullptr
                           : cmd.get_option_no_throw("--" + key);
    if (opt == nullptr) throw ConfigError("unknown config key " + key);
    if (opt->count() > 0) continue;  // the explicit flag wins
    opt->add_result(value);
    opt->run_callback();  // converts, validates and stores like a real flag
  }
}

int run_train(CLI::App& cmd, Options& o, std::ostream& out) {
  if (!o.config_path.empty()) apply_config_file(cmd, o.config_path);
  finalize_config(o);
  Dataset ds = resolve_dataset(o);
  MultiRunResult result = run_multi(ds, o.cfg);

  std::filesystem::path dir(o.out_dir);
  auto metrics = open_output(dir / "metrics.ndjson");
  write_metrics_ndjson(metrics, result);
  metrics.flush();
  if (!metrics) throw ConfigError("write failure on metrics stream");

  // Checkpoint of the run with the best validation accuracy (earliest wins).
  std::size_t best = 0;
  for (std::size_t i = 1; i < result.runs.size(); ++i) {
    if (result.runs[i].best_val_acc > result.runs[best].best_val_acc) best = i;
  }
  save_checkpoint(result.runs[best].best_params, dir / "checkpoint.json");

  out << "test_acc " << format_mean_std(result.mean_test_acc, result.std_test_acc)
      << "\n";
  return 0;
}

int run_ablate(CLI::App& cmd, Options& o, std::ostream& out) {
  if (!o.config_path.empty()) apply_config_file(cmd, o.config_path);
  finalize_config(o);
  Dataset ds = resolve_dataset(o);
  std::vector<AblationRow> rows = run_ablation(ds, o.cfg);
  auto file = open_output(std::filesystem::path(o.out_dir) / "ablation.csv");
  write_ablation_csv(file, rows);
  file.flush();
  if (!file) throw ConfigError("write failure on ablation table");
  write_ablation_csv(out, rows);
  return 0;
}

int run_gradcheck(Options& o, std::ostream& out) {
  // Fixed desk-scale instance: 12 nodes in 3 blocks, 5 input features,
  // 8 hidden dims, 3 hops, full objective, dropout off.
  SbmParams sp;
  sp.block_sizes = {4, 4, 4};
  sp.p_in = 0.6;
  sp.p_out = 0.15;
  sp.feature_dim = 5;
  sp.feature_shift = 1.0;
  sp.seed = o.cfg.seed;
  Dataset ds = generate_sbm(sp);

  EncoderConfig enc;
  enc.hidden_dim = 8;
  enc.num_hops = 3;
  enc.dropout_rate = 0.0;
  NormAdj adj = normalize_adjacency(ds.graph);
  FeatureCache cache = FeatureCache::build(ds.features);
  EncoderParams params = init_params(ds.feature_dim(), enc.hidden_dim,
                                     ds.num_classes, enc.num_hops,
                                     enc.ppr_alpha, o.cfg.seed);
  std::vector<Parameter> param_set = params.parameters();

  Rng rng(derive_seed(o.cfg.seed, 1));
  BlockPermutation pi1 = sample_block_permutation(ds.splits, rng);
  BlockPermutation pi2 = sample_block_permutation(ds.splits, rng);
  Mat y_train = one_hot_train_labels(ds.labels, ds.splits, ds.num_classes);
  double mix_rate = o.cfg.mix_rate;
  double corr_weight = o.cfg.corr_weight;

  auto loss_fn = [&]() {
    Rng unused(0);  // dropout disabled: no draws
    DiffValue h = encode(cache, adj, params, enc, true, unused);
    DiffValue h1 = mix_embeddings(h, pi1, mix_rate);
    DiffValue h2 = mix_embeddings(h, pi2, mix_rate);
    Mat y2 = mix_labels(y_train, pi2, mix_rate, ds.splits);
    DiffValue pred = classify(select_rows(h2, ds.splits.train), params);
    DiffValue loss_c = classification_loss(pred, y2);
    DiffValue loss_r = correlation_reduction_loss(h1, h2);
    return add(loss_c, scale(loss_r, corr_weight));
  };

  GradCheckResult r =
      finite_diff_check(loss_fn, param_set, o.eps, o.corrupt ? 2.0 : 1.0);
  out << "max_rel_err " << format_double(r.max_rel_error) << "\n";
  return r.max_rel_error < 1e-4 ? 0 : 1;
}

int run_export(Options& o, std::ostream& out) {
  if (o.similarity_out.empty() && o.embeddings_out.empty()) {
    throw ConfigError("--similarity-out and/or --embeddings-out is required");
  }
  finalize_config(o);
  Dataset ds = resolve_dataset(o);
  EncoderParams params =
      EncoderParams::from_checkpoint(load_checkpoint(o.checkpoint_path));
  EncoderConfig enc = o.cfg.encoder;
  enc.num_hops = params.num_hops();  // geometry comes from the checkpoint
  if (!o.similarity_out.empty()) {
    export_similarity(params, enc, ds, o.similarity_out);
    out << "wrote " << o.similarity_out << "\n";
  }
  if (!o.embeddings_out.empty()) {
    export_embeddings(params, enc, ds, o.embeddings_out);
    out << "wrote " << o.embeddings_out << "\n";
  }
  return 0;
}

int run_sweep(CLI::App& cmd, Options& o, std::ostream& out) {
  if (!o.config_path.empty()) apply_config_file(cmd, o.config_path);
  finalize_config(o);
  if (o.sweep_grid.empty()) throw ConfigError("--grid must list at least one value");
  Dataset ds = resolve_dataset(o);

  std::string csv = "value,mean,std\n";
  for (double value : o.sweep_grid) {
    TrainConfig cfg = o.cfg;
    if (o.sweep_param == "lambda") {
      if (!(value >= 0.0 && value <= 1.0)) {
        throw ConfigError("lambda grid value " + format_double(value) +
                          " outside [0,1]");
      }
      cfg.mix_rate = value;
    } else {
      if (value < 0.0) {
        throw ConfigError("alpha grid value " + format_double(value) +
                          " is negative");
      }
      cfg.corr_weight = value;
    }
    MultiRunResult r = run_multi(ds, cfg);
    csv += format_double(value) + "," + format_double(r.mean_test_acc) + "," +
           format_double(r.std_test_acc) + "\n";
  }
  auto file = open_output(std::filesystem::path(o.out_dir) / "sweep.csv");
  file << csv;
  file.flush();
  if (!file) throw ConfigError("write failure on sweep table");
  out << csv;
  return 0;
}

int run_sbm_gen(Options& o, std::ostream& out) {
  SbmParams p;
  p.block_sizes = o.sbm_blocks;
  p.p_in = o.sbm_pin;
  p.p_out = o.sbm_pout;
  p.feature_dim = o.sbm_dim;
  p.feature_shift = o.sbm_shift;
  p.seed = o.cfg.seed;
  Dataset ds = generate_sbm(p);
  save_dataset(ds, o.out_dir);
  out << "wrote " << o.out_dir << " (" << ds.num_nodes() << " nodes, "
      << ds.graph.num_undirected_edges() << " edges)\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out) {
  CLI::App app{"Mixed-view graph contrastive node classification"};
  app.require_subcommand(1);
  Options o;
  int rc = 0;

  CLI::App* train_cmd = app.add_subcommand("train", "Train and report accuracy");
  add_train_options(train_cmd, o);
  train_cmd->callback([&, train_cmd] { rc = run_train(*train_cmd, o, out); });

  CLI::App* ablate_cmd =
      app.add_subcommand("ablate", "Compare B, B+I, B+C and the full model");
  add_train_options(ablate_cmd, o);
  ablate_cmd->callback(
      [&, ablate_cmd] { rc = run_ablate(*ablate_cmd, o, out); });

  CLI::App* grad_cmd =
      app.add_subcommand("gradcheck", "Verify gradients against finite differences");
  grad_cmd->add_option("--seed", o.cfg.seed, "Instance seed");
  grad_cmd->add_option("--eps", o.eps, "Finite-difference step")
      ->check(CLI::PositiveNumber);
  grad_cmd->add_option("--lambda", o.cfg.mix_rate, "Interpolation rate")
      ->check(CLI::Range(0.0, 1.0));
  grad_cmd->add_option("--alpha", o.cfg.corr_weight, "Correlation loss weight")
      ->check(CLI::NonNegativeNumber);
  grad_cmd->add_flag("--corrupt", o.corrupt,
                     "Mis-scale the analytic gradient to prove the check fires");
  grad_cmd->callback([&] { rc = run_gradcheck(o, out); });

  CLI::App* export_cmd =
      app.add_subcommand("export", "Write similarity/embedding artifacts");
  add_dataset_options(export_cmd, o);
  export_cmd->add_option("--checkpoint", o.checkpoint_path, "Checkpoint JSON")
      ->required();
  export_cmd->add_option("--similarity-out", o.similarity_out,
                         "Similarity matrix CSV path");
  export_cmd->add_option("--embeddings-out", o.embeddings_out,
                         "Embedding CSV path");
  export_cmd->add_option("--seed", o.cfg.seed, "Split seed");
  export_cmd->add_option("--backbone", o.backbone, "Encoder backbone")
      ->check(CLI::IsMember({"gpr", "gcn2"}));
  export_cmd->callback([&] { rc = run_export(o, out); });

  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "Grid over one hyperparameter");
  add_train_options(sweep_cmd, o);
  sweep_cmd->add_option("--param", o.sweep_param, "Swept hyperparameter")
      ->check(CLI::IsMember({"lambda", "alpha"}))
      ->required();
  sweep_cmd->add_option("--grid", o.sweep_grid, "Comma-separated values")
      ->delimiter(',')
      ->required();
  sweep_cmd->callback([&, sweep_cmd] { rc = run_sweep(*sweep_cmd, o, out); });

  CLI::App* gen_cmd = app.add_subcommand("sbm-gen", "Write a synthetic dataset");
  add_sbm_options(gen_cmd, o);
  gen_cmd->add_option("--seed", o.cfg.seed, "Generator seed");
  gen_cmd->add_option("--out", o.out_dir, "Output directory")->required();
  gen_cmd->callback([&] { rc = run_sbm_gen(o, out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, out);
    return code == 0 ? 0 : 2;
  } catch (const TrainingAbort& e) {
    out << "error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    out << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    return 3;
  }
  return rc;
}

}  // namespace mgcn::cli
