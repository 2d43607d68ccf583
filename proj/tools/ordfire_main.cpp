#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ordfire/benchmark.hpp"
#include "ordfire/dataset.hpp"
#include "ordfire/errors.hpp"

namespace {

constexpr const char* kToolVersion = "1.0.0";

struct IoFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reports stay byte-identical across reruns, so wall-clock timing goes to
// stderr instead of into the canonical JSON.
struct StopWatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  ~StopWatch() {
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    std::cerr << "duration_ms " << ms << '\n';
  }
};

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

std::filesystem::path resolve_out(const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("ORDFIRE_OUT_DIR")) p = std::filesystem::path(dir) / p;
  }
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  return p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoFailure("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open for reading: " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  const nlohmann::json j = nlohmann::json::parse(read_text(path));
  if (!j.is_object()) throw std::invalid_argument("config file must hold a JSON object");
  return j;
}

// flags > config file > defaults
template <typename T>
void apply_config(const CLI::App& cmd, const nlohmann::json& cfg, const std::string& flag,
                  const std::string& key, T& var) {
  if (cmd.count(flag) == 0 && cfg.contains(key)) var = cfg.at(key).get<T>();
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoull(tok));
  }
  if (out.empty()) throw std::invalid_argument("empty seed list");
  return out;
}

std::vector<ordfire::LossKind> parse_loss_list(const std::string& s) {
  std::vector<ordfire::LossKind> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    const auto kind = ordfire::parse_loss(tok);
    if (!kind) {
      std::string names;
      for (const auto& n : ordfire::all_loss_names()) names += (names.empty() ? "" : ", ") + n;
      throw std::invalid_argument("unknown loss '" + tok + "' (valid: " + names + ")");
    }
    out.push_back(*kind);
  }
  if (out.empty()) throw std::invalid_argument("empty loss list");
  return out;
}

ordfire::TimeRange parse_range(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("range must look like lo:hi");
  ordfire::TimeRange r;
  r.lo = std::stoi(s.substr(0, colon));
  r.hi = std::stoi(s.substr(colon + 1));
  if (r.hi < r.lo) throw std::invalid_argument("range must be ascending: " + s);
  return r;
}

nlohmann::json meta_block(const nlohmann::json& effective_config,
                          const std::vector<std::uint64_t>& seeds) {
  nlohmann::json meta;
  meta["tool_version"] = kToolVersion;
  meta["config_hash"] = fnv1a_hex(effective_config.dump());
  meta["seeds"] = seeds;
  return meta;
}

ordfire::Dataset load_dataset(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoFailure("no such file: " + path);
  return ordfire::load_csv(path);
}

ordfire::SeverityScheme load_scheme(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoFailure("no such file: " + path);
  return ordfire::SeverityScheme::from_json(nlohmann::json::parse(read_text(path)));
}

// Shared hyperparameter flags for train and sweep.
struct TrainFlags {
  std::string data, scheme, config;
  std::string train_range = "0:5", val_range = "6:7", test_range = "8:9";
  int epochs = 300, patience = 20, batch_size = 64;
  int hidden1 = 128, hidden2 = 256, embed = 64;
  double lr = 1e-3;
  std::string optimizer = "adam";

  void attach(CLI::App& cmd) {
    cmd.add_option("--data", data, "input dataset CSV")->required();
    cmd.add_option("--scheme", scheme, "severity scheme JSON")->required();
    cmd.add_option("--config", config, "JSON config file (flags take precedence)");
    cmd.add_option("--train-range", train_range, "training time_key range lo:hi");
    cmd.add_option("--val-range", val_range, "validation time_key range lo:hi");
    cmd.add_option("--test-range", test_range, "test time_key range lo:hi");
    cmd.add_option("--epochs", epochs, "max training epochs");
    cmd.add_option("--patience", patience, "early-stopping patience");
    cmd.add_option("--batch-size", batch_size, "mini-batch size");
    cmd.add_option("--lr", lr, "learning rate");
    cmd.add_option("--optimizer", optimizer, "sgd or adam")
        ->check(CLI::IsMember({"sgd", "adam"}));
    cmd.add_option("--hidden1", hidden1, "first hidden width");
    cmd.add_option("--hidden2", hidden2, "second hidden width");
    cmd.add_option("--embed", embed, "embedding width");
  }

  void absorb_config(const CLI::App& cmd, const nlohmann::json& cfg) {
    apply_config(cmd, cfg, "--train-range", "train_range", train_range);
    apply_config(cmd, cfg, "--val-range", "val_range", val_range);
    apply_config(cmd, cfg, "--test-range", "test_range", test_range);
    apply_config(cmd, cfg, "--epochs", "epochs", epochs);
    apply_config(cmd, cfg, "--patience", "patience", patience);
    apply_config(cmd, cfg, "--batch-size", "batch_size", batch_size);
    apply_config(cmd, cfg, "--lr", "lr", lr);
    apply_config(cmd, cfg, "--optimizer", "optimizer", optimizer);
    apply_config(cmd, cfg, "--hidden1", "hidden1", hidden1);
    apply_config(cmd, cfg, "--hidden2", "hidden2", hidden2);
    apply_config(cmd, cfg, "--embed", "embed", embed);
  }

  ordfire::BenchmarkConfig benchmark_config() const {
    ordfire::BenchmarkConfig cfg;
    cfg.mlp.hidden1 = hidden1;
    cfg.mlp.hidden2 = hidden2;
    cfg.mlp.embed = embed;
    cfg.optim.kind = optimizer == "sgd" ? ordfire::OptimKind::sgd : ordfire::OptimKind::adam;
    cfg.optim.learning_rate = lr;
    cfg.optim.batch_size = batch_size;
    cfg.optim.max_epochs = epochs;
    cfg.optim.patience = patience;
    return cfg;
  }

  nlohmann::json effective_config() const {
    return {{"train_range", train_range}, {"val_range", val_range},
            {"test_range", test_range},   {"epochs", epochs},
            {"patience", patience},       {"batch_size", batch_size},
            {"lr", lr},                   {"optimizer", optimizer},
            {"hidden1", hidden1},         {"hidden2", hidden2},
            {"embed", embed}};
  }
};

// Splits, prunes on the training split only, applies the kept columns
// everywhere.
ordfire::SplitResult prepare_splits(ordfire::Dataset data, const ordfire::SeverityScheme& scheme,
                                    const TrainFlags& flags) {
  ordfire::apply_scheme(data, scheme);
  ordfire::SplitResult splits =
      ordfire::split_by_time(data, parse_range(flags.train_range), parse_range(flags.val_range),
                             parse_range(flags.test_range));
  const ordfire::PruneLog log = ordfire::prune_features(splits.train);
  for (const std::string& d : log.dropped) std::cerr << "pruned " << d << '\n';
  splits.train = ordfire::select_features(splits.train, log.kept_columns);
  splits.val = ordfire::select_features(splits.val, log.kept_columns);
  splits.test = ordfire::select_features(splits.test, log.kept_columns);
  return splits;
}

int cmd_gen(const CLI::App& cmd, ordfire::SyntheticConfig gen, const std::string& config_path,
            std::string out, std::string scheme_out) {
  const nlohmann::json cfg = load_config(config_path);
  apply_config(cmd, cfg, "--n", "n", gen.n);
  apply_config(cmd, cfg, "--d", "d", gen.d);
  apply_config(cmd, cfg, "--sigma", "sigma", gen.params.sigma);
  apply_config(cmd, cfg, "--kappa", "kappa", gen.params.kappa);
  apply_config(cmd, cfg, "--xi", "xi", gen.params.xi);
  apply_config(cmd, cfg, "--zero-fraction", "zero_fraction", gen.zero_fraction);
  apply_config(cmd, cfg, "--seed", "seed", gen.seed);
  apply_config(cmd, cfg, "--periods", "periods", gen.periods);
  apply_config(cmd, cfg, "--groups", "groups", gen.groups);
  apply_config(cmd, cfg, "--out", "out", out);
  apply_config(cmd, cfg, "--scheme-out", "scheme_out", scheme_out);
  if (out.empty()) throw std::invalid_argument("--out is required");
  if (!(gen.zero_fraction > 0.0 && gen.zero_fraction < 1.0)) {
    throw std::invalid_argument("--zero-fraction must lie strictly between 0 and 1");
  }

  const ordfire::SyntheticResult r = ordfire::generate_synthetic(gen);
  ordfire::save_csv(r.data, resolve_out(out).string());
  if (r.fraction_adjusted) std::cerr << "zero fraction lowered to obtain enough positives\n";

  std::array<std::size_t, 5> hist{};
  for (int c : r.data.classes) hist[static_cast<std::size_t>(c)]++;
  for (int c = 0; c < 5; ++c) {
    std::cout << "class " << c << ": " << hist[static_cast<std::size_t>(c)] << '\n';
  }
  if (!scheme_out.empty()) {
    write_text(resolve_out(scheme_out), r.scheme.to_json().dump(2) + "\n");
  }
  return 0;
}

int cmd_fit_scheme(const CLI::App& cmd, std::string in, std::string method, bool use_sqrt,
                   std::string q_list, std::string out, const std::string& config_path) {
  const nlohmann::json cfg = load_config(config_path);
  apply_config(cmd, cfg, "--in", "in", in);
  apply_config(cmd, cfg, "--method", "method", method);
  apply_config(cmd, cfg, "--sqrt", "sqrt", use_sqrt);
  apply_config(cmd, cfg, "--q", "q", q_list);
  apply_config(cmd, cfg, "--out", "out", out);
  if (in.empty() || out.empty()) throw std::invalid_argument("--in and --out are required");

  const ordfire::Dataset data = load_dataset(in);
  const ordfire::SchemeTransform transform =
      use_sqrt ? ordfire::SchemeTransform::sqrt : ordfire::SchemeTransform::identity;

  ordfire::SeverityScheme scheme;
  if (method == "kmeans") {
    scheme = ordfire::fit_kmeans_scheme(data.magnitudes, transform);
  } else if (method == "egpd") {
    const std::vector<double> q = parse_double_list(q_list);
    if (q.size() != 3) throw std::invalid_argument("--q needs exactly three quantiles");
    scheme = ordfire::fit_egpd_scheme(data.magnitudes, {q[0], q[1], q[2]}, {}, transform);
  } else {
    throw std::invalid_argument("--method must be kmeans or egpd");
  }

  const ordfire::ClassifiedSeries classes = ordfire::classify(scheme, data.magnitudes);
  std::vector<double> pos_vals;
  ordfire::ClassifiedSeries pos_classes;
  for (std::size_t i = 0; i < data.magnitudes.size(); ++i) {
    if (classes.classes[i] == 0) continue;
    const double m = data.magnitudes[i];
    pos_vals.push_back(transform == ordfire::SchemeTransform::sqrt ? std::sqrt(m) : m);
    pos_classes.classes.push_back(classes.classes[i]);
  }
  try {
    std::cout << "silhouette " << ordfire::silhouette_1d(pos_vals, pos_classes) << '\n';
  } catch (const std::domain_error&) {
    std::cout << "silhouette n/a\n";
  }
  write_text(resolve_out(out), scheme.to_json().dump(2) + "\n");
  return 0;
}

int cmd_train(const CLI::App& cmd, TrainFlags flags, std::string loss_str, std::uint64_t seed,
              double ratio, std::string out, std::string report_path) {
  const nlohmann::json cfg = load_config(flags.config);
  flags.absorb_config(cmd, cfg);
  apply_config(cmd, cfg, "--loss", "loss", loss_str);
  apply_config(cmd, cfg, "--seed", "seed", seed);
  apply_config(cmd, cfg, "--ratio", "ratio", ratio);
  apply_config(cmd, cfg, "--out", "out", out);
  apply_config(cmd, cfg, "--report", "report", report_path);
  if (ratio <= 0.0 || ratio > 1.0) throw std::invalid_argument("--ratio must lie in (0, 1]");

  const std::vector<ordfire::LossKind> kinds = parse_loss_list(loss_str);
  if (kinds.size() != 1) throw std::invalid_argument("train takes exactly one --loss");
  const ordfire::LossKind loss = kinds[0];

  const ordfire::SplitResult splits =
      prepare_splits(load_dataset(flags.data), load_scheme(flags.scheme), flags);
  const ordfire::BenchmarkConfig bench = flags.benchmark_config();
  const ordfire::Dataset sub = ordfire::undersample_class0(splits.train, ratio, seed);
  const ordfire::TrainedModel model = ordfire::train_mlp(sub, splits.val, loss, bench, seed);

  nlohmann::json effective = flags.effective_config();
  effective["loss"] = loss_str;
  effective["ratio"] = ratio;
  const nlohmann::json meta = meta_block(effective, {seed});

  if (!out.empty()) {
    nlohmann::json ckpt;
    ckpt["meta"] = meta;
    ckpt["loss"] = ordfire::loss_name(loss);
    ckpt["state"] = model.state.to_json();
    ckpt["scaler"] = {{"mean", std::vector<double>(model.scaler.mean.begin(),
                                                   model.scaler.mean.end())},
                      {"scale", std::vector<double>(model.scaler.scale.begin(),
                                                    model.scaler.scale.end())}};
    ckpt["best_val_iou"] = model.best_val_iou;
    ckpt["best_epoch"] = model.best_epoch;
    write_text(resolve_out(out), ckpt.dump(2) + "\n");
  }
  if (!report_path.empty()) {
    const ordfire::Matrix probs = ordfire::model_class_probs(model, splits.test.features);
    nlohmann::json report;
    report["meta"] = meta;
    report["loss"] = ordfire::loss_name(loss);
    report["best_val_iou"] = model.best_val_iou;
    report["test_report"] = ordfire::evaluate(splits.test.classes, probs, bench.ece_bins).to_json();
    write_text(resolve_out(report_path), report.dump(2) + "\n");
  }
  std::cout << "best_val_iou " << model.best_val_iou << " at epoch " << model.best_epoch << '\n';
  return 0;
}

int cmd_sweep(const CLI::App& cmd, TrainFlags flags, std::string losses_str,
              std::string seeds_str, std::string ratios_str, std::string out_json,
              std::string out_csv, std::string calib_dir) {
  const nlohmann::json cfg = load_config(flags.config);
  flags.absorb_config(cmd, cfg);
  apply_config(cmd, cfg, "--losses", "losses", losses_str);
  apply_config(cmd, cfg, "--seeds", "seeds", seeds_str);
  apply_config(cmd, cfg, "--ratios", "ratios", ratios_str);
  apply_config(cmd, cfg, "--out-json", "out_json", out_json);
  apply_config(cmd, cfg, "--out-csv", "out_csv", out_csv);
  apply_config(cmd, cfg, "--calib-dir", "calib_dir", calib_dir);
  if (out_json.empty()) throw std::invalid_argument("--out-json is required");

  const std::vector<ordfire::LossKind> losses = parse_loss_list(losses_str);
  const std::vector<std::uint64_t> seeds = parse_seed_list(seeds_str);
  ordfire::BenchmarkConfig bench = flags.benchmark_config();
  if (!ratios_str.empty()) bench.ratios = parse_double_list(ratios_str);

  const ordfire::SplitResult splits =
      prepare_splits(load_dataset(flags.data), load_scheme(flags.scheme), flags);
  const ordfire::SweepResult sweep = ordfire::run_benchmark(splits, losses, seeds, bench);

  nlohmann::json effective = flags.effective_config();
  effective["losses"] = losses_str;
  effective["seeds"] = seeds_str;
  effective["ratios"] = bench.ratios;

  nlohmann::json report = ordfire::sweep_to_json(sweep);
  report["meta"] = meta_block(effective, seeds);
  write_text(resolve_out(out_json), report.dump(2) + "\n");
  if (!out_csv.empty()) write_text(resolve_out(out_csv), ordfire::sweep_to_csv(sweep));

  if (!calib_dir.empty()) {
    for (const ordfire::SweepCell& cell : sweep.cells) {
      if (!cell.selected || !cell.test_report) continue;
      for (int c = 0; c < bench.num_classes; ++c) {
        std::ostringstream name;
        name << "calib_" << ordfire::loss_name(cell.loss) << "_seed" << cell.seed << "_class" << c
             << ".csv";
        write_text(resolve_out((std::filesystem::path(calib_dir) / name.str()).string()),
                   cell.test_report->calibration_csv(c));
      }
    }
  }
  std::cout << "cells " << sweep.cells.size() << '\n';
  return 0;
}

int cmd_gradcheck(const CLI::App& cmd, std::string losses_str, int batches, std::uint64_t seed,
                  double tol, const std::string& config_path) {
  const nlohmann::json cfg = load_config(config_path);
  apply_config(cmd, cfg, "--losses", "losses", losses_str);
  apply_config(cmd, cfg, "--batches", "batches", batches);
  apply_config(cmd, cfg, "--seed", "seed", seed);
  apply_config(cmd, cfg, "--tol", "tol", tol);
  if (batches <= 0) throw std::invalid_argument("--batches must be positive");

  const std::vector<ordfire::GradCheckRow> rows =
      ordfire::gradcheck(parse_loss_list(losses_str), batches, seed, tol);
  bool all_pass = true;
  for (const ordfire::GradCheckRow& row : rows) {
    std::cout << ordfire::loss_name(row.loss) << " max_rel_error " << row.max_rel_error << ' '
              << (row.pass ? "PASS" : "FAIL") << '\n';
    all_pass = all_pass && row.pass;
  }
  return all_pass ? 0 : 1;
}

std::string join_names() {
  std::string names;
  for (const auto& n : ordfire::all_loss_names()) names += (names.empty() ? "" : ",") + n;
  return names;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ordinal severity loss benchmark harness"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset CSV");
  ordfire::SyntheticConfig gen_cfg;
  std::string gen_out, gen_scheme_out, gen_config;
  gen->add_option("--n", gen_cfg.n, "number of rows");
  gen->add_option("--d", gen_cfg.d, "number of features");
  gen->add_option("--sigma", gen_cfg.params.sigma, "magnitude scale");
  gen->add_option("--kappa", gen_cfg.params.kappa, "magnitude shape kappa");
  gen->add_option("--xi", gen_cfg.params.xi, "magnitude tail index");
  gen->add_option("--zero-fraction", gen_cfg.zero_fraction, "target share of zero-magnitude rows");
  gen->add_option("--seed", gen_cfg.seed, "generator seed");
  gen->add_option("--periods", gen_cfg.periods, "distinct time_key values");
  gen->add_option("--groups", gen_cfg.groups, "distinct group_key values");
  gen->add_option("--out", gen_out, "output CSV path");
  gen->add_option("--scheme-out", gen_scheme_out, "also write the generator scheme JSON");
  gen->add_option("--config", gen_config, "JSON config file (flags take precedence)");

  // fit-scheme
  auto* fit = app.add_subcommand("fit-scheme", "fit a severity scheme from magnitudes");
  std::string fit_in, fit_method = "kmeans", fit_q = "0.3,0.6,0.9", fit_out, fit_config;
  bool fit_sqrt = false;
  fit->add_option("--in", fit_in, "input dataset CSV");
  fit->add_option("--method", fit_method, "kmeans or egpd")
      ->check(CLI::IsMember({"kmeans", "egpd"}));
  fit->add_flag("--sqrt", fit_sqrt, "cluster on the square-root scale");
  fit->add_option("--q", fit_q, "egpd quantiles, comma separated");
  fit->add_option("--out", fit_out, "output scheme JSON path");
  fit->add_option("--config", fit_config, "JSON config file (flags take precedence)");

  // train
  auto* train = app.add_subcommand("train", "train one model and report on the test split");
  TrainFlags train_flags;
  train_flags.attach(*train);
  std::string train_loss = "ce", train_out, train_report;
  std::uint64_t train_seed = 0;
  double train_ratio = 1.0;
  train->add_option("--loss", train_loss, "loss name (" + join_names() + ")");
  train->add_option("--seed", train_seed, "training seed");
  train->add_option("--ratio", train_ratio, "class-0 undersampling keep ratio");
  train->add_option("--out", train_out, "checkpoint JSON path");
  train->add_option("--report", train_report, "evaluation report JSON path");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run the undersampling benchmark sweep");
  TrainFlags sweep_flags;
  sweep_flags.attach(*sweep);
  std::string sweep_losses = join_names(), sweep_seeds = "0", sweep_ratios;
  std::string sweep_out_json, sweep_out_csv, sweep_calib_dir;
  sweep->add_option("--losses", sweep_losses, "comma-separated loss names");
  sweep->add_option("--seeds", sweep_seeds, "comma-separated training seeds");
  sweep->add_option("--ratios", sweep_ratios, "override the 18-point undersampling grid");
  sweep->add_option("--out-json", sweep_out_json, "sweep report JSON path");
  sweep->add_option("--out-csv", sweep_out_csv, "sweep report CSV path");
  sweep->add_option("--calib-dir", sweep_calib_dir, "directory for per-class calibration CSVs");

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every loss on the MLP");
  std::string gc_losses = join_names(), gc_config;
  int gc_batches = 100;
  std::uint64_t gc_seed = 0;
  double gc_tol = 1e-4;
  gc->add_option("--losses", gc_losses, "comma-separated loss names");
  gc->add_option("--batches", gc_batches, "randomized batches per loss");
  gc->add_option("--seed", gc_seed, "rng seed");
  gc->add_option("--tol", gc_tol, "max relative error tolerance");
  gc->add_option("--config", gc_config, "JSON config file (flags take precedence)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    StopWatch watch;
    if (gen->parsed()) return cmd_gen(*gen, gen_cfg, gen_config, gen_out, gen_scheme_out);
    if (fit->parsed()) {
      return cmd_fit_scheme(*fit, fit_in, fit_method, fit_sqrt, fit_q, fit_out, fit_config);
    }
    if (train->parsed()) {
      return cmd_train(*train, train_flags, train_loss, train_seed, train_ratio, train_out,
                       train_report);
    }
    if (sweep->parsed()) {
      return cmd_sweep(*sweep, sweep_flags, sweep_losses, sweep_seeds, sweep_ratios,
                       sweep_out_json, sweep_out_csv, sweep_calib_dir);
    }
    if (gc->parsed()) return cmd_gradcheck(*gc, gc_losses, gc_batches, gc_seed, gc_tol, gc_config);
    return 2;
  } catch (const ordfire::InsufficientData& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const ordfire::DegenerateSample& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const IoFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
