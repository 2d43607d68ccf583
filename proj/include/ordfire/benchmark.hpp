#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ordfire/dataset.hpp"
#include "ordfire/metrics.hpp"
#include "ordfire/mlp.hpp"

namespace ordfire {

enum class LossKind { ce, wkloss, mcewk, gwdl, atbce, tdegpd };

std::string loss_name(LossKind kind);
std::optional<LossKind> parse_loss(const std::string& name);
std::vector<std::string> all_loss_names();

struct BenchmarkConfig {
  MlpConfig mlp;  // input_dim/out_dim/seed patched per run
  OptimConfig optim;
  LossConfig loss_cfg;
  std::vector<double> ratios = undersample_grid();
  int ece_bins = 10;
  int num_classes = 5;
};

struct TrainedModel {
  MlpState state;
  LossKind loss = LossKind::ce;
  Standardizer scaler;
  double best_val_iou = 0.0;
  int best_epoch = 0;
};

// Mini-batch training with early stopping on validation macro IoU.
TrainedModel train_mlp(const Dataset& train, const Dataset& val, LossKind loss,
                       const BenchmarkConfig& cfg, std::uint64_t seed);

// Class probabilities for raw (unstandardized) features: softmax rows for the
// 5-way head, truncated pmf rows for the TDeGPD head.
Matrix model_class_probs(const TrainedModel& model, const Matrix& features);

// Loss value and logit-level gradient for one batch; shared by the trainer and
// the gradient checker.
LossResult eval_loss(LossKind kind, const Matrix& logits, const LabelBatch& labels,
                     const LossConfig& cfg);

struct GroupScore {
  double iou_macro = 0.0;
  double f1_bin = 0.0;
  std::size_t count = 0;
};

struct SweepCell {
  LossKind loss = LossKind::ce;
  std::uint64_t seed = 0;
  double ratio = 1.0;
  bool failed = false;
  std::string error;
  double val_iou = 0.0;
  bool selected = false;
  std::optional<EvalReport> val_report;   // selected cells only
  std::optional<EvalReport> test_report;  // selected cells only
  std::map<std::string, GroupScore> group_scores;
};

struct SweepResult {
  std::vector<SweepCell> cells;

  const SweepCell* selected_cell(LossKind loss, std::uint64_t seed) const;
};

// The full protocol: per (loss, seed, ratio) undersample the training split,
// train, score on validation; pick the validation-IoU argmax ratio (ties to
// the larger ratio) and evaluate it on the test split globally, on the
// extreme subset, and per group.
SweepResult run_benchmark(const SplitResult& splits, const std::vector<LossKind>& losses,
                          const std::vector<std::uint64_t>& seeds, const BenchmarkConfig& cfg);

nlohmann::json sweep_to_json(const SweepResult& result);
std::string sweep_to_csv(const SweepResult& result);

struct GradCheckRow {
  LossKind loss = LossKind::ce;
  double max_rel_error = 0.0;
  bool pass = false;
};

// Central finite differences through the full loss-on-MLP composite on
// randomized toy batches; pass iff max relative error < tol.
std::vector<GradCheckRow> gradcheck(const std::vector<LossKind>& losses, int batches,
                                    std::uint64_t seed, double tol = 1e-4);

}  // namespace ordfire
