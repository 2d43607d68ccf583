#pragma once

#include <Eigen/Dense>
#include <vector>

#include "json.hpp"

namespace ordfire {

using Matrix = Eigen::MatrixXd;

// N class indices in {0..J-1}, optionally with per-sample weights.
struct LabelBatch {
  std::vector<int> labels;
  std::vector<double> weights;  // empty means unweighted

  void validate(int num_classes) const;
};

enum class PenaltyKind { linear, quadratic, custom };

// Ordinal disagreement weights omega, zero diagonal, growing with |i - j|.
struct PenaltyMatrix {
  Matrix omega;
  PenaltyKind kind = PenaltyKind::linear;

  static PenaltyMatrix linear(int num_classes);
  static PenaltyMatrix quadratic(int num_classes);
  static PenaltyMatrix custom(Matrix omega);
};

// Inter-class confusion costs with a designated background class.
struct CostMatrix {
  Matrix m;
  int background_class = 0;

  // The empirically retained 5x5 matrix, background class 0.
  static CostMatrix default5();
  static CostMatrix custom(Matrix m, int background_class);
};

struct LossConfig {
  double epsilon = 1e-8;
  double mcewk_c = 0.7;
  PenaltyKind penalty_kind = PenaltyKind::quadratic;
};

struct LossResult {
  double value = 0.0;
  Matrix grad;                  // w.r.t. logits (or raw params for the TDeGPD head)
  bool degenerate_batch = false;
  bool all_background = false;
  bool clamped = false;
};

// Row-wise exp-normalize with max subtraction.
Matrix softmax(const Matrix& logits);

// Chain an upstream gradient in probability space back to logits.
Matrix softmax_backward(const Matrix& probs, const Matrix& grad_probs);

LossResult ce_loss(const Matrix& probs, const LabelBatch& labels);

LossResult wk_loss(const Matrix& probs, const LabelBatch& labels, const PenaltyMatrix& omega,
                   const LossConfig& cfg = {});

LossResult gwdl_loss(const Matrix& probs, const LabelBatch& labels, const CostMatrix& m,
                     const LossConfig& cfg = {});

// Macro-averaged per-class cross-entropy; the class-presence term of MCEWK.
LossResult mce_loss(const Matrix& probs, const LabelBatch& labels);

LossResult mcewk_loss(const Matrix& probs, const LabelBatch& labels, const LossConfig& cfg = {});

// All-threshold binary cross-entropy over the J-1 cumulative exceedance tasks.
LossResult at_bce_loss(const Matrix& probs, const LabelBatch& labels);

// Truncated discrete eGPD negative log-likelihood on raw (pre-link) parameter
// triples; gradient is w.r.t. the raw values.
LossResult tdegpd_loss(const Matrix& raw_params, const LabelBatch& labels, int y_max = 4);

// Raw triples -> class pmf rows via the positivity link and the truncated pmf.
Matrix tdegpd_class_probs(const Matrix& raw_params, int y_max = 4);

// Row-wise argmax, ties broken toward the lower class index.
std::vector<int> predict_class(const Matrix& probs);

void validate_prob_rows(const Matrix& probs);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace ordfire
