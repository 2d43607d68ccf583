#include "ordfire/losses.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "ordfire/errors.hpp"
#include "ordfire/extreme_dist.hpp"

namespace ordfire {
namespace {

constexpr double kFloor = kPmfFloor;

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix build_penalty(PenaltyKind kind, int j) {
  Matrix w(j, j);
  const double d = static_cast<double>(j - 1);
  for (int a = 0; a < j; ++a) {
    for (int b = 0; b < j; ++b) {
      const double dist = std::abs(a - b) / d;
      w(a, b) = (kind == PenaltyKind::quadratic) ? dist * dist : dist;
    }
  }
  return w;
}

}  // namespace

void LabelBatch::validate(int num_classes) const {
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw std::domain_error("LabelBatch: class index " + std::to_string(y) + " out of range");
    }
  }
  if (!weights.empty()) {
    if (weights.size() != labels.size()) {
      throw std::domain_error("LabelBatch: weights length mismatch");
    }
    bool any = false;
    for (double w : weights) {
      if (w < 0.0 || !std::isfinite(w)) throw std::domain_error("LabelBatch: invalid weight");
      any |= w > 0.0;
    }
    if (!any) throw std::domain_error("LabelBatch: all weights zero");
  }
}

PenaltyMatrix PenaltyMatrix::linear(int num_classes) {
  return {build_penalty(PenaltyKind::linear, num_classes), PenaltyKind::linear};
}

PenaltyMatrix PenaltyMatrix::quadratic(int num_classes) {
  return {build_penalty(PenaltyKind::quadratic, num_classes), PenaltyKind::quadratic};
}

PenaltyMatrix PenaltyMatrix::custom(Matrix omega) {
  if (omega.rows() != omega.cols()) throw std::domain_error("PenaltyMatrix must be square");
  for (Eigen::Index i = 0; i < omega.rows(); ++i) {
    if (omega(i, i) != 0.0) throw std::domain_error("PenaltyMatrix diagonal must be zero");
  }
  if (omega.minCoeff() < 0.0) throw std::domain_error("PenaltyMatrix entries must be >= 0");
  return {std::move(omega), PenaltyKind::custom};
}

CostMatrix CostMatrix::default5() {
  Matrix m(5, 5);
  m << 0, 1, 2, 3, 4,
       1, 0, 0.25, 0.33, 0.5,
       2, 1.25, 0, 0.25, 0.33,
       3, 1.5, 1.0, 0, 0.33,
       4, 2, 1.5, 1.0, 0;
  return {m, 0};
}

CostMatrix CostMatrix::custom(Matrix m, int background_class) {
  if (m.rows() != m.cols()) throw std::domain_error("CostMatrix must be square");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (m(i, i) != 0.0) throw std::domain_error("CostMatrix diagonal must be zero");
  }
  if (background_class < 0 || background_class >= m.rows()) {
    throw std::domain_error("CostMatrix background class out of range");
  }
  return {std::move(m), background_class};
}

void validate_prob_rows(const Matrix& probs) {
  for (Eigen::Index n = 0; n < probs.rows(); ++n) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < probs.cols(); ++c) {
      const double p = probs(n, c);
      if (!(p >= -1e-12) || !(p <= 1.0 + 1e-12)) {
        throw std::domain_error("probability entry outside [0,1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::domain_error("probability row does not sum to 1");
  }
}

Matrix softmax(const Matrix& logits) {
  if (!logits.allFinite()) throw std::domain_error("softmax: non-finite logits");
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index n = 0; n < logits.rows(); ++n) {
    const double m = logits.row(n).maxCoeff();
    out.row(n) = (logits.row(n).array() - m).exp();
    out.row(n) /= out.row(n).sum();
  }
  return out;
}

Matrix softmax_backward(const Matrix& probs, const Matrix& grad_probs) {
  Matrix out(probs.rows(), probs.cols());
  for (Eigen::Index n = 0; n < probs.rows(); ++n) {
    const double dot = probs.row(n).dot(grad_probs.row(n));
    out.row(n) = probs.row(n).array() * (grad_probs.row(n).array() - dot);
  }
  return out;
}

LossResult ce_loss(const Matrix& probs, const LabelBatch& labels) {
  const int j = static_cast<int>(probs.cols());
  const Eigen::Index n = probs.rows();
  labels.validate(j);
  if (static_cast<Eigen::Index>(labels.labels.size()) != n) {
    throw std::domain_error("ce_loss: batch size mismatch");
  }
  LossResult res;
  res.grad = probs / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels.labels[static_cast<std::size_t>(i)];
    const double p = probs(i, y);
    res.clamped |= p < kFloor;
    res.value -= std::log(std::max(p, kFloor));
    res.grad(i, y) -= 1.0 / static_cast<double>(n);
  }
  res.value /= static_cast<double>(n);
  return res;
}

LossResult wk_loss(const Matrix& probs, const LabelBatch& labels, const PenaltyMatrix& omega,
                   const LossConfig& cfg) {
  const int j = static_cast<int>(probs.cols());
  const Eigen::Index n = probs.rows();
  labels.validate(j);
  if (omega.omega.rows() != j) throw std::domain_error("wk_loss: penalty matrix size mismatch");
  if (static_cast<Eigen::Index>(labels.labels.size()) != n) {
    throw std::domain_error("wk_loss: batch size mismatch");
  }
  const Matrix& w = omega.omega;

  Eigen::VectorXd h_a = probs.colwise().sum();
  Eigen::VectorXd h_b = Eigen::VectorXd::Zero(j);
  double numer = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels.labels[static_cast<std::size_t>(i)];
    h_b(y) += 1.0;
    numer += w.col(y).dot(probs.row(i));
  }
  const Eigen::VectorXd wh_b = w * h_b;
  const double expected = h_a.dot(wh_b) / static_cast<double>(n);
  const double denom = expected + cfg.epsilon;

  LossResult res;
  res.value = numer / denom;
  res.degenerate_batch = expected <= 0.0;

  Matrix grad_p(n, j);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels.labels[static_cast<std::size_t>(i)];
    for (int c = 0; c < j; ++c) {
      const double dnum = w(c, y);
      const double dden = wh_b(c) / static_cast<double>(n);
      grad_p(i, c) = (dnum * denom - numer * dden) / (denom * denom);
    }
  }
  res.grad = softmax_backward(probs, grad_p);
  return res;
}

LossResult gwdl_loss(const Matrix& probs, const LabelBatch& labels, const CostMatrix& cost,
                     const LossConfig& cfg) {
  const int j = static_cast<int>(probs.cols());
  const Eigen::Index n = probs.rows();
  labels.validate(j);
  if (cost.m.rows() != j) throw std::domain_error("gwdl_loss: cost matrix size mismatch");
  if (static_cast<Eigen::Index>(labels.labels.size()) != n) {
    throw std::domain_error("gwdl_loss: batch size mismatch");
  }

  Eigen::VectorXd delta(n), wn(n);
  bool all_bg = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels.labels[static_cast<std::size_t>(i)];
    delta(i) = cost.m.row(y).dot(probs.row(i));
    wn(i) = cost.m(y, cost.background_class);
    all_bg &= y == cost.background_class;
  }
  const double total_error = delta.sum();
  const double tp = wn.dot(wn - delta);
  const double d = 2.0 * tp + total_error + cfg.epsilon;

  LossResult res;
  res.value = 1.0 - 2.0 * tp / d;
  res.all_background = all_bg;

  const double d2 = d * d;
  Matrix grad_p(n, j);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels.labels[static_cast<std::size_t>(i)];
    const double d_loss_d_delta =
        2.0 * ((total_error + cfg.epsilon) * wn(i) + tp) / d2;
    grad_p.row(i) = d_loss_d_delta * cost.m.row(y);
  }
  res.grad = softmax_backward(probs, grad_p);
  return res;
}

LossResult mce_loss(const Matrix& probs, const LabelBatch& labels) {
  const int j = static_cast<int>(probs.cols());
  const Eigen::Index n = probs.rows();
  labels.validate(j);
  if (static_cast<Eigen::Index>(labels.labels.size()) != n) {
    throw std::domain_error("mce_loss: batch size mismatch");
  }
  std::vector<int> count(static_cast<std::size_t>(j), 0);
  for (int y : labels.labels) ++count[static_cast<std::size_t>(y)];
  int present = 0;
  for (int c : count) present += c > 0 ? 1 : 0;

  LossResult res;
  Matrix grad_p = Matrix::Zero(n, j);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels.labels[static_cast<std::size_t>(i)];
    const double share = 1.0 / (static_cast<double>(present) *
                                static_cast<double>(count[static_cast<std::size_t>(y)]));
    const double p = probs(i, y);
    res.clamped |= p < kFloor;
    res.value -= share * std::log(std::max(p, kFloor));
    if (p >= kFloor) grad_p(i, y) = -share / p;
  }
  res.grad = softmax_backward(probs, grad_p);
  return res;
}

LossResult mcewk_loss(const Matrix& probs, const LabelBatch& labels, const LossConfig& cfg) {
  if (cfg.mcewk_c < 0.0 || cfg.mcewk_c > 1.0) {
    throw std::domain_error("mcewk_loss: C must lie in [0,1]");
  }
  const int j = static_cast<int>(probs.cols());
  const PenaltyMatrix omega = cfg.penalty_kind == PenaltyKind::quadratic
                                  ? PenaltyMatrix::quadratic(j)
                                  : PenaltyMatrix::linear(j);
  if (cfg.mcewk_c == 1.0) return wk_loss(probs, labels, omega, cfg);
  if (cfg.mcewk_c == 0.0) return mce_loss(probs, labels);

  const LossResult wk = wk_loss(probs, labels, omega, cfg);
  const LossResult mce = mce_loss(probs, labels);
  LossResult res;
  res.value = cfg.mcewk_c * wk.value + (1.0 - cfg.mcewk_c) * mce.value;
  res.grad = cfg.mcewk_c * wk.grad + (1.0 - cfg.mcewk_c) * mce.grad;
  res.degenerate_batch = wk.degenerate_batch;
  res.clamped = mce.clamped;
  return res;
}

LossResult at_bce_loss(const Matrix& probs, const LabelBatch& labels) {
  const int j = static_cast<int>(probs.cols());
  const Eigen::Index n = probs.rows();
  if (j < 2) throw std::domain_error("at_bce_loss requires at least 2 classes");
  labels.validate(j);
  if (static_cast<Eigen::Index>(labels.labels.size()) != n) {
    throw std::domain_error("at_bce_loss: batch size mismatch");
  }

  double weight_sum = 0.0;
  if (!labels.weights.empty()) {
    for (double w : labels.weights) weight_sum += w;
  }

  LossResult res;
  Matrix grad_p = Matrix::Zero(n, j);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels.labels[static_cast<std::size_t>(i)];
    const double wi = labels.weights.empty()
                          ? 1.0 / static_cast<double>(n)
                          : labels.weights[static_cast<std::size_t>(i)] / weight_sum;
    double cum = 0.0;
    // dLoss/d s_hat_k, accumulated into a suffix so each p_c picks up all k >= c
    std::vector<double> ds(static_cast<std::size_t>(j - 1), 0.0);
    for (int k = 0; k < j - 1; ++k) {
      cum += probs(i, k);
      double s_hat = 1.0 - cum;
      const double s = y > k ? 1.0 : 0.0;
      const bool clip = s_hat < kFloor || s_hat > 1.0 - kFloor;
      res.clamped |= clip;
      s_hat = std::clamp(s_hat, kFloor, 1.0 - kFloor);
      res.value += wi / (j - 1) * (-s * std::log(s_hat) - (1.0 - s) * std::log(1.0 - s_hat));
      if (!clip) {
        ds[static_cast<std::size_t>(k)] =
            wi / (j - 1) * (-s / s_hat + (1.0 - s) / (1.0 - s_hat));
      }
    }
    // p_c feeds every threshold k >= c with d s_hat_k / d p_c = -1
    double acc = 0.0;
    for (int c = j - 1; c >= 0; --c) {
      if (c <= j - 2) acc += ds[static_cast<std::size_t>(c)];
      grad_p(i, c) = -acc;
    }
  }
  res.grad = softmax_backward(probs, grad_p);
  return res;
}

Matrix tdegpd_class_probs(const Matrix& raw_params, int y_max) {
  if (raw_params.cols() != 3) throw std::domain_error("tdegpd: raw params must be N x 3");
  if (!raw_params.allFinite()) throw std::domain_error("tdegpd: non-finite raw params");
  Matrix out(raw_params.rows(), y_max + 1);
  for (Eigen::Index i = 0; i < raw_params.rows(); ++i) {
    const EgpdParams p{softplus(raw_params(i, 0)) + 1e-4, softplus(raw_params(i, 1)) + 1e-4,
                       softplus(raw_params(i, 2)) + 1e-4};
    TruncatedPmf pmf;
    try {
      pmf = tdegpd_pmf(p, y_max);
    } catch (const DegenerateDistribution& e) {
      throw DegenerateDistribution(std::string(e.what()) + " (sample " + std::to_string(i) + ")");
    }
    for (int c = 0; c <= y_max; ++c) out(i, c) = pmf.probs[static_cast<std::size_t>(c)];
  }
  return out;
}

LossResult tdegpd_loss(const Matrix& raw_params, const LabelBatch& labels, int y_max) {
  if (raw_params.cols() != 3) throw std::domain_error("tdegpd_loss: raw params must be N x 3");
  if (!raw_params.allFinite()) throw std::domain_error("tdegpd_loss: non-finite raw params");
  const Eigen::Index n = raw_params.rows();
  labels.validate(y_max + 1);
  if (static_cast<Eigen::Index>(labels.labels.size()) != n) {
    throw std::domain_error("tdegpd_loss: batch size mismatch");
  }
  LossResult res;
  res.grad = Matrix::Zero(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const EgpdParams p{softplus(raw_params(i, 0)) + 1e-4, softplus(raw_params(i, 1)) + 1e-4,
                       softplus(raw_params(i, 2)) + 1e-4};
    NllResult nll;
    try {
      nll = tdegpd_nll(p, labels.labels[static_cast<std::size_t>(i)], y_max);
    } catch (const DegenerateDistribution& e) {
      throw DegenerateDistribution(std::string(e.what()) + " (sample " + std::to_string(i) + ")");
    }
    res.value += nll.value / static_cast<double>(n);
    res.clamped |= nll.clamped;
    for (int k = 0; k < 3; ++k) {
      res.grad(i, k) = nll.grad[static_cast<std::size_t>(k)] * sigmoid(raw_params(i, k)) /
                       static_cast<double>(n);
    }
  }
  return res;
}

std::vector<int> predict_class(const Matrix& probs) {
  std::vector<int> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < probs.cols(); ++c) {
      if (probs(i, c) > probs(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw std::domain_error("matrix json must be a non-empty array");
  const std::size_t rows = j.size();
  const std::size_t cols = j.at(0).size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (j.at(i).size() != cols) throw std::domain_error("matrix json rows have unequal lengths");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j.at(i).at(c).get<double>();
    }
  }
  return m;
}

}  // namespace ordfire
