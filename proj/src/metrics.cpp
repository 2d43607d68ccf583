#include "ordfire/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ordfire {

Matrix ConfusionMatrix::row_normalized() const {
  Matrix out = counts;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double s = out.row(r).sum();
    if (s > 0.0) out.row(r) /= s;
  }
  return out;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> pred,
                          int num_classes) {
  if (truth.size() != pred.size()) throw std::domain_error("confusion: length mismatch");
  ConfusionMatrix cm;
  cm.counts = Matrix::Zero(num_classes, num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = pred[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes) {
      throw std::domain_error("confusion: class index out of range at row " + std::to_string(i));
    }
    cm.counts(t, p) += 1.0;
  }
  return cm;
}

BinaryScores binary_scores(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size() || truth.empty()) {
    throw std::domain_error("binary_scores: empty or mismatched input");
  }
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] > 0, p = pred[i] > 0;
    tp += t && p;
    fp += !t && p;
    fn += t && !p;
  }
  BinaryScores s;
  if (tp + fp == 0.0 || tp + fn == 0.0) s.undefined = tp == 0.0;
  s.precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
  s.recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                                      : 0.0;
  return s;
}

IouScores iou(std::span<const int> truth, std::span<const int> pred, int num_classes) {
  if (truth.size() != pred.size() || truth.empty()) {
    throw std::domain_error("iou: empty or mismatched input");
  }
  std::vector<double> tp(static_cast<std::size_t>(num_classes), 0.0);
  std::vector<double> fp = tp, fn = tp;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = pred[i];
    if (t == p) {
      tp[static_cast<std::size_t>(t)] += 1.0;
    } else {
      fn[static_cast<std::size_t>(t)] += 1.0;
      fp[static_cast<std::size_t>(p)] += 1.0;
    }
  }
  IouScores out;
  out.per_class.resize(static_cast<std::size_t>(num_classes), 0.0);
  out.class_present.resize(static_cast<std::size_t>(num_classes), false);
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    const std::size_t u = static_cast<std::size_t>(c);
    const double denom = tp[u] + fp[u] + fn[u];
    if (denom == 0.0) continue;  // class absent from both sides
    out.class_present[u] = true;
    out.per_class[u] = tp[u] / denom;
    sum += out.per_class[u];
    ++present;
  }
  out.macro = present > 0 ? sum / present : 0.0;
  return out;
}

std::vector<std::size_t> extreme_subset(std::span<const int> truth, std::span<const int> pred) {
  if (truth.size() != pred.size()) throw std::domain_error("extreme_subset: length mismatch");
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= 3 || pred[i] >= 3) idx.push_back(i);
  }
  return idx;
}

double ordinal_error(const ConfusionMatrix& cm, const PenaltyMatrix& omega, double epsilon) {
  const double n = cm.total();
  if (n <= 0.0) throw std::domain_error("ordinal_error: empty confusion matrix");
  if (omega.omega.rows() != cm.counts.rows()) {
    throw std::domain_error("ordinal_error: penalty matrix size mismatch");
  }
  const double observed = (omega.omega.array() * cm.counts.array()).sum();
  const Eigen::VectorXd rows = cm.counts.rowwise().sum();
  const Eigen::VectorXd cols = cm.counts.colwise().sum();
  const double expected = rows.dot(omega.omega * cols) / n;
  return observed / (expected + epsilon);
}

EceResult ece(std::span<const double> confidences, const std::vector<bool>& correct, int num_bins) {
  if (num_bins < 1) throw std::domain_error("ece: need at least one bin");
  if (confidences.size() != correct.size()) throw std::domain_error("ece: length mismatch");
  EceResult out;
  out.bins.resize(static_cast<std::size_t>(num_bins));
  for (int b = 0; b < num_bins; ++b) {
    out.bins[static_cast<std::size_t>(b)].lo = static_cast<double>(b) / num_bins;
    out.bins[static_cast<std::size_t>(b)].hi = static_cast<double>(b + 1) / num_bins;
  }
  std::vector<double> conf_sum(static_cast<std::size_t>(num_bins), 0.0);
  std::vector<double> hit_sum = conf_sum;
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double c = confidences[i];
    if (!(c >= 0.0) || !(c <= 1.0)) throw std::domain_error("ece: confidence outside [0,1]");
    int b = std::min(static_cast<int>(c * num_bins), num_bins - 1);
    ++out.bins[static_cast<std::size_t>(b)].count;
    conf_sum[static_cast<std::size_t>(b)] += c;
    hit_sum[static_cast<std::size_t>(b)] += correct[i] ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(confidences.size());
  for (int b = 0; b < num_bins; ++b) {
    auto& bin = out.bins[static_cast<std::size_t>(b)];
    if (bin.count == 0) continue;
    bin.mean_confidence = conf_sum[static_cast<std::size_t>(b)] / static_cast<double>(bin.count);
    bin.empirical_frequency = hit_sum[static_cast<std::size_t>(b)] / static_cast<double>(bin.count);
    out.value += static_cast<double>(bin.count) / n *
                 std::abs(bin.empirical_frequency - bin.mean_confidence);
  }
  return out;
}

EvalReport evaluate(std::span<const int> truth, const Matrix& probs, int ece_bins) {
  const int j = static_cast<int>(probs.cols());
  if (static_cast<Eigen::Index>(truth.size()) != probs.rows()) {
    throw std::domain_error("evaluate: batch size mismatch");
  }
  validate_prob_rows(probs);
  const std::vector<int> pred = predict_class(probs);
  const PenaltyMatrix omega = PenaltyMatrix::linear(j);

  EvalReport rep;
  rep.confusion = confusion(truth, pred, j);
  const BinaryScores bin = binary_scores(truth, pred);
  rep.f1_bin = bin.f1;
  rep.prec_bin = bin.precision;
  rep.rec_bin = bin.recall;
  rep.binary_undefined = bin.undefined;
  const IouScores is = iou(truth, pred, j);
  rep.iou_per_class = is.per_class;
  rep.iou_macro = is.macro;
  rep.ordinal_err = ordinal_error(rep.confusion, omega);

  const std::vector<std::size_t> ext = extreme_subset(truth, pred);
  rep.extreme_present = !ext.empty();
  if (rep.extreme_present) {
    std::vector<int> et, ep;
    double dist = 0.0;
    int miss = 0;
    for (std::size_t i : ext) {
      et.push_back(truth[i]);
      ep.push_back(pred[i]);
      if (truth[i] != pred[i]) {
        dist += std::abs(truth[i] - pred[i]);
        ++miss;
      }
    }
    rep.iou_extreme = iou(et, ep, j).macro;
    rep.ordinal_err_extreme = ordinal_error(confusion(et, ep, j), omega);
    rep.f1_bin_extreme = binary_scores(et, ep).f1;
    rep.extreme_miss_distance = miss > 0 ? dist / miss : 0.0;
  }

  std::vector<double> conf(truth.size());
  std::vector<bool> hit(truth.size());
  for (int c = 0; c < j; ++c) {
    for (std::size_t i = 0; i < truth.size(); ++i) {
      conf[i] = std::clamp(probs(static_cast<Eigen::Index>(i), c), 0.0, 1.0);
      hit[i] = truth[i] == c;
    }
    const EceResult r = ece(conf, hit, ece_bins);
    rep.ece_per_class.push_back(r.value);
    rep.calibration.push_back(r.bins);
  }
  return rep;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["confusion"] = matrix_to_json(confusion.counts);
  j["f1_bin"] = f1_bin;
  j["prec_bin"] = prec_bin;
  j["rec_bin"] = rec_bin;
  j["binary_undefined"] = binary_undefined;
  j["iou_per_class"] = iou_per_class;
  j["iou_macro"] = iou_macro;
  j["ordinal_error"] = ordinal_err;
  j["extreme_present"] = extreme_present;
  j["iou_extreme"] = extreme_present ? nlohmann::json(iou_extreme) : nlohmann::json(nullptr);
  j["ordinal_error_extreme"] =
      extreme_present ? nlohmann::json(ordinal_err_extreme) : nlohmann::json(nullptr);
  j["f1_bin_extreme"] =
      extreme_present ? nlohmann::json(f1_bin_extreme) : nlohmann::json(nullptr);
  j["extreme_miss_distance"] =
      extreme_present ? nlohmann::json(extreme_miss_distance) : nlohmann::json(nullptr);
  j["ece_per_class"] = ece_per_class;
  return j;
}

std::string EvalReport::csv_header() {
  return "f1_bin,prec_bin,rec_bin,iou_macro,ordinal_error,iou_extreme,ordinal_error_extreme,"
         "extreme_miss_distance,ece_mean";
}

std::string EvalReport::csv_row() const {
  double ece_mean = 0.0;
  for (double e : ece_per_class) ece_mean += e;
  if (!ece_per_class.empty()) ece_mean /= static_cast<double>(ece_per_class.size());
  std::ostringstream os;
  os.precision(10);
  os << f1_bin << ',' << prec_bin << ',' << rec_bin << ',' << iou_macro << ',' << ordinal_err
     << ',';
  if (extreme_present) {
    os << iou_extreme << ',' << ordinal_err_extreme << ',' << extreme_miss_distance;
  } else {
    os << ",,";
  }
  os << ',' << ece_mean;
  return os.str();
}

std::string EvalReport::calibration_csv(int cls) const {
  const auto& bins = calibration.at(static_cast<std::size_t>(cls));
  std::ostringstream os;
  os.precision(10);
  os << "bin_lo,bin_hi,count,mean_conf,emp_freq\n";
  for (const auto& b : bins) {
    os << b.lo << ',' << b.hi << ',' << b.count << ',' << b.mean_confidence << ','
       << b.empirical_frequency << '\n';
  }
  return os.str();
}

}  // namespace ordfire
