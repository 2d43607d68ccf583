#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ordfire/losses.hpp"

namespace ordfire {

struct ConfusionMatrix {
  Matrix counts;  // rows = true class, columns = predicted

  Matrix row_normalized() const;
  double total() const { return counts.sum(); }
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> pred, int num_classes);

struct BinaryScores {
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  bool undefined = false;  // zero-denominator convention: scores reported as 0
};

// Binarized (class > 0) precision/recall/F1.
BinaryScores binary_scores(std::span<const int> truth, std::span<const int> pred);

struct IouScores {
  std::vector<double> per_class;       // 0 for classes absent from both sides
  std::vector<bool> class_present;     // occurs in truth or pred
  double macro = 0.0;                  // mean over present classes
};

IouScores iou(std::span<const int> truth, std::span<const int> pred, int num_classes);

// Indices where truth or pred is class 3 or 4.
std::vector<std::size_t> extreme_subset(std::span<const int> truth, std::span<const int> pred);

// Hard-assignment ordinal disagreement ratio: observed weighted confusion over
// the expected confusion under marginal independence. 0 = perfect, ~1 = random.
double ordinal_error(const ConfusionMatrix& cm, const PenaltyMatrix& omega,
                     double epsilon = 1e-8);

struct CalibrationBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double empirical_frequency = 0.0;
};

struct EceResult {
  double value = 0.0;
  std::vector<CalibrationBin> bins;
};

// Expected calibration error over equal-width bins on [0,1].
EceResult ece(std::span<const double> confidences, const std::vector<bool>& correct, int num_bins);

struct EvalReport {
  ConfusionMatrix confusion;
  double f1_bin = 0.0;
  double prec_bin = 0.0;
  double rec_bin = 0.0;
  bool binary_undefined = false;
  std::vector<double> iou_per_class;
  double iou_macro = 0.0;
  double ordinal_err = 0.0;
  // extreme-subset section (classes 3-4, predicted or true)
  bool extreme_present = false;
  double iou_extreme = 0.0;
  double ordinal_err_extreme = 0.0;
  double f1_bin_extreme = 0.0;
  // mean |pred - true| over misclassified samples of the extreme subset
  double extreme_miss_distance = 0.0;
  std::vector<double> ece_per_class;
  std::vector<std::vector<CalibrationBin>> calibration;  // per class

  nlohmann::json to_json() const;
  // flat row for sweep aggregation; header() gives the matching column names
  static std::string csv_header();
  std::string csv_row() const;
  std::string calibration_csv(int cls) const;
};

// Full report from class probabilities (rows sum to 1, J columns).
EvalReport evaluate(std::span<const int> truth, const Matrix& probs, int ece_bins = 10);

}  // namespace ordfire
