#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ordfire/losses.hpp"
#include "ordfire/severity.hpp"

namespace ordfire {

struct Dataset {
  Matrix features;  // N x D
  std::vector<std::string> feature_names;
  std::vector<double> magnitudes;
  std::vector<int> classes;  // empty until a scheme is applied
  std::vector<int> time_key;
  std::vector<std::string> group_key;

  std::size_t size() const { return magnitudes.size(); }
  void validate() const;
};

// Label every row from its magnitude through the scheme.
void apply_scheme(Dataset& data, const SeverityScheme& scheme);

struct SyntheticConfig {
  int n = 10000;
  int d = 8;
  EgpdParams params{2.0, 1.5, 0.3};
  double zero_fraction = 0.8;
  std::uint64_t seed = 0;
  int periods = 10;  // time_key values 0..periods-1, assigned in row order
  int groups = 6;
};

struct SyntheticResult {
  Dataset data;
  SeverityScheme scheme;
  bool fraction_adjusted = false;  // zero_fraction lowered to get enough positives
};

// Covariates, a latent log-linear intensity, intensity-dependent zero
// inflation, eGPD-distributed positive magnitudes, labels from a fitted
// egpd_risk scheme. Class 0 dominates for high zero fractions.
SyntheticResult generate_synthetic(const SyntheticConfig& cfg);

Dataset load_csv(const std::string& path);
void save_csv(const Dataset& data, const std::string& path);

struct PruneLog {
  std::vector<std::string> dropped;  // "name: reason" entries
  std::vector<int> kept_columns;     // indices into the original feature set
};

// Variance floor then pairwise max(|Pearson|,|Spearman|,|Kendall|) ceiling;
// decisions belong to the split this is called on (the training split).
PruneLog prune_features(const Dataset& train, double var_floor = 1e-10,
                        double corr_ceiling = 0.9);

Dataset select_features(const Dataset& data, const std::vector<int>& kept_columns);

struct TimeRange {
  int lo = 0;
  int hi = 0;  // inclusive
  bool contains(int t) const { return t >= lo && t <= hi; }
};

struct SplitResult {
  Dataset train, val, test;
  std::size_t excluded = 0;  // rows outside every range
};

SplitResult split_by_time(const Dataset& data, TimeRange train, TimeRange val, TimeRange test);

// Keeps all positive-class rows and an exact-count random subset of class-0
// rows; row order preserved.
Dataset undersample_class0(const Dataset& data, double keep_ratio, std::uint64_t seed);

// The benchmark grid: 0.15, 0.20, ..., 1.00 (18 ratios).
std::vector<double> undersample_grid();

// Per-column affine normalization fitted on one split, applied to any other.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // std, floored at 1e-12

  static Standardizer fit(const Matrix& features);
  Matrix apply(const Matrix& features) const;
};

// Correlation helpers, exposed for tests.
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

}  // namespace ordfire
