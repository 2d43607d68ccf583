#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "ordfire/extreme_dist.hpp"

namespace ordfire {

enum class SchemeMethod { kmeans, egpd_risk };
enum class SchemeTransform { identity, sqrt };

// Mapping from raw event magnitudes to the 5-level ordinal target.
// Zero magnitudes are always class 0; positives split into classes 1..4
// either by quantile thresholds of a fitted eGPD or by 1-D k-means centers.
struct SeverityScheme {
  SchemeMethod method = SchemeMethod::egpd_risk;
  SchemeTransform transform = SchemeTransform::identity;
  std::vector<double> thresholds;  // 3 ascending values (egpd_risk)
  std::vector<double> centers;     // 4 ascending values (kmeans)
  std::optional<EgpdParams> fitted_params;

  nlohmann::json to_json() const;
  static SeverityScheme from_json(const nlohmann::json& j);
};

struct ClassifiedSeries {
  std::vector<int> classes;
};

// Exact 1-D 4-means on the transformed positive magnitudes (dynamic
// programming over sorted values, not Lloyd iterations).
SeverityScheme fit_kmeans_scheme(std::span<const double> magnitudes,
                                 SchemeTransform transform = SchemeTransform::identity);

// eGPD MLE on the positives, thresholds at the q quantiles of the fitted CDF.
SeverityScheme fit_egpd_scheme(std::span<const double> magnitudes,
                               std::array<double, 3> q = {0.30, 0.60, 0.90},
                               const FitConfig& cfg = {},
                               SchemeTransform transform = SchemeTransform::identity);

ClassifiedSeries classify(const SeverityScheme& scheme, std::span<const double> magnitudes);

// Mean silhouette coefficient with Euclidean distance on 1-D values.
double silhouette_1d(std::span<const double> values, const ClassifiedSeries& classes);

// Exact weighted 1-D k-means used by fit_kmeans_scheme; exposed for tests.
// Returns cluster centers (ascending) for the given sorted-unique values/weights.
std::vector<double> kmeans_1d_centers(std::span<const double> values, int k);

}  // namespace ordfire
