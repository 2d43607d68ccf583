#include "ordfire/severity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "ordfire/errors.hpp"

namespace ordfire {
namespace {

double apply_transform(SchemeTransform t, double x) {
  return t == SchemeTransform::sqrt ? std::sqrt(x) : x;
}

std::vector<double> transformed_positives(std::span<const double> magnitudes,
                                          SchemeTransform transform) {
  std::vector<double> pos;
  pos.reserve(magnitudes.size());
  for (double m : magnitudes) {
    if (!std::isfinite(m) || m < 0.0) {
      throw std::domain_error("magnitudes must be finite and >= 0");
    }
    if (m > 0.0) pos.push_back(apply_transform(transform, m));
  }
  return pos;
}

const char* method_name(SchemeMethod m) {
  return m == SchemeMethod::kmeans ? "kmeans" : "egpd_risk";
}

const char* transform_name(SchemeTransform t) {
  return t == SchemeTransform::sqrt ? "sqrt" : "identity";
}

}  // namespace

std::vector<double> kmeans_1d_centers(std::span<const double> values, int k) {
  // collapse to sorted unique values with multiplicities
  std::map<double, double> hist;
  for (double v : values) hist[v] += 1.0;
  const int m = static_cast<int>(hist.size());
  if (m < k) {
    throw InsufficientData("kmeans_1d needs at least " + std::to_string(k) +
                           " distinct values, got " + std::to_string(m));
  }
  std::vector<double> x, w;
  x.reserve(hist.size());
  w.reserve(hist.size());
  for (const auto& [v, c] : hist) {
    x.push_back(v);
    w.push_back(c);
  }

  // prefix sums for O(1) weighted SSE of any contiguous segment
  std::vector<double> pw(static_cast<std::size_t>(m) + 1, 0.0), px = pw, px2 = pw;
  for (int i = 0; i < m; ++i) {
    const std::size_t u = static_cast<std::size_t>(i);
    pw[u + 1] = pw[u] + w[u];
    px[u + 1] = px[u] + w[u] * x[u];
    px2[u + 1] = px2[u] + w[u] * x[u] * x[u];
  }
  auto sse = [&](int a, int b) {  // segment [a, b], inclusive
    const double sw = pw[static_cast<std::size_t>(b) + 1] - pw[static_cast<std::size_t>(a)];
    const double sx = px[static_cast<std::size_t>(b) + 1] - px[static_cast<std::size_t>(a)];
    const double sx2 = px2[static_cast<std::size_t>(b) + 1] - px2[static_cast<std::size_t>(a)];
    return sx2 - sx * sx / sw;
  };

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> dp(static_cast<std::size_t>(k) + 1,
                                      std::vector<double>(static_cast<std::size_t>(m), inf));
  std::vector<std::vector<int>> cut(static_cast<std::size_t>(k) + 1,
                                    std::vector<int>(static_cast<std::size_t>(m), 0));
  for (int i = 0; i < m; ++i) dp[1][static_cast<std::size_t>(i)] = sse(0, i);
  for (int c = 2; c <= k; ++c) {
    for (int i = c - 1; i < m; ++i) {
      for (int a = c - 1; a <= i; ++a) {
        const double cand = dp[static_cast<std::size_t>(c) - 1][static_cast<std::size_t>(a) - 1] +
                            sse(a, i);
        if (cand < dp[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)]) {
          dp[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] = cand;
          cut[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] = a;
        }
      }
    }
  }

  std::vector<double> centers(static_cast<std::size_t>(k));
  int end = m - 1;
  for (int c = k; c >= 1; --c) {
    const int start = c == 1 ? 0 : cut[static_cast<std::size_t>(c)][static_cast<std::size_t>(end)];
    const double sw = pw[static_cast<std::size_t>(end) + 1] - pw[static_cast<std::size_t>(start)];
    const double sx = px[static_cast<std::size_t>(end) + 1] - px[static_cast<std::size_t>(start)];
    centers[static_cast<std::size_t>(c) - 1] = sx / sw;
    end = start - 1;
  }
  return centers;
}

SeverityScheme fit_kmeans_scheme(std::span<const double> magnitudes, SchemeTransform transform) {
  const std::vector<double> pos = transformed_positives(magnitudes, transform);
  SeverityScheme scheme;
  scheme.method = SchemeMethod::kmeans;
  scheme.transform = transform;
  try {
    scheme.centers = kmeans_1d_centers(pos, 4);
  } catch (const InsufficientData&) {
    throw InsufficientData("fit_kmeans_scheme requires >= 4 distinct positive magnitudes");
  }
  return scheme;
}

SeverityScheme fit_egpd_scheme(std::span<const double> magnitudes, std::array<double, 3> q,
                               const FitConfig& cfg, SchemeTransform transform) {
  if (!(q[0] > 0.0 && q[0] < q[1] && q[1] < q[2] && q[2] < 1.0)) {
    throw std::domain_error("fit_egpd_scheme: quantiles must be strictly ascending in (0,1)");
  }
  const std::vector<double> pos = transformed_positives(magnitudes, transform);
  const FitResult fit = fit_egpd(pos, cfg);
  SeverityScheme scheme;
  scheme.method = SchemeMethod::egpd_risk;
  scheme.transform = transform;
  scheme.fitted_params = fit.params;
  for (double qi : q) scheme.thresholds.push_back(egpd_quantile(qi, fit.params));
  return scheme;
}

ClassifiedSeries classify(const SeverityScheme& scheme, std::span<const double> magnitudes) {
  if (scheme.method == SchemeMethod::egpd_risk && scheme.thresholds.size() != 3) {
    throw std::domain_error("classify: scheme has no fitted thresholds");
  }
  if (scheme.method == SchemeMethod::kmeans && scheme.centers.size() != 4) {
    throw std::domain_error("classify: scheme has no fitted centers");
  }
  ClassifiedSeries out;
  out.classes.reserve(magnitudes.size());
  for (double m : magnitudes) {
    if (!std::isfinite(m) || m < 0.0) {
      throw std::domain_error("classify: magnitudes must be finite and >= 0");
    }
    if (m == 0.0) {
      out.classes.push_back(0);
      continue;
    }
    const double t = apply_transform(scheme.transform, m);
    if (scheme.method == SchemeMethod::egpd_risk) {
      int cls = 1;
      for (double thr : scheme.thresholds) cls += thr < t ? 1 : 0;
      out.classes.push_back(cls);
    } else {
      int best = 0;
      double best_d = std::abs(t - scheme.centers[0]);
      for (int c = 1; c < 4; ++c) {
        const double d = std::abs(t - scheme.centers[static_cast<std::size_t>(c)]);
        if (d < best_d) {  // ties stay with the lower class
          best_d = d;
          best = c;
        }
      }
      out.classes.push_back(best + 1);
    }
  }
  return out;
}

double silhouette_1d(std::span<const double> values, const ClassifiedSeries& classes) {
  const std::size_t n = values.size();
  if (classes.classes.size() != n) throw std::domain_error("silhouette_1d: length mismatch");
  std::map<int, std::size_t> sizes;
  for (int c : classes.classes) ++sizes[c];
  if (sizes.size() < 2) {
    throw std::domain_error("silhouette_1d: needs at least 2 nonempty classes");
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::map<int, double> dist_sum;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      dist_sum[classes.classes[k]] += std::abs(values[i] - values[k]);
    }
    const int ci = classes.classes[i];
    const std::size_t own = sizes[ci];
    if (own <= 1) continue;  // singleton convention: s(i) = 0
    const double a = dist_sum[ci] / static_cast<double>(own - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [c, sz] : sizes) {
      if (c == ci) continue;
      b = std::min(b, dist_sum[c] / static_cast<double>(sz));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

nlohmann::json SeverityScheme::to_json() const {
  nlohmann::json j;
  j["method"] = method_name(method);
  j["transform"] = transform_name(transform);
  j["thresholds"] = thresholds;
  j["centers"] = centers;
  if (fitted_params) {
    j["egpd_params"] = {{"sigma", fitted_params->sigma},
                        {"kappa", fitted_params->kappa},
                        {"xi", fitted_params->xi}};
  } else {
    j["egpd_params"] = nullptr;
  }
  return j;
}

SeverityScheme SeverityScheme::from_json(const nlohmann::json& j) {
  SeverityScheme s;
  const std::string method = j.at("method").get<std::string>();
  if (method == "kmeans") {
    s.method = SchemeMethod::kmeans;
  } else if (method == "egpd_risk") {
    s.method = SchemeMethod::egpd_risk;
  } else {
    throw std::domain_error("unknown scheme method: " + method);
  }
  const std::string transform = j.at("transform").get<std::string>();
  if (transform == "identity") {
    s.transform = SchemeTransform::identity;
  } else if (transform == "sqrt") {
    s.transform = SchemeTransform::sqrt;
  } else {
    throw std::domain_error("unknown scheme transform: " + transform);
  }
  s.thresholds = j.at("thresholds").get<std::vector<double>>();
  s.centers = j.at("centers").get<std::vector<double>>();
  if (j.contains("egpd_params") && !j.at("egpd_params").is_null()) {
    const auto& p = j.at("egpd_params");
    s.fitted_params = EgpdParams{p.at("sigma").get<double>(), p.at("kappa").get<double>(),
                                 p.at("xi").get<double>()};
  }
  return s;
}

}  // namespace ordfire
