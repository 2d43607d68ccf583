#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace ordfire {

// Parameters of the extended (exponentiated) GPD, family 1: F(y) = H(y; sigma, xi)^kappa.
// Only the positive-shape regime is supported.
struct EgpdParams {
  double sigma = 1.0;  // scale, > 0
  double kappa = 1.0;  // exponent, > 0
  double xi = 0.1;     // tail shape, > 0

  bool valid() const;
  void validate() const;  // throws std::domain_error on violation
};

// Shape parameters this close to zero are evaluated with the exponential limit.
inline constexpr double kXiSwitch = 1e-8;

// Floor applied to probabilities before taking logs.
inline constexpr double kPmfFloor = 1e-12;

// GPD CDF H(y; sigma, xi) = 1 - (1 + xi*y/sigma)^(-1/xi), exponential limit for small |xi|.
double gpd_cdf(double y, double sigma, double xi);

// eGPD CDF F(y) = H(y)^kappa.
double egpd_cdf(double y, const EgpdParams& params);

// Continuous eGPD density kappa * h(y) * H(y)^(kappa-1).
double egpd_pdf(double y, const EgpdParams& params);

// Inverse of egpd_cdf on (0, 1).
double egpd_quantile(double q, const EgpdParams& params);

struct TruncatedPmf {
  std::vector<double> probs;  // indexed by class, sums to 1
};

// Discrete law on {0..y_max} from integer differencing of the eGPD CDF,
// renormalized by F(y_max + 1). Throws DegenerateDistribution when the
// normalizer underflows.
TruncatedPmf tdegpd_pmf(const EgpdParams& params, int y_max = 4);

struct NllResult {
  double value = 0.0;
  std::array<double, 3> grad{};  // d/d(sigma, kappa, xi)
  bool clamped = false;          // pmf hit the floor before the log
};

// -log p_trunc(y) with analytic gradient in (sigma, kappa, xi).
NllResult tdegpd_nll(const EgpdParams& params, int y, int y_max = 4);

struct FitConfig {
  int max_iter_simplex = 500;
  int max_iter_refine = 200;
  double tol = 1e-8;
  std::array<double, 2> sigma_bounds{1e-6, 1e6};
  std::array<double, 2> kappa_bounds{1e-6, 1e3};
  std::array<double, 2> xi_bounds{1e-6, 10.0};

  void validate() const;
};

struct FitResult {
  EgpdParams params;
  double nll = 0.0;
  bool converged = true;
};

// Two-stage MLE of the continuous eGPD on strictly positive samples:
// Nelder-Mead exploration followed by bounded quasi-Newton refinement.
FitResult fit_egpd(std::span<const double> samples, const FitConfig& cfg = {});

// Continuous negative log-likelihood, exposed for tests.
double egpd_nll(std::span<const double> samples, const EgpdParams& params);

}  // namespace ordfire
