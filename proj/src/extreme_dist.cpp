#include "ordfire/extreme_dist.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ordfire/errors.hpp"

namespace ordfire {
namespace {

bool all_finite(const EgpdParams& p) {
  return std::isfinite(p.sigma) && std::isfinite(p.kappa) && std::isfinite(p.xi);
}

// dH/dsigma and dH/dxi of the GPD CDF at y, for the power and limit branches.
struct GpdDerivs {
  double h = 0.0;       // H(y)
  double d_sigma = 0.0;
  double d_xi = 0.0;
};

GpdDerivs gpd_cdf_derivs(double y, double sigma, double xi) {
  GpdDerivs out;
  if (y <= 0.0) return out;
  const double a = y / sigma;
  if (std::abs(xi) < kXiSwitch) {
    const double e = std::exp(-a);
    out.h = 1.0 - e;
    out.d_sigma = -a / sigma * e;
    out.d_xi = -0.5 * a * a * e;  // first-order term of the xi expansion
    return out;
  }
  const double u = 1.0 + xi * a;
  const double su = std::pow(u, -1.0 / xi);  // survival (1 - H)
  out.h = 1.0 - su;
  out.d_sigma = -(y / (sigma * sigma)) * std::pow(u, -1.0 / xi - 1.0);
  out.d_xi = -su * (std::log(u) / (xi * xi) - a / (xi * u));
  return out;
}

}  // namespace

bool EgpdParams::valid() const {
  return all_finite(*this) && sigma > 0.0 && kappa > 0.0 && xi > 0.0;
}

void EgpdParams::validate() const {
  if (!valid()) {
    throw std::domain_error("EgpdParams requires finite sigma, kappa, xi all > 0");
  }
}

void FitConfig::validate() const {
  for (const auto& b : {sigma_bounds, kappa_bounds, xi_bounds}) {
    if (!(b[0] > 0.0) || !(b[0] < b[1])) {
      throw std::domain_error("FitConfig bounds must satisfy 0 < lo < hi");
    }
  }
  if (!(tol > 0.0)) throw std::domain_error("FitConfig tol must be > 0");
  if (max_iter_simplex < 1 || max_iter_refine < 0) {
    throw std::domain_error("FitConfig iteration caps must be positive");
  }
}

double gpd_cdf(double y, double sigma, double xi) {
  if (!std::isfinite(y) || !std::isfinite(sigma) || !std::isfinite(xi)) {
    throw std::domain_error("gpd_cdf: non-finite input");
  }
  if (y < 0.0 || sigma <= 0.0) {
    throw std::domain_error("gpd_cdf requires y >= 0 and sigma > 0");
  }
  if (xi < 0.0 && y >= -sigma / xi) return 1.0;  // past the finite support endpoint
  if (std::abs(xi) < kXiSwitch) return -std::expm1(-y / sigma);
  return 1.0 - std::pow(1.0 + xi * y / sigma, -1.0 / xi);
}

double egpd_cdf(double y, const EgpdParams& params) {
  params.validate();
  return std::pow(gpd_cdf(y, params.sigma, params.xi), params.kappa);
}

double egpd_pdf(double y, const EgpdParams& params) {
  params.validate();
  if (!std::isfinite(y) || y < 0.0) throw std::domain_error("egpd_pdf: y must be >= 0");
  const double u = 1.0 + params.xi * y / params.sigma;
  const double h = std::pow(u, -1.0 / params.xi - 1.0) / params.sigma;
  const double H = gpd_cdf(y, params.sigma, params.xi);
  if (H <= 0.0) return params.kappa == 1.0 ? params.kappa * h : 0.0;
  return params.kappa * h * std::pow(H, params.kappa - 1.0);
}

double egpd_quantile(double q, const EgpdParams& params) {
  params.validate();
  if (!(q > 0.0) || !(q < 1.0)) throw std::domain_error("egpd_quantile: q must lie in (0,1)");
  const double p = 1.0 - std::pow(q, 1.0 / params.kappa);  // GPD survival level
  if (std::abs(params.xi) < kXiSwitch) return -params.sigma * std::log(p);
  return params.sigma / params.xi * (std::pow(p, -params.xi) - 1.0);
}

TruncatedPmf tdegpd_pmf(const EgpdParams& params, int y_max) {
  params.validate();
  if (y_max < 1) throw std::domain_error("tdegpd_pmf: y_max must be >= 1");
  std::vector<double> cdf(static_cast<std::size_t>(y_max) + 2);
  for (int k = 0; k <= y_max + 1; ++k) {
    cdf[static_cast<std::size_t>(k)] = egpd_cdf(static_cast<double>(k), params);
  }
  const double z = cdf.back();
  if (z < 1e-300) {
    throw DegenerateDistribution(
        "tdegpd_pmf: normalizer underflow, all mass past truncation point");
  }
  TruncatedPmf pmf;
  pmf.probs.resize(static_cast<std::size_t>(y_max) + 1);
  for (int k = 0; k <= y_max; ++k) {
    pmf.probs[static_cast<std::size_t>(k)] =
        (cdf[static_cast<std::size_t>(k) + 1] - cdf[static_cast<std::size_t>(k)]) / z;
  }
  return pmf;
}

NllResult tdegpd_nll(const EgpdParams& params, int y, int y_max) {
  params.validate();
  if (y < 0 || y > y_max) throw std::domain_error("tdegpd_nll: class out of range");

  // F(k) = H(k)^kappa with full parameter gradient.
  auto cdf_with_grad = [&](double point) {
    std::array<double, 4> out{};  // F, dF/dsigma, dF/dkappa, dF/dxi
    const GpdDerivs d = gpd_cdf_derivs(point, params.sigma, params.xi);
    if (d.h <= 0.0) return out;
    const double f = std::pow(d.h, params.kappa);
    const double scale = params.kappa * std::pow(d.h, params.kappa - 1.0);
    out = {f, scale * d.d_sigma, f * std::log(d.h), scale * d.d_xi};
    return out;
  };

  const auto lo = cdf_with_grad(static_cast<double>(y));
  const auto hi = cdf_with_grad(static_cast<double>(y) + 1.0);
  const auto z = cdf_with_grad(static_cast<double>(y_max) + 1.0);
  if (z[0] < 1e-300) {
    throw DegenerateDistribution("tdegpd_nll: normalizer underflow");
  }

  const double p_raw = hi[0] - lo[0];
  const double p = p_raw / z[0];
  NllResult res;
  res.clamped = p < kPmfFloor;
  res.value = -std::log(std::max(p, kPmfFloor));
  if (res.clamped) {
    res.grad = {0.0, 0.0, 0.0};  // flat inside the floor
    return res;
  }
  // d(-log p)/dtheta = -( (dhi - dlo)/p_raw - dz/Z )
  for (int i = 0; i < 3; ++i) {
    const std::size_t j = static_cast<std::size_t>(i) + 1;
    res.grad[static_cast<std::size_t>(i)] = -((hi[j] - lo[j]) / p_raw - z[j] / z[0]);
  }
  return res;
}

double egpd_nll(std::span<const double> samples, const EgpdParams& params) {
  if (!params.valid()) return std::numeric_limits<double>::infinity();
  double nll = 0.0;
  const double log_kappa = std::log(params.kappa);
  for (double x : samples) {
    const double u = 1.0 + params.xi * x / params.sigma;
    if (u <= 0.0) return std::numeric_limits<double>::infinity();
    const double log_h = -std::log(params.sigma) - (1.0 / params.xi + 1.0) * std::log(u);
    const double H = std::max(gpd_cdf(x, params.sigma, params.xi), 1e-300);
    nll -= log_kappa + log_h + (params.kappa - 1.0) * std::log(H);
  }
  return std::isfinite(nll) ? nll : std::numeric_limits<double>::infinity();
}

namespace {

using Vec3 = std::array<double, 3>;

Vec3 clamp_to_bounds(Vec3 t, const FitConfig& cfg) {
  t[0] = std::clamp(t[0], cfg.sigma_bounds[0], cfg.sigma_bounds[1]);
  t[1] = std::clamp(t[1], cfg.kappa_bounds[0], cfg.kappa_bounds[1]);
  t[2] = std::clamp(t[2], cfg.xi_bounds[0], cfg.xi_bounds[1]);
  return t;
}

EgpdParams to_params(const Vec3& t) { return EgpdParams{t[0], t[1], t[2]}; }

// Derivative-free simplex minimization inside the bound box.
Vec3 nelder_mead(const std::function<double(const Vec3&)>& f, Vec3 x0, int max_iter,
                 double tol) {
  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;
  std::array<Vec3, 4> simplex;
  std::array<double, 4> fv;
  simplex[0] = x0;
  for (int i = 0; i < 3; ++i) {
    Vec3 v = x0;
    const std::size_t ui = static_cast<std::size_t>(i);
    v[ui] += (std::abs(v[ui]) > 1e-6) ? 0.1 * v[ui] : 0.05;
    simplex[ui + 1] = v;
  }
  for (std::size_t i = 0; i < 4; ++i) fv[i] = f(simplex[i]);

  auto order = [&] {
    std::array<std::size_t, 4> idx{0, 1, 2, 3};
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::array<Vec3, 4> s2;
    std::array<double, 4> f2;
    for (std::size_t i = 0; i < 4; ++i) {
      s2[i] = simplex[idx[i]];
      f2[i] = fv[idx[i]];
    }
    simplex = s2;
    fv = f2;
  };

  order();
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(fv[3] - fv[0]) < tol * (1.0 + std::abs(fv[0]))) break;
    Vec3 centroid{};
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t k = 0; k < 3; ++k) centroid[k] += simplex[i][k] / 3.0;

    auto affine = [&](double coef) {
      Vec3 p;
      for (std::size_t k = 0; k < 3; ++k) p[k] = centroid[k] + coef * (centroid[k] - simplex[3][k]);
      return p;
    };

    const Vec3 xr = affine(kReflect);
    const double fr = f(xr);
    if (fr < fv[0]) {
      const Vec3 xe = affine(kExpand);
      const double fe = f(xe);
      if (fe < fr) {
        simplex[3] = xe;
        fv[3] = fe;
      } else {
        simplex[3] = xr;
        fv[3] = fr;
      }
    } else if (fr < fv[2]) {
      simplex[3] = xr;
      fv[3] = fr;
    } else {
      const Vec3 xc = affine(fr < fv[3] ? kContract : -kContract);
      const double fc = f(xc);
      if (fc < std::min(fr, fv[3])) {
        simplex[3] = xc;
        fv[3] = fc;
      } else {
        for (std::size_t i = 1; i < 4; ++i) {
          for (std::size_t k = 0; k < 3; ++k)
            simplex[i][k] = simplex[0][k] + kShrink * (simplex[i][k] - simplex[0][k]);
          fv[i] = f(simplex[i]);
        }
      }
    }
    order();
  }
  return simplex[0];
}

Vec3 fd_gradient(const std::function<double(const Vec3&)>& f, const Vec3& x) {
  Vec3 g{};
  for (std::size_t i = 0; i < 3; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    Vec3 xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// Projected quasi-Newton refinement: BFGS direction with box projection and
// Armijo backtracking.
struct RefineOutcome {
  Vec3 x;
  double fx;
  bool converged;
};

RefineOutcome refine_bounded(const std::function<double(const Vec3&)>& f, Vec3 x,
                             const FitConfig& cfg) {
  double fx = f(x);
  Vec3 g = fd_gradient(f, x);
  // inverse-Hessian approximation, row-major 3x3
  std::array<double, 9> hinv{1, 0, 0, 0, 1, 0, 0, 0, 1};
  bool converged = false;

  for (int it = 0; it < cfg.max_iter_refine; ++it) {
    Vec3 dir{};
    for (std::size_t r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < 3; ++c) dir[r] -= hinv[r * 3 + c] * g[c];

    double t = 1.0;
    Vec3 xn = x;
    double fn = fx;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls) {
      Vec3 cand;
      for (std::size_t k = 0; k < 3; ++k) cand[k] = x[k] + t * dir[k];
      cand = clamp_to_bounds(cand, cfg);
      const double fc = f(cand);
      double descent = 0.0;
      for (std::size_t k = 0; k < 3; ++k) descent += g[k] * (cand[k] - x[k]);
      if (fc <= fx + 1e-4 * descent && fc < fx) {
        xn = cand;
        fn = fc;
        improved = true;
        break;
      }
      t *= 0.5;
    }
    if (!improved) {
      converged = true;  // no feasible descent direction left
      break;
    }
    const Vec3 gn = fd_gradient(f, xn);
    if (std::abs(fx - fn) < cfg.tol * (1.0 + std::abs(fx))) {
      x = xn;
      fx = fn;
      converged = true;
      break;
    }
    Vec3 s{}, yv{};
    double sy = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      s[k] = xn[k] - x[k];
      yv[k] = gn[k] - g[k];
      sy += s[k] * yv[k];
    }
    if (sy > 1e-12) {
      // BFGS inverse update
      Vec3 hy{};
      for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) hy[r] += hinv[r * 3 + c] * yv[c];
      double yhy = 0.0;
      for (std::size_t k = 0; k < 3; ++k) yhy += yv[k] * hy[k];
      for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
          hinv[r * 3 + c] += (sy + yhy) * s[r] * s[c] / (sy * sy) -
                             (hy[r] * s[c] + s[r] * hy[c]) / sy;
        }
      }
    } else {
      hinv = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    }
    x = xn;
    fx = fn;
    g = gn;
  }
  return {x, fx, converged};
}

}  // namespace

FitResult fit_egpd(std::span<const double> samples, const FitConfig& cfg) {
  cfg.validate();
  if (samples.size() < 10) {
    throw InsufficientData("fit_egpd requires at least 10 samples, got " +
                           std::to_string(samples.size()));
  }
  double mean = 0.0;
  for (double x : samples) {
    if (!std::isfinite(x) || x <= 0.0) {
      throw std::domain_error("fit_egpd: samples must be finite and strictly positive");
    }
    mean += x;
  }
  mean /= static_cast<double>(samples.size());
  const bool all_equal =
      std::all_of(samples.begin(), samples.end(), [&](double x) { return x == samples[0]; });
  if (all_equal) throw DegenerateSample("fit_egpd: all samples identical");

  auto objective = [&](const Vec3& t) {
    const Vec3 c = clamp_to_bounds(t, cfg);
    double penalty = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      const double d = t[k] - c[k];
      penalty += d * d;
    }
    return egpd_nll(samples, to_params(c)) + 1e6 * penalty;
  };

  const Vec3 x0 = clamp_to_bounds({mean, 1.0, 0.1}, cfg);
  const Vec3 x1 = clamp_to_bounds(nelder_mead(objective, x0, cfg.max_iter_simplex, cfg.tol), cfg);
  const double f1 = egpd_nll(samples, to_params(x1));

  auto bounded_objective = [&](const Vec3& t) {
    return egpd_nll(samples, to_params(clamp_to_bounds(t, cfg)));
  };
  const RefineOutcome r = refine_bounded(bounded_objective, x1, cfg);

  FitResult out;
  out.converged = r.converged;
  if (r.fx <= f1) {
    out.params = to_params(clamp_to_bounds(r.x, cfg));
    out.nll = r.fx;
  } else {
    out.params = to_params(x1);
    out.nll = f1;
  }
  return out;
}

}  // namespace ordfire
