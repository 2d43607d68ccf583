// Acceptance gate: ten criteria, one pass/fail line each, exit 0 iff all pass.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <random>
#include <vector>

#include "ordfire/benchmark.hpp"
#include "ordfire/dataset.hpp"
#include "ordfire/extreme_dist.hpp"
#include "ordfire/losses.hpp"
#include "ordfire/metrics.hpp"
#include "ordfire/severity.hpp"

using namespace ordfire;

namespace {

bool g_all_pass = true;

void report(int criterion, const std::string& what, bool pass, const std::string& detail = "") {
  std::cout << (pass ? "PASS" : "FAIL") << " criterion " << criterion << ": " << what;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << std::endl;
  g_all_pass = g_all_pass && pass;
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void criterion1_gradients() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<LossKind> losses{LossKind::ce,   LossKind::wkloss, LossKind::mcewk,
                                     LossKind::gwdl, LossKind::atbce,  LossKind::tdegpd};
  const std::vector<GradCheckRow> rows = gradcheck(losses, 100, 2024);
  double worst = 0.0;
  bool pass = true;
  for (const GradCheckRow& r : rows) {
    worst = std::max(worst, r.max_rel_error);
    pass = pass && r.pass;
  }
  const double secs = elapsed_s(start);
  report(1, "gradient fidelity of all six losses through the MLP", pass && secs < 60.0,
         "max rel err " + std::to_string(worst) + ", " + std::to_string(secs) + "s");
}

void criterion2_pmf() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> sigma(0.2, 8.0), kappa(0.3, 4.0), xi(0.05, 1.5);
  bool pass = true;
  for (int rep = 0; rep < 10000 && pass; ++rep) {
    const TruncatedPmf pmf = tdegpd_pmf({sigma(rng), kappa(rng), xi(rng)});
    double sum = 0.0;
    for (double p : pmf.probs) sum += p;
    pass = std::abs(sum - 1.0) < 1e-12;
  }
  const TruncatedPmf hand = tdegpd_pmf({1.0, 1.0, 1.0});
  const std::array<double, 5> expect{0.6, 0.2, 0.1, 0.06, 0.04};
  for (std::size_t i = 0; i < 5; ++i) pass = pass && std::abs(hand.probs[i] - expect[i]) < 1e-12;
  report(2, "TDeGPD pmf normalization and hand example", pass);
}

void criterion3_wk_endpoints() {
  const int n = 10000, j = 5;
  LabelBatch labels;
  Matrix perfect = Matrix::Constant(n, j, 1e-12);
  for (int i = 0; i < n; ++i) {
    labels.labels.push_back(i % j);
    perfect(i, i % j) = 1.0 - 4e-12;
  }
  const double lo = wk_loss(perfect, labels, PenaltyMatrix::quadratic(j)).value;

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Matrix random(n, j);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int c = 0; c < j; ++c) {
      random(i, c) = uni(rng);
      sum += random(i, c);
    }
    random.row(i) /= sum;
  }
  const double hi = wk_loss(random, labels, PenaltyMatrix::quadratic(j)).value;
  report(3, "WKLoss endpoints (perfect ~0, random ~1)",
         lo < 1e-6 && std::abs(hi - 1.0) < 0.05,
         "perfect " + std::to_string(lo) + ", random " + std::to_string(hi));
}

void criterion4_mcewk_identity() {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss(0.0, 1.5);
  std::uniform_int_distribution<int> cls(0, 4);
  bool pass = true;
  for (int rep = 0; rep < 20; ++rep) {
    Matrix logits(12, 5);
    for (Eigen::Index i = 0; i < logits.size(); ++i) logits(i) = gauss(rng);
    const Matrix probs = softmax(logits);
    LabelBatch labels;
    for (int i = 0; i < 12; ++i) labels.labels.push_back(cls(rng));
    labels.labels[0] = 0;
    labels.labels[1] = 4;

    LossConfig c1;
    c1.mcewk_c = 1.0;
    const LossResult a = mcewk_loss(probs, labels, c1);
    const LossResult wk = wk_loss(probs, labels, PenaltyMatrix::quadratic(5), c1);
    pass = pass && a.value == wk.value && (a.grad - wk.grad).cwiseAbs().maxCoeff() == 0.0;

    LossConfig c0;
    c0.mcewk_c = 0.0;
    const LossResult b = mcewk_loss(probs, labels, c0);
    const LossResult mce = mce_loss(probs, labels);
    pass = pass && b.value == mce.value && (b.grad - mce.grad).cwiseAbs().maxCoeff() == 0.0;
  }
  report(4, "MCEWK endpoint identities are bitwise", pass);
}

void criterion5_mle() {
  const auto start = std::chrono::steady_clock::now();
  const EgpdParams truth{2.0, 1.5, 0.3};
  bool pass = true;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(1e-12, 1.0 - 1e-12);
    std::vector<double> samples(50000);
    for (double& s : samples) s = egpd_quantile(uni(rng), truth);
    const FitResult fit = fit_egpd(samples);
    const double ds = std::abs(fit.params.sigma - truth.sigma) / truth.sigma;
    const double dk = std::abs(fit.params.kappa - truth.kappa) / truth.kappa;
    const double dx = std::abs(fit.params.xi - truth.xi) / truth.xi;
    worst = std::max({worst, ds, dk, dx});
    pass = pass && ds < 0.1 && dk < 0.1 && dx < 0.1;
  }
  const double secs = elapsed_s(start);
  report(5, "eGPD MLE recovers (2, 1.5, 0.3) within 10% over 5 seeds", pass && secs < 120.0,
         "worst rel err " + std::to_string(worst) + ", " + std::to_string(secs) + "s");
}

void criterion6_scheme() {
  const EgpdParams truth{2.0, 1.5, 0.3};
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> uni(1e-12, 1.0 - 1e-12);
  std::vector<double> mags(30000);
  for (double& m : mags) m = egpd_quantile(uni(rng), truth);
  const SeverityScheme scheme = fit_egpd_scheme(mags);
  bool pass = scheme.thresholds.size() == 3 && scheme.fitted_params.has_value();
  const std::array<double, 3> q{0.30, 0.60, 0.90};
  for (std::size_t i = 0; pass && i < 3; ++i) {
    pass = std::abs(egpd_cdf(scheme.thresholds[i], *scheme.fitted_params) - q[i]) < 1e-9;
  }

  std::vector<double> probe(100000);
  std::uniform_real_distribution<double> mag(0.0, 60.0);
  for (double& m : probe) m = mag(rng);
  std::sort(probe.begin(), probe.end());
  const ClassifiedSeries cs = classify(scheme, probe);
  for (std::size_t i = 1; pass && i < cs.classes.size(); ++i) {
    pass = cs.classes[i] >= cs.classes[i - 1];
  }
  report(6, "egpd_risk thresholds hit the fitted quantiles; classify is monotone", pass);
}

void criterion7_metric_goldens() {
  const std::vector<double> conf{0.8, 0.8, 0.6, 0.6};
  const std::vector<bool> hit{true, false, true, false};
  const bool ece_ok = std::abs(ece(conf, hit, 2).value - 0.2) < 1e-12;

  ConfusionMatrix anti;
  anti.counts = Matrix::Zero(2, 2);
  anti.counts(0, 1) = 5.0;
  anti.counts(1, 0) = 5.0;
  const bool oe_ok = std::abs(ordinal_error(anti, PenaltyMatrix::linear(2)) - 2.0) < 1e-6;

  const std::vector<int> t{0, 0, 1, 1}, p{0, 1, 1, 1};
  const IouScores s = iou(t, p, 2);
  const bool iou_ok =
      std::abs(s.per_class[0] - 0.5) < 1e-12 && std::abs(s.per_class[1] - 2.0 / 3.0) < 1e-12;
  report(7, "metric golden values (ECE 0.2, ordinal 2.0, IoU 0.5 and 2/3)",
         ece_ok && oe_ok && iou_ok);
}

void criterion8_directional() {
  const auto start = std::chrono::steady_clock::now();
  SyntheticConfig gen;
  gen.n = 4000;
  gen.d = 6;
  gen.zero_fraction = 0.7;
  gen.seed = 2024;
  const SyntheticResult r = generate_synthetic(gen);
  const SplitResult splits = split_by_time(r.data, {0, 5}, {6, 7}, {8, 9});

  BenchmarkConfig cfg;
  cfg.mlp.hidden1 = 24;
  cfg.mlp.hidden2 = 24;
  cfg.mlp.embed = 12;
  cfg.optim.max_epochs = 60;
  cfg.optim.patience = 15;
  cfg.ratios = {0.4};

  const SweepResult sweep = run_benchmark(splits, {LossKind::ce, LossKind::wkloss},
                                          {1, 2, 3, 4, 5}, cfg);
  std::vector<double> ce_iou, wk_iou, ce_dist, wk_dist;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const SweepCell* ce = sweep.selected_cell(LossKind::ce, seed);
    const SweepCell* wk = sweep.selected_cell(LossKind::wkloss, seed);
    if (!ce || !wk || !ce->test_report || !wk->test_report) continue;
    if (ce->test_report->extreme_present) {
      ce_iou.push_back(ce->test_report->iou_extreme);
      ce_dist.push_back(ce->test_report->extreme_miss_distance);
    }
    if (wk->test_report->extreme_present) {
      wk_iou.push_back(wk->test_report->iou_extreme);
      wk_dist.push_back(wk->test_report->extreme_miss_distance);
    }
  }
  const bool have = ce_iou.size() == 5 && wk_iou.size() == 5;
  const double ce_med = have ? median(ce_iou) : 0.0;
  const double wk_med = have ? median(wk_iou) : 0.0;
  const double ce_d = have ? median(ce_dist) : 0.0;
  const double wk_d = have ? median(wk_dist) : 1.0;
  const double secs = elapsed_s(start);
  report(8, "WKLoss matches or beats CE on extreme IoU and miss distance",
         have && wk_med >= ce_med && wk_d <= ce_d && secs < 600.0,
         "extreme IoU wk " + std::to_string(wk_med) + " vs ce " + std::to_string(ce_med) +
             ", miss dist wk " + std::to_string(wk_d) + " vs ce " + std::to_string(ce_d) + ", " +
             std::to_string(secs) + "s");
}

void criterion9_determinism() {
  SyntheticConfig gen;
  gen.n = 800;
  gen.d = 3;
  gen.zero_fraction = 0.6;
  gen.seed = 31;
  const SyntheticResult r = generate_synthetic(gen);
  const SplitResult splits = split_by_time(r.data, {0, 5}, {6, 7}, {8, 9});
  BenchmarkConfig cfg;
  cfg.mlp.hidden1 = 8;
  cfg.mlp.hidden2 = 8;
  cfg.mlp.embed = 6;
  cfg.optim.max_epochs = 10;
  cfg.optim.patience = 5;
  cfg.ratios = {0.5, 1.0};
  const SweepResult a = run_benchmark(splits, {LossKind::ce, LossKind::wkloss}, {1}, cfg);
  const SweepResult b = run_benchmark(splits, {LossKind::ce, LossKind::wkloss}, {1}, cfg);
  const bool pass = sweep_to_json(a).dump() == sweep_to_json(b).dump() &&
                    sweep_to_csv(a) == sweep_to_csv(b);
  report(9, "sweep reruns produce byte-identical JSON and CSV", pass);
}

void criterion10_grid_and_selection() {
  const std::vector<double> grid = undersample_grid();
  bool pass = grid.size() == 18;
  for (std::size_t i = 0; pass && i < grid.size(); ++i) {
    pass = std::abs(grid[i] - (0.15 + 0.05 * static_cast<double>(i))) < 1e-12;
  }

  SyntheticConfig gen;
  gen.n = 800;
  gen.d = 3;
  gen.zero_fraction = 0.6;
  gen.seed = 37;
  const SyntheticResult r = generate_synthetic(gen);
  const SplitResult splits = split_by_time(r.data, {0, 5}, {6, 7}, {8, 9});
  BenchmarkConfig cfg;
  cfg.mlp.hidden1 = 8;
  cfg.mlp.hidden2 = 8;
  cfg.mlp.embed = 6;
  cfg.optim.max_epochs = 8;
  cfg.optim.patience = 4;
  cfg.ratios = {0.3, 0.6, 1.0};
  const SweepResult sweep = run_benchmark(splits, {LossKind::ce}, {1, 2}, cfg);
  for (std::uint64_t seed : {1, 2}) {
    const SweepCell* sel = sweep.selected_cell(LossKind::ce, static_cast<std::uint64_t>(seed));
    pass = pass && sel != nullptr;
    if (!sel) continue;
    for (const SweepCell& c : sweep.cells) {
      if (c.loss == LossKind::ce && c.seed == static_cast<std::uint64_t>(seed)) {
        pass = pass && c.val_iou <= sel->val_iou;
      }
    }
  }
  report(10, "18-ratio grid and validation-IoU argmax selection", pass);
}

}  // namespace

int main() {
  criterion1_gradients();
  criterion2_pmf();
  criterion3_wk_endpoints();
  criterion4_mcewk_identity();
  criterion5_mle();
  criterion6_scheme();
  criterion7_metric_goldens();
  criterion8_directional();
  criterion9_determinism();
  criterion10_grid_and_selection();
  std::cout << (g_all_pass ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED") << std::endl;
  return g_all_pass ? 0 : 1;
}
