#include <algorithm>
#include <random>
#include <vector>

#include "doctest.h"
#include "ordfire/metrics.hpp"

using namespace ordfire;

TEST_CASE("confusion hand count and edge cases") {
  const std::vector<int> t{0, 0, 1}, p{0, 1, 1};
  const ConfusionMatrix cm = confusion(t, p, 2);
  CHECK(cm.counts(0, 0) == 1.0);
  CHECK(cm.counts(0, 1) == 1.0);
  CHECK(cm.counts(1, 0) == 0.0);
  CHECK(cm.counts(1, 1) == 1.0);

  const ConfusionMatrix perfect = confusion(t, t, 2);
  CHECK(perfect.counts(0, 1) == 0.0);
  CHECK(perfect.counts(0, 0) == 2.0);

  const ConfusionMatrix empty = confusion(std::vector<int>{}, std::vector<int>{}, 3);
  CHECK(empty.counts.sum() == 0.0);

  CHECK_THROWS_AS(confusion(std::vector<int>{5}, std::vector<int>{0}, 3), std::domain_error);
}

TEST_CASE("binary scores hand values") {
  const std::vector<int> t{0, 1, 2, 0}, p{0, 3, 0, 1};
  const BinaryScores s = binary_scores(t, p);
  CHECK(s.precision == doctest::Approx(0.5));
  CHECK(s.recall == doctest::Approx(0.5));
  CHECK(s.f1 == doctest::Approx(0.5));

  const std::vector<int> t2{0, 1, 2, 0};
  const BinaryScores perfect = binary_scores(t2, t2);
  CHECK(perfect.f1 == 1.0);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);

  const std::vector<int> zeros{0, 0, 0};
  const BinaryScores undef = binary_scores(zeros, zeros);
  CHECK(undef.undefined);
  CHECK(undef.f1 == 0.0);
}

TEST_CASE("iou hand values and skip convention") {
  const std::vector<int> t{0, 0, 1, 1}, p{0, 1, 1, 1};
  const IouScores s = iou(t, p, 2);
  CHECK(s.per_class[0] == doctest::Approx(0.5));
  CHECK(s.per_class[1] == doctest::Approx(2.0 / 3.0));
  CHECK(s.macro == doctest::Approx(0.5 * (0.5 + 2.0 / 3.0)));

  // class 4 absent from both sides: excluded from the macro
  const std::vector<int> t2{0, 1}, p2{0, 1};
  const IouScores s2 = iou(t2, p2, 5);
  CHECK_FALSE(s2.class_present[4]);
  CHECK(s2.macro == 1.0);
}

TEST_CASE("iou macro is 1 iff predictions are perfect") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> cls(0, 4);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<int> t(30), p(30);
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = cls(rng);
      p[i] = cls(rng);
    }
    const bool equal = t == p;
    CHECK((iou(t, p, 5).macro == 1.0) == equal);
  }
}

TEST_CASE("extreme subset membership rule") {
  const std::vector<int> t{0, 3, 1}, p{4, 0, 1};
  CHECK(extreme_subset(t, p) == std::vector<std::size_t>{0, 1});
  const std::vector<int> low{0, 1, 2};
  CHECK(extreme_subset(low, low).empty());
  const std::vector<int> all4{4, 4};
  CHECK(extreme_subset(all4, all4).size() == 2);
}

TEST_CASE("ordinal error golden values") {
  ConfusionMatrix diag;
  diag.counts = Matrix::Zero(5, 5);
  for (int i = 0; i < 5; ++i) diag.counts(i, i) = 10.0;
  CHECK(ordinal_error(diag, PenaltyMatrix::linear(5)) == doctest::Approx(0.0));

  ConfusionMatrix anti;
  anti.counts = Matrix::Zero(2, 2);
  anti.counts(0, 1) = 5.0;
  anti.counts(1, 0) = 5.0;
  CHECK(ordinal_error(anti, PenaltyMatrix::linear(2)) == doctest::Approx(2.0).epsilon(1e-7));
}

TEST_CASE("ordinal error is ~1 under independence") {
  std::mt19937_64 rng(11);
  std::discrete_distribution<int> cls{5, 3, 1, 0.6, 0.4};
  std::vector<int> t(10000), p(10000);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = cls(rng);
    p[i] = cls(rng);
  }
  const double e = ordinal_error(confusion(t, p, 5), PenaltyMatrix::linear(5));
  CHECK(e == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("ordinal error grows with miss distance") {
  ConfusionMatrix near, far;
  near.counts = Matrix::Zero(5, 5);
  far.counts = Matrix::Zero(5, 5);
  for (int i = 0; i < 5; ++i) {
    near.counts(i, i) = 10.0;
    far.counts(i, i) = 10.0;
  }
  near.counts(0, 0) -= 3.0;
  near.counts(0, 1) += 3.0;
  far.counts(0, 0) -= 3.0;
  far.counts(0, 4) += 3.0;
  const PenaltyMatrix w = PenaltyMatrix::linear(5);
  CHECK(ordinal_error(near, w) < ordinal_error(far, w));
}

TEST_CASE("ece golden values") {
  // two samples at conf 0.8 with acc 0.5, two at 0.6 with acc 0.5, M=2
  const std::vector<double> conf{0.8, 0.8, 0.6, 0.6};
  const std::vector<bool> hit{true, false, true, false};
  const EceResult r = ece(conf, hit, 2);
  CHECK(r.value == doctest::Approx(0.2));

  const std::vector<double> sure{1.0, 1.0, 1.0};
  const std::vector<bool> right{true, true, true};
  CHECK(ece(sure, right, 10).value == doctest::Approx(0.0));

  // perfectly calibrated bins
  const std::vector<double> cal{0.25, 0.25, 0.25, 0.25};
  const std::vector<bool> calhit{true, false, false, false};
  CHECK(ece(cal, calhit, 2).value == doctest::Approx(0.0));
}

TEST_CASE("ece stays within [0,1] and bins cover all samples") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> conf(100);
    std::vector<bool> hit(100);
    for (std::size_t i = 0; i < conf.size(); ++i) {
      conf[i] = uni(rng);
      hit[i] = uni(rng) < 0.5;
    }
    const EceResult r = ece(conf, hit, 10);
    CHECK(r.value >= 0.0);
    CHECK(r.value <= 1.0);
    std::size_t total = 0;
    for (const auto& b : r.bins) total += b.count;
    CHECK(total == conf.size());
  }
}

TEST_CASE("metrics are permutation invariant") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> cls(0, 4);
  std::vector<int> t(50), p(50);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = cls(rng);
    p[i] = cls(rng);
  }
  std::vector<std::size_t> perm(t.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> t2(t.size()), p2(p.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    t2[i] = t[perm[i]];
    p2[i] = p[perm[i]];
  }
  CHECK(iou(t, p, 5).macro == doctest::Approx(iou(t2, p2, 5).macro));
  CHECK(binary_scores(t, p).f1 == doctest::Approx(binary_scores(t2, p2).f1));
  CHECK(ordinal_error(confusion(t, p, 5), PenaltyMatrix::linear(5)) ==
        doctest::Approx(ordinal_error(confusion(t2, p2, 5), PenaltyMatrix::linear(5))));
}

TEST_CASE("evaluate assembles a consistent report") {
  // perfect predictions including extreme classes
  const std::vector<int> truth{0, 1, 2, 3, 4, 4, 0};
  Matrix probs = Matrix::Constant(7, 5, 0.025);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    probs(static_cast<Eigen::Index>(i), truth[i]) = 0.9;
  }
  const EvalReport rep = evaluate(truth, probs);
  CHECK(rep.iou_macro == 1.0);
  CHECK(rep.ordinal_err == doctest::Approx(0.0));
  CHECK(rep.extreme_present);
  CHECK(rep.iou_extreme == 1.0);
  CHECK(rep.ordinal_err_extreme == doctest::Approx(0.0));
  CHECK(rep.extreme_miss_distance == 0.0);
  CHECK(rep.f1_bin == 1.0);
  CHECK(rep.ece_per_class.size() == 5);
  const nlohmann::json j = rep.to_json();
  CHECK(j.at("iou_macro").get<double>() == 1.0);
  CHECK(j.at("extreme_present").get<bool>());

  // no extreme involvement: section reported absent
  const std::vector<int> low{0, 1, 2};
  Matrix lp = Matrix::Constant(3, 5, 0.025);
  for (std::size_t i = 0; i < low.size(); ++i) lp(static_cast<Eigen::Index>(i), low[i]) = 0.9;
  const EvalReport rep2 = evaluate(low, lp);
  CHECK_FALSE(rep2.extreme_present);
  CHECK(rep2.to_json().at("iou_extreme").is_null());
}

TEST_CASE("calibration csv has the documented columns") {
  const std::vector<int> truth{0, 1};
  Matrix probs(2, 5);
  probs << 0.9, 0.025, 0.025, 0.025, 0.025,
           0.1, 0.6, 0.1, 0.1, 0.1;
  const EvalReport rep = evaluate(truth, probs);
  const std::string csv = rep.calibration_csv(0);
  CHECK(csv.rfind("bin_lo,bin_hi,count,mean_conf,emp_freq\n", 0) == 0);
}
