#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "ordfire/benchmark.hpp"
#include "ordfire/dataset.hpp"
#include "ordfire/errors.hpp"

using namespace ordfire;

namespace {

SyntheticConfig small_config(std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.n = 600;
  cfg.d = 4;
  cfg.zero_fraction = 0.6;
  cfg.seed = seed;
  return cfg;
}

std::filesystem::path temp_csv(const char* stem) {
  return std::filesystem::temp_directory_path() / stem;
}

double class0_share(const Dataset& d) {
  std::size_t zeros = 0;
  for (int c : d.classes) zeros += c == 0;
  return static_cast<double>(zeros) / static_cast<double>(d.size());
}

}  // namespace

TEST_CASE("synthetic generation is deterministic in the seed") {
  const SyntheticResult a = generate_synthetic(small_config(3));
  const SyntheticResult b = generate_synthetic(small_config(3));
  CHECK((a.data.features - b.data.features).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.data.magnitudes == b.data.magnitudes);
  CHECK(a.data.classes == b.data.classes);
  CHECK(a.data.time_key == b.data.time_key);

  const SyntheticResult c = generate_synthetic(small_config(4));
  CHECK(a.data.magnitudes != c.data.magnitudes);
}

TEST_CASE("synthetic zero fraction lands near the request") {
  SyntheticConfig cfg;
  cfg.n = 10000;
  cfg.d = 6;
  cfg.zero_fraction = 0.8;
  cfg.seed = 11;
  const SyntheticResult r = generate_synthetic(cfg);
  const double share = class0_share(r.data);
  CHECK(share > 0.75);
  CHECK(share < 0.85);
  CHECK_FALSE(r.fraction_adjusted);
  // every class appears and magnitudes of class 0 are exactly zero
  std::array<int, 5> counts{};
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    counts[static_cast<std::size_t>(r.data.classes[i])]++;
    if (r.data.classes[i] == 0) CHECK(r.data.magnitudes[i] == 0.0);
    else CHECK(r.data.magnitudes[i] > 0.0);
  }
  for (int c : counts) CHECK(c > 0);
}

TEST_CASE("synthetic keys cover the configured ranges") {
  const SyntheticResult r = generate_synthetic(small_config(5));
  const auto [tmin, tmax] = std::minmax_element(r.data.time_key.begin(), r.data.time_key.end());
  CHECK(*tmin == 0);
  CHECK(*tmax == 9);
  std::set<std::string> groups(r.data.group_key.begin(), r.data.group_key.end());
  CHECK(groups.size() == 6);
}

TEST_CASE("csv golden fixture round trip") {
  const auto path = temp_csv("ordfire_fixture.csv");
  {
    std::ofstream out(path);
    out << "feature_a,feature_b,magnitude,time_key,group_key\n"
           "1.5,-2,0,0,north\n"
           "0.25,3.5,4.75,1,south\n"
           "-1,0.5,12.5,2,north\n";
  }
  const Dataset d = load_csv(path.string());
  REQUIRE(d.size() == 3);
  CHECK(d.feature_names == std::vector<std::string>{"feature_a", "feature_b"});
  CHECK(d.features(0, 0) == 1.5);
  CHECK(d.features(2, 1) == 0.5);
  CHECK(d.magnitudes == std::vector<double>{0.0, 4.75, 12.5});
  CHECK(d.time_key == std::vector<int>{0, 1, 2});
  CHECK(d.group_key == std::vector<std::string>{"north", "south", "north"});
  std::filesystem::remove(path);
}

TEST_CASE("csv column order does not matter") {
  const auto path = temp_csv("ordfire_reorder.csv");
  {
    std::ofstream out(path);
    out << "group_key,magnitude,feature_x,time_key\n"
           "g1,2.5,0.75,4\n";
  }
  const Dataset d = load_csv(path.string());
  CHECK(d.magnitudes[0] == 2.5);
  CHECK(d.features(0, 0) == 0.75);
  CHECK(d.time_key[0] == 4);
  std::filesystem::remove(path);
}

TEST_CASE("csv rejects bad cells and bad schemas") {
  const auto path = temp_csv("ordfire_bad.csv");
  {
    std::ofstream out(path);
    out << "feature_a,magnitude,time_key,group_key\n"
           "inf,1,0,g\n";
  }
  CHECK_THROWS_AS(load_csv(path.string()), std::runtime_error);
  {
    std::ofstream out(path);
    out << "feature_a,magnitude,time_key,group_key,bogus\n"
           "1,1,0,g,2\n";
  }
  CHECK_THROWS_AS(load_csv(path.string()), std::runtime_error);
  {
    std::ofstream out(path);
    out << "feature_a,time_key,group_key\n"
           "1,0,g\n";
  }
  CHECK_THROWS_AS(load_csv(path.string()), std::runtime_error);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_csv((temp_csv("ordfire_missing.csv")).string()), std::runtime_error);
}

TEST_CASE("save then load is lossless") {
  const SyntheticResult r = generate_synthetic(small_config(7));
  const auto path = temp_csv("ordfire_roundtrip.csv");
  save_csv(r.data, path.string());
  const Dataset back = load_csv(path.string());
  CHECK(back.feature_names == r.data.feature_names);
  CHECK((back.features - r.data.features).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.magnitudes == r.data.magnitudes);
  CHECK(back.time_key == r.data.time_key);
  CHECK(back.group_key == r.data.group_key);
  std::filesystem::remove(path);
}

TEST_CASE("correlation helpers agree with hand values") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{2, 4, 6, 8, 10};
  CHECK(pearson(x, y) == doctest::Approx(1.0));
  CHECK(spearman(x, y) == doctest::Approx(1.0));
  CHECK(kendall_tau_b(x, y) == doctest::Approx(1.0));
  const std::vector<double> yr{10, 8, 6, 4, 2};
  CHECK(pearson(x, yr) == doctest::Approx(-1.0));
  CHECK(kendall_tau_b(x, yr) == doctest::Approx(-1.0));

  // hand example with one discordant pair: tau = (9-1)/10
  const std::vector<double> a{1, 2, 3, 4, 5}, b{1, 2, 3, 5, 4};
  CHECK(kendall_tau_b(a, b) == doctest::Approx(0.8));

  // ties handled by the tau-b correction
  const std::vector<double> t1{1, 1, 2, 2}, t2{1, 2, 3, 4};
  CHECK(kendall_tau_b(t1, t2) == doctest::Approx(4.0 / std::sqrt(4.0 * 6.0)));
}

TEST_CASE("kendall tau-b matches the quadratic oracle on random data") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> coarse(0, 3);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> x(60), y(60);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rep % 2 == 0 ? gauss(rng) : coarse(rng);
      y[i] = rep % 3 == 0 ? gauss(rng) : coarse(rng);
    }
    double concordant = 0, discordant = 0, tie_x = 0, tie_y = 0;
    const double n0 = 60.0 * 59.0 / 2.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = i + 1; j < x.size(); ++j) {
        const double dx = x[i] - x[j], dy = y[i] - y[j];
        if (dx == 0 && dy == 0) continue;
        if (dx == 0) { tie_x += 1; continue; }
        if (dy == 0) { tie_y += 1; continue; }
        (dx * dy > 0 ? concordant : discordant) += 1;
      }
    }
    double tie_both = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t j = i + 1; j < x.size(); ++j) {
        if (x[i] == x[j] && y[i] == y[j]) tie_both += 1;
      }
    }
    const double nx = tie_x + tie_both, ny = tie_y + tie_both;
    const double oracle = (concordant - discordant) / std::sqrt((n0 - nx) * (n0 - ny));
    CHECK(kendall_tau_b(x, y) == doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("pruning drops constants and duplicate columns") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset d;
  d.features = Matrix(200, 4);
  d.feature_names = {"feature_0", "feature_1", "feature_2", "feature_3"};
  for (Eigen::Index i = 0; i < 200; ++i) {
    d.features(i, 0) = gauss(rng);
    d.features(i, 1) = d.features(i, 0);  // exact duplicate
    d.features(i, 2) = 3.25;              // constant
    d.features(i, 3) = gauss(rng);        // independent
  }
  d.magnitudes.assign(200, 1.0);
  d.time_key.assign(200, 0);
  d.group_key.assign(200, "g");

  const PruneLog log = prune_features(d);
  CHECK(log.kept_columns == std::vector<int>{0, 3});
  REQUIRE(log.dropped.size() == 2);
  CHECK(log.dropped[0].rfind("feature_2", 0) == 0);
  CHECK(log.dropped[1].rfind("feature_1", 0) == 0);

  const Dataset kept = select_features(d, log.kept_columns);
  CHECK(kept.features.cols() == 2);
  CHECK(kept.feature_names == std::vector<std::string>{"feature_0", "feature_3"});
  CHECK((kept.features.col(0) - d.features.col(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("pruning keeps independent gaussians") {
  std::mt19937_64 rng(19);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Dataset d;
  d.features = Matrix(500, 3);
  d.feature_names = {"feature_0", "feature_1", "feature_2"};
  for (Eigen::Index i = 0; i < d.features.size(); ++i) d.features(i) = gauss(rng);
  d.magnitudes.assign(500, 1.0);
  d.time_key.assign(500, 0);
  d.group_key.assign(500, "g");
  CHECK(prune_features(d).kept_columns == std::vector<int>{0, 1, 2});
}

TEST_CASE("time split partitions and excludes") {
  const SyntheticResult r = generate_synthetic(small_config(23));
  const SplitResult s = split_by_time(r.data, {0, 5}, {6, 7}, {8, 9});
  CHECK(s.train.size() + s.val.size() + s.test.size() + s.excluded == r.data.size());
  CHECK(s.excluded == 0);
  for (int t : s.train.time_key) CHECK(t <= 5);
  for (int t : s.val.time_key) { CHECK(t >= 6); CHECK(t <= 7); }
  for (int t : s.test.time_key) CHECK(t >= 8);

  const SplitResult gap = split_by_time(r.data, {0, 4}, {6, 7}, {8, 9});
  CHECK(gap.excluded > 0);
  CHECK(gap.train.size() + gap.val.size() + gap.test.size() + gap.excluded == r.data.size());

  CHECK_THROWS_AS(split_by_time(r.data, {0, 6}, {6, 7}, {8, 9}), std::domain_error);
}

TEST_CASE("undersampling keeps positives and hits the exact count") {
  SyntheticConfig cfg = small_config(29);
  cfg.n = 2000;
  SyntheticResult r = generate_synthetic(cfg);
  std::size_t zeros = 0, positives = 0;
  for (int c : r.data.classes) (c == 0 ? zeros : positives)++;

  const Dataset half = undersample_class0(r.data, 0.5, 7);
  std::size_t kept_zeros = 0, kept_pos = 0;
  for (int c : half.classes) (c == 0 ? kept_zeros : kept_pos)++;
  CHECK(kept_pos == positives);
  CHECK(kept_zeros == static_cast<std::size_t>(std::llround(0.5 * static_cast<double>(zeros))));

  // identity at ratio 1
  const Dataset full = undersample_class0(r.data, 1.0, 7);
  CHECK(full.size() == r.data.size());
  CHECK(full.magnitudes == r.data.magnitudes);

  // row order preserved: time keys stay sorted
  CHECK(std::is_sorted(half.time_key.begin(), half.time_key.end()));

  // deterministic in the seed
  const Dataset again = undersample_class0(r.data, 0.5, 7);
  CHECK(again.magnitudes == half.magnitudes);
  const Dataset other = undersample_class0(r.data, 0.5, 8);
  CHECK(other.magnitudes != half.magnitudes);
}

TEST_CASE("undersample grid is the 18-point ladder") {
  const std::vector<double> grid = undersample_grid();
  REQUIRE(grid.size() == 18);
  CHECK(grid.front() == doctest::Approx(0.15));
  CHECK(grid.back() == doctest::Approx(1.00));
  for (std::size_t i = 1; i < grid.size(); ++i) {
    CHECK(grid[i] - grid[i - 1] == doctest::Approx(0.05));
  }
}

TEST_CASE("standardizer zeroes means and units variances") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss(5.0, 3.0);
  Matrix x(400, 2);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = gauss(rng);
  const Standardizer z = Standardizer::fit(x);
  const Matrix xs = z.apply(x);
  CHECK(xs.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
  const Matrix centered = xs.rowwise() - xs.colwise().mean();
  const double var = (centered.array() * centered.array()).colwise().mean().maxCoeff();
  CHECK(var == doctest::Approx(1.0).epsilon(1e-6));

  // constant columns are not blown up
  Matrix c = Matrix::Constant(10, 1, 4.0);
  const Standardizer zc = Standardizer::fit(c);
  CHECK(zc.apply(c).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("benchmark run selects the validation argmax and evaluates it") {
  SyntheticConfig gen;
  gen.n = 1200;
  gen.d = 4;
  gen.zero_fraction = 0.6;
  gen.seed = 37;
  const SyntheticResult r = generate_synthetic(gen);
  const SplitResult splits = split_by_time(r.data, {0, 5}, {6, 7}, {8, 9});

  BenchmarkConfig cfg;
  cfg.mlp.hidden1 = 8;
  cfg.mlp.hidden2 = 8;
  cfg.mlp.embed = 8;
  cfg.optim.max_epochs = 15;
  cfg.optim.patience = 5;
  cfg.ratios = {0.3, 0.6, 1.0};

  const SweepResult sweep =
      run_benchmark(splits, {LossKind::ce, LossKind::wkloss}, {0}, cfg);
  REQUIRE(sweep.cells.size() == 6);

  for (LossKind loss : {LossKind::ce, LossKind::wkloss}) {
    const SweepCell* sel = sweep.selected_cell(loss, 0);
    REQUIRE(sel != nullptr);
    CHECK(sel->selected);
    CHECK(sel->test_report.has_value());
    CHECK(sel->val_report.has_value());
    CHECK_FALSE(sel->group_scores.empty());
    double best = -1.0;
    int selected_count = 0;
    for (const SweepCell& c : sweep.cells) {
      if (c.loss != loss) continue;
      CHECK_FALSE(c.failed);
      best = std::max(best, c.val_iou);
      selected_count += c.selected;
      if (!c.selected) CHECK_FALSE(c.test_report.has_value());
    }
    CHECK(selected_count == 1);
    CHECK(sel->val_iou == best);
    // ties go to the larger ratio
    for (const SweepCell& c : sweep.cells) {
      if (c.loss == loss && c.val_iou == best) CHECK(c.ratio <= sel->ratio);
    }
  }

  const nlohmann::json j = sweep_to_json(sweep);
  CHECK(j.contains("cells"));
  CHECK(j.contains("aggregate"));
  const std::string csv = sweep_to_csv(sweep);
  CHECK(csv.find("loss") != std::string::npos);
}

TEST_CASE("benchmark is deterministic end to end") {
  SyntheticConfig gen;
  gen.n = 600;
  gen.d = 3;
  gen.zero_fraction = 0.5;
  gen.seed = 41;
  const SyntheticResult r = generate_synthetic(gen);
  const SplitResult splits = split_by_time(r.data, {0, 5}, {6, 7}, {8, 9});
  BenchmarkConfig cfg;
  cfg.mlp.hidden1 = 6;
  cfg.mlp.hidden2 = 6;
  cfg.mlp.embed = 4;
  cfg.optim.max_epochs = 8;
  cfg.optim.patience = 4;
  cfg.ratios = {0.5, 1.0};
  const SweepResult a = run_benchmark(splits, {LossKind::ce}, {1}, cfg);
  const SweepResult b = run_benchmark(splits, {LossKind::ce}, {1}, cfg);
  CHECK(sweep_to_json(a).dump() == sweep_to_json(b).dump());
}

TEST_CASE("label permutation destroys the learnable signal") {
  SyntheticConfig gen;
  gen.n = 1500;
  gen.d = 4;
  gen.zero_fraction = 0.5;
  gen.seed = 43;
  SyntheticResult r = generate_synthetic(gen);
  SplitResult splits = split_by_time(r.data, {0, 5}, {6, 7}, {8, 9});

  BenchmarkConfig cfg;
  cfg.mlp.hidden1 = 12;
  cfg.mlp.hidden2 = 12;
  cfg.mlp.embed = 8;
  cfg.optim.max_epochs = 40;
  cfg.optim.patience = 40;

  const TrainedModel real = train_mlp(splits.train, splits.val, LossKind::ce, cfg, 0);

  SplitResult shuffled = splits;
  std::mt19937_64 rng(5);
  std::shuffle(shuffled.train.classes.begin(), shuffled.train.classes.end(), rng);
  std::shuffle(shuffled.val.classes.begin(), shuffled.val.classes.end(), rng);
  const TrainedModel noise = train_mlp(shuffled.train, shuffled.val, LossKind::ce, cfg, 0);

  CHECK(real.best_val_iou > noise.best_val_iou);
}

TEST_CASE("loss name round trips") {
  for (const std::string& name : all_loss_names()) {
    const auto kind = parse_loss(name);
    REQUIRE(kind.has_value());
    CHECK(loss_name(*kind) == name);
  }
  CHECK_FALSE(parse_loss("nonsense").has_value());
  CHECK(all_loss_names().size() == 6);
}

TEST_CASE("tdegpd head trains and emits five-class probabilities") {
  SyntheticConfig gen;
  gen.n = 800;
  gen.d = 3;
  gen.zero_fraction = 0.5;
  gen.seed = 47;
  const SyntheticResult r = generate_synthetic(gen);
  const SplitResult splits = split_by_time(r.data, {0, 5}, {6, 7}, {8, 9});
  BenchmarkConfig cfg;
  cfg.mlp.hidden1 = 8;
  cfg.mlp.hidden2 = 8;
  cfg.mlp.embed = 6;
  cfg.optim.max_epochs = 10;
  cfg.optim.patience = 5;
  const TrainedModel m = train_mlp(splits.train, splits.val, LossKind::tdegpd, cfg, 0);
  CHECK(m.state.cfg.out_dim == 3);
  const Matrix probs = model_class_probs(m, splits.test.features);
  CHECK(probs.cols() == 5);
  CHECK(probs.rows() == static_cast<Eigen::Index>(splits.test.size()));
  CHECK((probs.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
  CHECK(probs.minCoeff() >= 0.0);
}
