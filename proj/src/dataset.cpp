#include "ordfire/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ordfire/errors.hpp"

namespace ordfire {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    throw std::runtime_error("load_csv: unparsable or non-finite cell '" + cell + "' at row " +
                             std::to_string(row) + ", column " + col);
  }
  return v;
}

std::vector<double> average_ranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

// merge sort counting inversions, used by Knight's Kendall algorithm
std::uint64_t count_inversions(std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 2) return 0;
  std::vector<double> buf(n);
  std::uint64_t inv = 0;
  for (std::size_t width = 1; width < n; width *= 2) {
    for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
      const std::size_t mid = lo + width;
      const std::size_t hi = std::min(lo + 2 * width, n);
      std::size_t a = lo, b = mid, o = lo;
      while (a < mid && b < hi) {
        if (v[b] < v[a]) {
          inv += mid - a;
          buf[o++] = v[b++];
        } else {
          buf[o++] = v[a++];
        }
      }
      while (a < mid) buf[o++] = v[a++];
      while (b < hi) buf[o++] = v[b++];
      std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
                buf.begin() + static_cast<std::ptrdiff_t>(hi),
                v.begin() + static_cast<std::ptrdiff_t>(lo));
    }
  }
  return inv;
}

std::uint64_t tie_pairs(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::uint64_t pairs = 0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j + 1 < v.size() && v[j + 1] == v[i]) ++j;
    const std::uint64_t t = j - i + 1;
    pairs += t * (t - 1) / 2;
    i = j + 1;
  }
  return pairs;
}

}  // namespace

void Dataset::validate() const {
  const std::size_t n = magnitudes.size();
  if (static_cast<std::size_t>(features.rows()) != n || time_key.size() != n ||
      group_key.size() != n || (!classes.empty() && classes.size() != n)) {
    throw std::domain_error("Dataset: misaligned column lengths");
  }
  if (feature_names.size() != static_cast<std::size_t>(features.cols())) {
    throw std::domain_error("Dataset: feature name count mismatch");
  }
}

void apply_scheme(Dataset& data, const SeverityScheme& scheme) {
  data.classes = classify(scheme, data.magnitudes).classes;
}

SyntheticResult generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n < 100) throw std::domain_error("generate_synthetic: n must be >= 100");
  if (cfg.zero_fraction < 0.0 || cfg.zero_fraction >= 1.0) {
    throw std::domain_error("generate_synthetic: zero_fraction must lie in [0,1)");
  }
  cfg.params.validate();

  SyntheticResult out;
  double zero_fraction = cfg.zero_fraction;
  for (int attempt = 0;; ++attempt) {
    std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(attempt) * 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    Dataset data;
    data.features = Matrix(cfg.n, cfg.d);
    for (Eigen::Index i = 0; i < data.features.size(); ++i) data.features.data()[i] = gauss(rng);
    for (int c = 0; c < cfg.d; ++c) data.feature_names.push_back("feature_" + std::to_string(c));

    // unit-norm coefficient vector so the latent score is standard normal
    Eigen::VectorXd beta(cfg.d);
    for (int c = 0; c < cfg.d; ++c) beta(c) = (c % 2 == 0) ? 1.0 : -0.5;
    beta /= beta.norm();
    const Eigen::VectorXd latent = data.features * beta;

    const double slope = 0.35 * std::min(zero_fraction, 1.0 - zero_fraction);
    data.magnitudes.resize(static_cast<std::size_t>(cfg.n));
    std::set<double> distinct_pos;
    for (int i = 0; i < cfg.n; ++i) {
      const double p_zero = std::clamp(zero_fraction - slope * latent(i), 0.01, 0.99);
      double m = 0.0;
      const double u_zero = uni(rng);
      const double u_mag = uni(rng);  // drawn unconditionally to keep the stream aligned
      if (u_zero >= p_zero) {
        m = egpd_quantile(std::clamp(u_mag, 1e-12, 1.0 - 1e-12), cfg.params) *
            std::exp(0.6 * latent(i));
        distinct_pos.insert(m);
      }
      data.magnitudes[static_cast<std::size_t>(i)] = m;
    }
    if (distinct_pos.size() < 10) {
      if (zero_fraction <= 0.05) {
        throw DegenerateSample("generate_synthetic: could not produce enough positives");
      }
      zero_fraction = std::max(0.05, zero_fraction - 0.1);
      out.fraction_adjusted = true;
      continue;
    }

    data.time_key.resize(static_cast<std::size_t>(cfg.n));
    data.group_key.resize(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) {
      data.time_key[static_cast<std::size_t>(i)] =
          static_cast<int>(static_cast<std::int64_t>(i) * cfg.periods / cfg.n);
      data.group_key[static_cast<std::size_t>(i)] = "g" + std::to_string(i % cfg.groups);
    }

    out.scheme = fit_egpd_scheme(data.magnitudes);
    apply_scheme(data, out.scheme);
    out.data = std::move(data);
    return out;
  }
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_line(line);

  std::vector<int> feature_cols;
  int magnitude_col = -1, time_col = -1, group_col = -1;
  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c].rfind("feature_", 0) == 0) {
      feature_cols.push_back(static_cast<int>(c));
      feature_names.push_back(header[c]);
    } else if (header[c] == "magnitude") {
      magnitude_col = static_cast<int>(c);
    } else if (header[c] == "time_key") {
      time_col = static_cast<int>(c);
    } else if (header[c] == "group_key") {
      group_col = static_cast<int>(c);
    } else {
      throw std::runtime_error("load_csv: unknown column '" + header[c] + "'");
    }
  }
  if (feature_cols.empty() || magnitude_col < 0 || time_col < 0 || group_col < 0) {
    throw std::runtime_error(
        "load_csv: header must contain feature_*, magnitude, time_key, group_key");
  }

  std::vector<std::vector<double>> rows;
  Dataset data;
  data.feature_names = feature_names;
  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("load_csv: row " + std::to_string(row_no) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()));
    }
    std::vector<double> feats;
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      feats.push_back(
          parse_cell(cells[static_cast<std::size_t>(feature_cols[k])], row_no, feature_names[k]));
    }
    rows.push_back(std::move(feats));
    const double m = parse_cell(cells[static_cast<std::size_t>(magnitude_col)], row_no, "magnitude");
    if (m < 0.0) {
      throw std::runtime_error("load_csv: negative magnitude at row " + std::to_string(row_no));
    }
    data.magnitudes.push_back(m);
    data.time_key.push_back(static_cast<int>(
        parse_cell(cells[static_cast<std::size_t>(time_col)], row_no, "time_key")));
    data.group_key.push_back(cells[static_cast<std::size_t>(group_col)]);
  }
  data.features = Matrix(static_cast<Eigen::Index>(rows.size()),
                         static_cast<Eigen::Index>(feature_names.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  data.validate();
  return data;
}

void save_csv(const Dataset& data, const std::string& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_csv: cannot open " + path + " for writing");
  out.precision(17);
  for (const auto& name : data.feature_names) out << name << ',';
  out << "magnitude,time_key,group_key\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Eigen::Index c = 0; c < data.features.cols(); ++c) {
      out << data.features(static_cast<Eigen::Index>(i), c) << ',';
    }
    out << data.magnitudes[i] << ',' << data.time_key[i] << ',' << data.group_key[i] << '\n';
  }
  if (!out) throw std::runtime_error("save_csv: write failed for " + path);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw std::domain_error("pearson: need two equal-length series");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  return pearson(rx, ry);
}

double kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw std::domain_error("kendall: need two equal-length series");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });

  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t nx = tie_pairs({x.begin(), x.end()});
  const std::uint64_t ny = tie_pairs({y.begin(), y.end()});

  // joint ties
  std::uint64_t nxy = 0;
  {
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && x[idx[j + 1]] == x[idx[i]] && y[idx[j + 1]] == y[idx[i]]) ++j;
      const std::uint64_t t = j - i + 1;
      nxy += t * (t - 1) / 2;
      i = j + 1;
    }
  }

  std::vector<double> ysorted(n);
  for (std::size_t i = 0; i < n; ++i) ysorted[i] = y[idx[i]];
  const std::uint64_t disc = count_inversions(ysorted);

  const double numer = static_cast<double>(n0) - static_cast<double>(nx) -
                       static_cast<double>(ny) + static_cast<double>(nxy) -
                       2.0 * static_cast<double>(disc);
  const double denom = std::sqrt(static_cast<double>(n0 - nx)) *
                       std::sqrt(static_cast<double>(n0 - ny));
  if (denom == 0.0) return 0.0;
  return numer / denom;
}

PruneLog prune_features(const Dataset& train, double var_floor, double corr_ceiling) {
  train.validate();
  const Eigen::Index d = train.features.cols();
  if (d < 1) throw std::domain_error("prune_features: no features");
  const Eigen::Index n = train.features.rows();

  std::vector<double> variance(static_cast<std::size_t>(d), 0.0);
  for (Eigen::Index c = 0; c < d; ++c) {
    const double mean = train.features.col(c).mean();
    variance[static_cast<std::size_t>(c)] =
        (train.features.col(c).array() - mean).square().sum() / static_cast<double>(n);
  }

  std::vector<bool> dropped(static_cast<std::size_t>(d), false);
  PruneLog log;
  for (Eigen::Index c = 0; c < d; ++c) {
    if (variance[static_cast<std::size_t>(c)] < var_floor) {
      dropped[static_cast<std::size_t>(c)] = true;
      log.dropped.push_back(train.feature_names[static_cast<std::size_t>(c)] +
                            ": variance below floor");
    }
  }

  for (Eigen::Index a = 0; a < d; ++a) {
    if (dropped[static_cast<std::size_t>(a)]) continue;
    for (Eigen::Index b = a + 1; b < d; ++b) {
      if (dropped[static_cast<std::size_t>(a)]) break;
      if (dropped[static_cast<std::size_t>(b)]) continue;
      std::vector<double> xa(train.features.col(a).data(), train.features.col(a).data() + n);
      std::vector<double> xb(train.features.col(b).data(), train.features.col(b).data() + n);
      const double corr = std::max({std::abs(pearson(xa, xb)), std::abs(spearman(xa, xb)),
                                    std::abs(kendall_tau_b(xa, xb))});
      if (corr > corr_ceiling) {
        // drop the lower-variance member; equal variance keeps the lower index
        const Eigen::Index victim =
            variance[static_cast<std::size_t>(a)] < variance[static_cast<std::size_t>(b)] ? a : b;
        dropped[static_cast<std::size_t>(victim)] = true;
        log.dropped.push_back(train.feature_names[static_cast<std::size_t>(victim)] +
                              ": correlated with " +
                              train.feature_names[static_cast<std::size_t>(victim == a ? b : a)]);
      }
    }
  }

  for (Eigen::Index c = 0; c < d; ++c) {
    if (!dropped[static_cast<std::size_t>(c)]) log.kept_columns.push_back(static_cast<int>(c));
  }
  if (log.kept_columns.empty()) {
    throw std::domain_error("prune_features: every feature was dropped");
  }
  return log;
}

Dataset select_features(const Dataset& data, const std::vector<int>& kept_columns) {
  data.validate();
  Dataset out = data;
  out.features = Matrix(data.features.rows(), static_cast<Eigen::Index>(kept_columns.size()));
  out.feature_names.clear();
  for (std::size_t k = 0; k < kept_columns.size(); ++k) {
    const int c = kept_columns[k];
    if (c < 0 || c >= data.features.cols()) {
      throw std::domain_error("select_features: column index out of range");
    }
    out.features.col(static_cast<Eigen::Index>(k)) = data.features.col(c);
    out.feature_names.push_back(data.feature_names[static_cast<std::size_t>(c)]);
  }
  return out;
}

namespace {

Dataset take_rows(const Dataset& data, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.feature_names = data.feature_names;
  out.features = Matrix(static_cast<Eigen::Index>(rows.size()), data.features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
        data.features.row(static_cast<Eigen::Index>(rows[i]));
    out.magnitudes.push_back(data.magnitudes[rows[i]]);
    if (!data.classes.empty()) out.classes.push_back(data.classes[rows[i]]);
    out.time_key.push_back(data.time_key[rows[i]]);
    out.group_key.push_back(data.group_key[rows[i]]);
  }
  return out;
}

}  // namespace

SplitResult split_by_time(const Dataset& data, TimeRange train, TimeRange val, TimeRange test) {
  data.validate();
  auto overlaps = [](TimeRange a, TimeRange b) { return a.lo <= b.hi && b.lo <= a.hi; };
  if (overlaps(train, val) || overlaps(train, test) || overlaps(val, test)) {
    throw std::domain_error("split_by_time: ranges overlap");
  }
  std::vector<std::size_t> tr, va, te;
  std::size_t excluded = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int t = data.time_key[i];
    if (train.contains(t)) {
      tr.push_back(i);
    } else if (val.contains(t)) {
      va.push_back(i);
    } else if (test.contains(t)) {
      te.push_back(i);
    } else {
      ++excluded;
    }
  }
  return {take_rows(data, tr), take_rows(data, va), take_rows(data, te), excluded};
}

Dataset undersample_class0(const Dataset& data, double keep_ratio, std::uint64_t seed) {
  data.validate();
  if (data.classes.empty()) throw std::domain_error("undersample_class0: dataset has no classes");
  if (!(keep_ratio > 0.0) || keep_ratio > 1.0) {
    throw std::domain_error("undersample_class0: keep_ratio must lie in (0,1]");
  }
  if (keep_ratio == 1.0) return data;

  std::vector<std::size_t> zero_rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.classes[i] == 0) zero_rows.push_back(i);
  }
  const std::size_t keep =
      static_cast<std::size_t>(std::llround(keep_ratio * static_cast<double>(zero_rows.size())));
  std::mt19937_64 rng(seed);
  std::shuffle(zero_rows.begin(), zero_rows.end(), rng);
  std::set<std::size_t> kept_zero(zero_rows.begin(),
                                  zero_rows.begin() + static_cast<std::ptrdiff_t>(keep));

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.classes[i] != 0 || kept_zero.count(i)) rows.push_back(i);
  }
  return take_rows(data, rows);
}

std::vector<double> undersample_grid() {
  std::vector<double> grid;
  for (int pct = 15; pct <= 100; pct += 5) grid.push_back(pct / 100.0);
  return grid;
}

Standardizer Standardizer::fit(const Matrix& features) {
  Standardizer s;
  const double n = static_cast<double>(features.rows());
  s.mean = features.colwise().mean();
  s.scale = ((features.rowwise() - s.mean.transpose()).array().square().colwise().sum() / n)
                .sqrt()
                .matrix();
  for (Eigen::Index c = 0; c < s.scale.size(); ++c) s.scale(c) = std::max(s.scale(c), 1e-12);
  return s;
}

Matrix Standardizer::apply(const Matrix& features) const {
  return (features.rowwise() - mean.transpose()).array().rowwise() /
         scale.transpose().array();
}

}  // namespace ordfire
