#include "ordfire/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ordfire {

std::string loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::ce: return "ce";
    case LossKind::wkloss: return "wkloss";
    case LossKind::mcewk: return "mcewk";
    case LossKind::gwdl: return "gwdl";
    case LossKind::atbce: return "atbce";
    case LossKind::tdegpd: return "tdegpd";
  }
  return "unknown";
}

std::optional<LossKind> parse_loss(const std::string& name) {
  for (LossKind k : {LossKind::ce, LossKind::wkloss, LossKind::mcewk, LossKind::gwdl,
                     LossKind::atbce, LossKind::tdegpd}) {
    if (loss_name(k) == name) return k;
  }
  return std::nullopt;
}

std::vector<std::string> all_loss_names() {
  return {"ce", "wkloss", "mcewk", "gwdl", "atbce", "tdegpd"};
}

LossResult eval_loss(LossKind kind, const Matrix& logits, const LabelBatch& labels,
                     const LossConfig& cfg) {
  if (kind == LossKind::tdegpd) return tdegpd_loss(logits, labels);
  const Matrix probs = softmax(logits);
  switch (kind) {
    case LossKind::ce:
      return ce_loss(probs, labels);
    case LossKind::wkloss:
      return wk_loss(probs, labels,
                     cfg.penalty_kind == PenaltyKind::quadratic
                         ? PenaltyMatrix::quadratic(static_cast<int>(probs.cols()))
                         : PenaltyMatrix::linear(static_cast<int>(probs.cols())),
                     cfg);
    case LossKind::mcewk:
      return mcewk_loss(probs, labels, cfg);
    case LossKind::gwdl:
      return gwdl_loss(probs, labels, CostMatrix::default5(), cfg);
    case LossKind::atbce:
      return at_bce_loss(probs, labels);
    default:
      throw std::logic_error("eval_loss: unhandled loss kind");
  }
}

namespace {

double validation_iou(const MlpState& state, LossKind kind, const Matrix& x,
                      std::span<const int> truth, int num_classes) {
  const Matrix logits = mlp_forward(state, x);
  const Matrix probs = kind == LossKind::tdegpd ? tdegpd_class_probs(logits, num_classes - 1)
                                                : softmax(logits);
  return iou(truth, predict_class(probs), num_classes).macro;
}

}  // namespace

TrainedModel train_mlp(const Dataset& train, const Dataset& val, LossKind loss,
                       const BenchmarkConfig& cfg, std::uint64_t seed) {
  train.validate();
  val.validate();
  if (train.classes.empty() || val.classes.empty()) {
    throw std::domain_error("train_mlp: datasets must carry classes");
  }
  cfg.optim.validate();

  TrainedModel model;
  model.loss = loss;
  model.scaler = Standardizer::fit(train.features);
  const Matrix xtr = model.scaler.apply(train.features);
  const Matrix xval = model.scaler.apply(val.features);

  MlpConfig mlp_cfg = cfg.mlp;
  mlp_cfg.input_dim = static_cast<int>(xtr.cols());
  mlp_cfg.out_dim = loss == LossKind::tdegpd ? 3 : cfg.num_classes;
  mlp_cfg.seed = seed;
  MlpState state = mlp_init(mlp_cfg);

  const std::size_t n = train.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(seed ^ 0xD1B54A32D192ED03ULL);

  MlpState best_state = state;
  double best_iou = validation_iou(state, loss, xval, val.classes, cfg.num_classes);
  int best_epoch = 0;
  int since_best = 0;
  int step = 0;

  for (int epoch = 1; epoch <= cfg.optim.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.optim.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(cfg.optim.batch_size));
      Matrix batch(static_cast<Eigen::Index>(stop - start), xtr.cols());
      LabelBatch labels;
      for (std::size_t i = start; i < stop; ++i) {
        batch.row(static_cast<Eigen::Index>(i - start)) =
            xtr.row(static_cast<Eigen::Index>(order[i]));
        labels.labels.push_back(train.classes[order[i]]);
      }
      ForwardCache cache;
      const Matrix logits = mlp_forward(state, batch, &cache);
      const LossResult res = eval_loss(loss, logits, labels, cfg.loss_cfg);
      const MlpGrads grads = mlp_backward(state, cache, res.grad);
      optim_step(state, grads, cfg.optim, ++step);
    }
    const double v = validation_iou(state, loss, xval, val.classes, cfg.num_classes);
    if (v > best_iou) {
      best_iou = v;
      best_state = state;
      best_epoch = epoch;
      since_best = 0;
    } else if (++since_best > cfg.optim.patience) {
      break;
    }
  }

  model.state = std::move(best_state);
  model.best_val_iou = best_iou;
  model.best_epoch = best_epoch;
  return model;
}

Matrix model_class_probs(const TrainedModel& model, const Matrix& features) {
  const Matrix logits = mlp_forward(model.state, model.scaler.apply(features));
  if (model.loss == LossKind::tdegpd) return tdegpd_class_probs(logits);
  return softmax(logits);
}

const SweepCell* SweepResult::selected_cell(LossKind loss, std::uint64_t seed) const {
  for (const auto& c : cells) {
    if (c.loss == loss && c.seed == seed && c.selected) return &c;
  }
  return nullptr;
}

SweepResult run_benchmark(const SplitResult& splits, const std::vector<LossKind>& losses,
                          const std::vector<std::uint64_t>& seeds, const BenchmarkConfig& cfg) {
  if (splits.train.size() == 0 || splits.val.size() == 0 || splits.test.size() == 0) {
    throw std::domain_error("run_benchmark: all three splits must be nonempty");
  }
  SweepResult result;
  for (LossKind loss : losses) {
    for (std::uint64_t seed : seeds) {
      std::vector<SweepCell> row;
      std::vector<TrainedModel> models;
      for (double ratio : cfg.ratios) {
        SweepCell cell;
        cell.loss = loss;
        cell.seed = seed;
        cell.ratio = ratio;
        try {
          const Dataset sub = undersample_class0(splits.train, ratio, seed);
          TrainedModel model = train_mlp(sub, splits.val, loss, cfg, seed);
          cell.val_iou = model.best_val_iou;
          models.push_back(std::move(model));
        } catch (const std::exception& e) {
          cell.failed = true;
          cell.error = e.what();
          models.emplace_back();
        }
        row.push_back(std::move(cell));
      }
      // argmax over validation IoU, ties to the larger ratio
      int pick = -1;
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i].failed) continue;
        if (pick < 0 || row[i].val_iou >= row[static_cast<std::size_t>(pick)].val_iou) {
          pick = static_cast<int>(i);
        }
      }
      if (pick >= 0) {
        SweepCell& sel = row[static_cast<std::size_t>(pick)];
        sel.selected = true;
        const TrainedModel& model = models[static_cast<std::size_t>(pick)];
        const Matrix val_probs = model_class_probs(model, splits.val.features);
        sel.val_report = evaluate(splits.val.classes, val_probs, cfg.ece_bins);
        const Matrix test_probs = model_class_probs(model, splits.test.features);
        sel.test_report = evaluate(splits.test.classes, test_probs, cfg.ece_bins);

        std::map<std::string, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < splits.test.size(); ++i) {
          groups[splits.test.group_key[i]].push_back(i);
        }
        const std::vector<int> pred = predict_class(test_probs);
        for (const auto& [g, idx] : groups) {
          std::vector<int> t, p;
          for (std::size_t i : idx) {
            t.push_back(splits.test.classes[i]);
            p.push_back(pred[i]);
          }
          GroupScore gs;
          gs.count = idx.size();
          gs.iou_macro = iou(t, p, cfg.num_classes).macro;
          gs.f1_bin = binary_scores(t, p).f1;
          sel.group_scores[g] = gs;
        }
      }
      for (auto& c : row) result.cells.push_back(std::move(c));
    }
  }
  return result;
}

namespace {

nlohmann::json aggregate_losses(const SweepResult& result) {
  // per loss, over the selected cells of each seed
  std::map<std::string, std::vector<const SweepCell*>> by_loss;
  for (const auto& c : result.cells) {
    if (c.selected && c.test_report) by_loss[loss_name(c.loss)].push_back(&c);
  }
  auto stats = [](std::vector<double> v) {
    nlohmann::json j;
    if (v.empty()) return nlohmann::json(nullptr);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    const double median = m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
    j["mean"] = mean;
    j["std"] = std::sqrt(var);
    j["median"] = median;
    return j;
  };

  nlohmann::json out = nlohmann::json::object();
  for (const auto& [name, cells] : by_loss) {
    std::vector<double> iou_macro, iou_ext, f1, oerr, miss_dist, ratios;
    for (const SweepCell* c : cells) {
      iou_macro.push_back(c->test_report->iou_macro);
      f1.push_back(c->test_report->f1_bin);
      oerr.push_back(c->test_report->ordinal_err);
      ratios.push_back(c->ratio);
      if (c->test_report->extreme_present) {
        iou_ext.push_back(c->test_report->iou_extreme);
        miss_dist.push_back(c->test_report->extreme_miss_distance);
      }
    }
    out[name] = {{"seeds", cells.size()},
                 {"selected_ratio", stats(ratios)},
                 {"iou_macro", stats(iou_macro)},
                 {"iou_extreme", stats(iou_ext)},
                 {"f1_bin", stats(f1)},
                 {"ordinal_error", stats(oerr)},
                 {"extreme_miss_distance", stats(miss_dist)}};
  }
  return out;
}

}  // namespace

nlohmann::json sweep_to_json(const SweepResult& result) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : result.cells) {
    nlohmann::json j;
    j["loss"] = loss_name(c.loss);
    j["seed"] = c.seed;
    j["ratio"] = c.ratio;
    j["failed"] = c.failed;
    if (c.failed) j["error"] = c.error;
    j["val_iou"] = c.val_iou;
    j["selected"] = c.selected;
    if (c.val_report) j["val_report"] = c.val_report->to_json();
    if (c.test_report) j["test_report"] = c.test_report->to_json();
    if (!c.group_scores.empty()) {
      nlohmann::json g = nlohmann::json::object();
      for (const auto& [name, gs] : c.group_scores) {
        g[name] = {{"iou_macro", gs.iou_macro}, {"f1_bin", gs.f1_bin}, {"count", gs.count}};
      }
      j["group_scores"] = g;
    }
    cells.push_back(std::move(j));
  }
  nlohmann::json out;
  out["cells"] = cells;
  out["aggregate"] = aggregate_losses(result);
  return out;
}

std::vector<GradCheckRow> gradcheck(const std::vector<LossKind>& losses, int batches,
                                    std::uint64_t seed, double tol) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, 4);
  const LossConfig loss_cfg;

  std::vector<GradCheckRow> rows;
  for (LossKind kind : losses) {
    GradCheckRow row;
    row.loss = kind;
    for (int b = 0; b < batches; ++b) {
      MlpConfig cfg;
      cfg.input_dim = 4;
      cfg.hidden1 = 6;
      cfg.hidden2 = 5;
      cfg.embed = 4;
      cfg.out_dim = kind == LossKind::tdegpd ? 3 : 5;
      cfg.seed = rng();
      MlpState state = mlp_init(cfg);

      const int n = 6;
      Matrix x(n, cfg.input_dim);
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = gauss(rng);
      LabelBatch labels;
      for (int i = 0; i < n; ++i) labels.labels.push_back(cls(rng));
      labels.labels[0] = 0;
      labels.labels[1] = 3;  // never an all-one-class or all-background batch

      ForwardCache cache;
      const Matrix logits = mlp_forward(state, x, &cache);
      const LossResult res = eval_loss(kind, logits, labels, loss_cfg);
      if (res.clamped) continue;
      const MlpGrads grads = mlp_backward(state, cache, res.grad);

      // loss value plus the ReLU activation pattern, so probes that flip an
      // activation sign (where the composite is not differentiable) are skipped
      auto loss_and_pattern = [&](std::vector<bool>& pattern) {
        ForwardCache c;
        const Matrix out = mlp_forward(state, x, &c);
        pattern.clear();
        for (const Matrix& pre : c.pre_relu) {
          for (Eigen::Index i = 0; i < pre.size(); ++i) pattern.push_back(pre(i) > 0.0);
        }
        return eval_loss(kind, out, labels, loss_cfg).value;
      };
      const double h = 1e-5;
      auto probe = [&](double& param, double analytic) {
        const double orig = param;
        std::vector<bool> pat_up, pat_dn;
        param = orig + h;
        const double up = loss_and_pattern(pat_up);
        param = orig - h;
        const double dn = loss_and_pattern(pat_dn);
        param = orig;
        if (pat_up != pat_dn) return;
        const double fd = (up - dn) / (2.0 * h);
        const double rel =
            std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-6});
        row.max_rel_error = std::max(row.max_rel_error, rel);
      };
      for (int l = 0; l < kMlpLayers; ++l) {
        const auto li = static_cast<std::size_t>(l);
        for (Eigen::Index i = 0; i < state.w[li].size(); ++i) {
          probe(state.w[li](i), grads.w[li](i));
        }
        for (Eigen::Index i = 0; i < state.b[li].size(); ++i) {
          probe(state.b[li](i), grads.b[li](i));
        }
      }
    }
    row.pass = row.max_rel_error < tol;
    rows.push_back(row);
  }
  return rows;
}

std::string sweep_to_csv(const SweepResult& result) {
  std::ostringstream os;
  os.precision(10);
  os << "loss,seed,ratio,failed,selected,val_iou," << EvalReport::csv_header() << '\n';
  for (const auto& c : result.cells) {
    os << loss_name(c.loss) << ',' << c.seed << ',' << c.ratio << ',' << (c.failed ? 1 : 0) << ','
       << (c.selected ? 1 : 0) << ',' << c.val_iou << ',';
    if (c.test_report) os << c.test_report->csv_row();
    os << '\n';
  }
  return os.str();
}

}  // namespace ordfire
