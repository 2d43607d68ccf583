#include "ordfire/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace ordfire {
namespace {

std::array<int, kMlpLayers + 1> layer_dims(const MlpConfig& cfg) {
  return {cfg.input_dim, cfg.hidden1, cfg.hidden2, cfg.embed, cfg.out_dim};
}

const char* layer_name(int l) {
  static const char* names[kMlpLayers] = {"fc1", "fc2", "fc3", "out"};
  return names[l];
}

}  // namespace

void MlpConfig::validate() const {
  if (input_dim < 1 || hidden1 < 1 || hidden2 < 1 || embed < 1 || out_dim < 1) {
    throw std::domain_error("MlpConfig: all dimensions must be >= 1");
  }
}

void OptimConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::domain_error("OptimConfig: learning_rate must be > 0");
  if (batch_size < 1) throw std::domain_error("OptimConfig: batch_size must be >= 1");
  if (max_epochs < 1 || patience < 0) throw std::domain_error("OptimConfig: invalid epoch caps");
}

MlpState mlp_init(const MlpConfig& cfg) {
  cfg.validate();
  MlpState state;
  state.cfg = cfg;
  std::mt19937_64 rng(cfg.seed);
  const auto dims = layer_dims(cfg);
  for (int l = 0; l < kMlpLayers; ++l) {
    const std::size_t ul = static_cast<std::size_t>(l);
    const int fan_in = dims[ul], fan_out = dims[ul + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> uni(-limit, limit);
    state.w[ul] = Matrix(fan_in, fan_out);
    for (Eigen::Index i = 0; i < state.w[ul].size(); ++i) state.w[ul].data()[i] = uni(rng);
    state.b[ul] = Eigen::VectorXd::Zero(fan_out);
  }
  return state;
}

Matrix mlp_forward(const MlpState& state, const Matrix& batch, ForwardCache* cache) {
  if (batch.cols() != state.cfg.input_dim) {
    throw std::domain_error("mlp_forward: batch has " + std::to_string(batch.cols()) +
                            " columns, expected " + std::to_string(state.cfg.input_dim));
  }
  Matrix a = batch;
  if (cache) {
    cache->input = batch;
    cache->state_version = state.version;
  }
  for (int l = 0; l < kMlpLayers - 1; ++l) {
    const std::size_t ul = static_cast<std::size_t>(l);
    Matrix z = (a * state.w[ul]).rowwise() + state.b[ul].transpose();
    if (cache) cache->pre_relu[ul] = z;
    a = z.cwiseMax(0.0);
    if (cache) cache->post_relu[ul] = a;
  }
  return (a * state.w[kMlpLayers - 1]).rowwise() + state.b[kMlpLayers - 1].transpose();
}

MlpGrads mlp_backward(const MlpState& state, const ForwardCache& cache,
                      const Matrix& grad_logits) {
  if (cache.state_version != state.version) {
    throw std::logic_error("mlp_backward: cache is stale, rerun the forward pass");
  }
  if (grad_logits.rows() != cache.input.rows() || grad_logits.cols() != state.cfg.out_dim) {
    throw std::domain_error("mlp_backward: upstream gradient shape mismatch");
  }
  MlpGrads g;
  Matrix delta = grad_logits;
  for (int l = kMlpLayers - 1; l >= 0; --l) {
    const std::size_t ul = static_cast<std::size_t>(l);
    const Matrix& a_in = l == 0 ? cache.input : cache.post_relu[ul - 1];
    g.w[ul] = a_in.transpose() * delta;
    g.b[ul] = delta.colwise().sum();
    if (l > 0) {
      delta = delta * state.w[ul].transpose();
      // ReLU subgradient, 0 at 0
      delta = (cache.pre_relu[ul - 1].array() > 0.0).select(delta, 0.0);
    }
  }
  return g;
}

void optim_step(MlpState& state, const MlpGrads& grads, const OptimConfig& cfg, int t) {
  cfg.validate();
  if (t < 1) throw std::domain_error("optim_step: step index must be >= 1");
  for (int l = 0; l < kMlpLayers; ++l) {
    const std::size_t ul = static_cast<std::size_t>(l);
    if (grads.w[ul].rows() != state.w[ul].rows() || grads.w[ul].cols() != state.w[ul].cols() ||
        grads.b[ul].size() != state.b[ul].size()) {
      throw std::domain_error("optim_step: gradient shape mismatch");
    }
    if (!grads.w[ul].allFinite() || !grads.b[ul].allFinite()) {
      throw std::runtime_error(std::string("optim_step: non-finite gradient in layer ") +
                               layer_name(l));
    }
  }

  if (cfg.kind == OptimKind::sgd) {
    for (int l = 0; l < kMlpLayers; ++l) {
      const std::size_t ul = static_cast<std::size_t>(l);
      state.w[ul] -= cfg.learning_rate * grads.w[ul];
      state.b[ul] -= cfg.learning_rate * grads.b[ul];
    }
    ++state.version;
    return;
  }

  if (!state.moments_ready) {
    for (int l = 0; l < kMlpLayers; ++l) {
      const std::size_t ul = static_cast<std::size_t>(l);
      state.m_w[ul] = Matrix::Zero(state.w[ul].rows(), state.w[ul].cols());
      state.v_w[ul] = state.m_w[ul];
      state.m_b[ul] = Eigen::VectorXd::Zero(state.b[ul].size());
      state.v_b[ul] = state.m_b[ul];
    }
    state.moments_ready = true;
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (int l = 0; l < kMlpLayers; ++l) {
    const std::size_t ul = static_cast<std::size_t>(l);
    state.m_w[ul] = cfg.beta1 * state.m_w[ul] + (1.0 - cfg.beta1) * grads.w[ul];
    state.v_w[ul] =
        cfg.beta2 * state.v_w[ul] + (1.0 - cfg.beta2) * grads.w[ul].array().square().matrix();
    state.w[ul].array() -= cfg.learning_rate * (state.m_w[ul].array() / bc1) /
                           ((state.v_w[ul].array() / bc2).sqrt() + cfg.eps);
    state.m_b[ul] = cfg.beta1 * state.m_b[ul] + (1.0 - cfg.beta1) * grads.b[ul];
    state.v_b[ul] =
        cfg.beta2 * state.v_b[ul] + (1.0 - cfg.beta2) * grads.b[ul].array().square().matrix();
    state.b[ul].array() -= cfg.learning_rate * (state.m_b[ul].array() / bc1) /
                           ((state.v_b[ul].array() / bc2).sqrt() + cfg.eps);
  }
  ++state.version;
}

nlohmann::json MlpState::to_json() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["version"] = version;
  j["config"] = {{"input_dim", cfg.input_dim}, {"hidden1", cfg.hidden1},
                 {"hidden2", cfg.hidden2},    {"embed", cfg.embed},
                 {"out_dim", cfg.out_dim},    {"seed", cfg.seed}};
  nlohmann::json layers = nlohmann::json::array();
  for (int l = 0; l < kMlpLayers; ++l) {
    const std::size_t ul = static_cast<std::size_t>(l);
    std::vector<double> wf(w[ul].data(), w[ul].data() + w[ul].size());
    std::vector<double> bf(b[ul].data(), b[ul].data() + b[ul].size());
    layers.push_back({{"name", layer_name(l)}, {"weights", wf}, {"bias", bf}});
  }
  j["layers"] = layers;
  return j;
}

MlpState MlpState::from_json(const nlohmann::json& j) {
  if (j.at("format_version").get<int>() != 1) {
    throw std::domain_error("unsupported checkpoint format version");
  }
  const auto& c = j.at("config");
  MlpConfig cfg{c.at("input_dim").get<int>(), c.at("hidden1").get<int>(),
                c.at("hidden2").get<int>(),   c.at("embed").get<int>(),
                c.at("out_dim").get<int>(),   c.at("seed").get<std::uint64_t>()};
  MlpState state = mlp_init(cfg);
  const auto dims = layer_dims(cfg);
  const auto& layers = j.at("layers");
  if (layers.size() != kMlpLayers) throw std::domain_error("checkpoint layer count mismatch");
  for (int l = 0; l < kMlpLayers; ++l) {
    const std::size_t ul = static_cast<std::size_t>(l);
    const auto wf = layers.at(ul).at("weights").get<std::vector<double>>();
    const auto bf = layers.at(ul).at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(wf.size()) != state.w[ul].size() ||
        static_cast<Eigen::Index>(bf.size()) != state.b[ul].size()) {
      throw std::domain_error("checkpoint parameter size mismatch in layer " +
                              std::string(layer_name(l)));
    }
    std::copy(wf.begin(), wf.end(), state.w[ul].data());
    std::copy(bf.begin(), bf.end(), state.b[ul].data());
    (void)dims;
  }
  state.version = j.value("version", std::uint64_t{0});
  return state;
}

}  // namespace ordfire
