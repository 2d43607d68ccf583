#pragma once

#include <array>
#include <cstdint>

#include "json.hpp"
#include "ordfire/losses.hpp"

namespace ordfire {

struct MlpConfig {
  int input_dim = 1;
  int hidden1 = 128;
  int hidden2 = 256;
  int embed = 64;
  int out_dim = 5;  // 5 for the softmax head, 3 for the TDeGPD head
  std::uint64_t seed = 0;

  void validate() const;
};

enum class OptimKind { sgd, adam };

struct OptimConfig {
  OptimKind kind = OptimKind::adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch_size = 64;
  int max_epochs = 300;
  int patience = 20;

  void validate() const;
};

inline constexpr int kMlpLayers = 4;

struct MlpGrads {
  std::array<Matrix, kMlpLayers> w;
  std::array<Eigen::VectorXd, kMlpLayers> b;
};

// Four affine layers, ReLU between the first three and the output layer.
struct MlpState {
  MlpConfig cfg;
  std::array<Matrix, kMlpLayers> w;  // w[l] is (in_l x out_l)
  std::array<Eigen::VectorXd, kMlpLayers> b;
  // Adam moments, allocated lazily on the first adam step
  std::array<Matrix, kMlpLayers> m_w, v_w;
  std::array<Eigen::VectorXd, kMlpLayers> m_b, v_b;
  bool moments_ready = false;
  std::uint64_t version = 0;  // bumped by every optimizer step

  nlohmann::json to_json() const;
  static MlpState from_json(const nlohmann::json& j);
};

struct ForwardCache {
  Matrix input;
  std::array<Matrix, kMlpLayers - 1> post_relu;  // activations after each hidden layer
  std::array<Matrix, kMlpLayers - 1> pre_relu;
  std::uint64_t state_version = 0;
};

// Deterministic Glorot-uniform weights, zero biases.
MlpState mlp_init(const MlpConfig& cfg);

// Returns the N x out_dim logits; fills cache when given.
Matrix mlp_forward(const MlpState& state, const Matrix& batch, ForwardCache* cache = nullptr);

// Exact reverse-mode gradients from an upstream dLoss/dLogits. Throws
// std::logic_error when the cache does not match the current state.
MlpGrads mlp_backward(const MlpState& state, const ForwardCache& cache,
                      const Matrix& grad_logits);

// One SGD or Adam update in place; t is the 1-based step index.
void optim_step(MlpState& state, const MlpGrads& grads, const OptimConfig& cfg, int t);

}  // namespace ordfire
