#pragma once

#include <cstdint>
#include <vector>

#include "idqn/nn/network.hpp"

namespace idqn::nn {

enum class OptimizerKind { sgd_momentum, adam };

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::sgd_momentum;
  double learning_rate = 0.001;
  double momentum = 0.95;  // sgd_momentum
  double beta1 = 0.9;      // adam
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // L2 penalty folded into the gradient: g + weight_decay * w.
  double weight_decay = 0.0;
  std::uint64_t step_count = 0;
  // sgd_momentum: velocity per parameter. adam: first moments then second
  // moments (2 * params.size() tensors).
  std::vector<Tensor> slots;

  static OptimizerState sgd_momentum(double learning_rate, double momentum,
                                     double weight_decay = 0.0);
  static OptimizerState adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                             double epsilon = 1e-8, double weight_decay = 0.0);
};

// v <- momentum * v - lr * g;  w <- w + v
void sgd_momentum_step(OptimizerState& state, Weights<float>& params,
                       const std::vector<Tensor>& grads);

// Bias-corrected Adam.
void adam_step(OptimizerState& state, Weights<float>& params,
               const std::vector<Tensor>& grads);

// Dispatches on state.kind.
void optimizer_step(OptimizerState& state, Weights<float>& params,
                    const std::vector<Tensor>& grads);

}  // namespace idqn::nn
