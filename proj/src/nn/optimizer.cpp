#include "idqn/nn/optimizer.hpp"

#include <cmath>

#include "idqn/errors.hpp"

namespace idqn::nn {

OptimizerState OptimizerState::sgd_momentum(double learning_rate, double momentum,
                                            double weight_decay) {
  OptimizerState s;
  s.kind = OptimizerKind::sgd_momentum;
  s.learning_rate = learning_rate;
  s.momentum = momentum;
  s.weight_decay = weight_decay;
  return s;
}

OptimizerState OptimizerState::adam(double learning_rate, double beta1, double beta2,
                                    double epsilon, double weight_decay) {
  OptimizerState s;
  s.kind = OptimizerKind::adam;
  s.learning_rate = learning_rate;
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  s.weight_decay = weight_decay;
  return s;
}

namespace {

void check_shapes(const Weights<float>& params, const std::vector<Tensor>& grads) {
  if (params.size() != grads.size()) {
    throw ConfigError("optimizer: " + std::to_string(grads.size()) + " gradients for " +
                      std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].value.shape() != grads[i].shape()) {
      throw ConfigError("optimizer: gradient " + shape_string(grads[i].shape()) +
                        " does not match parameter " + params[i].name + " " +
                        shape_string(params[i].value.shape()));
    }
  }
}

void ensure_slots(OptimizerState& state, const Weights<float>& params, std::size_t per_param) {
  const std::size_t expected = params.size() * per_param;
  if (state.slots.size() == expected) {
    for (std::size_t i = 0; i < expected; ++i) {
      if (state.slots[i].shape() != params[i % params.size()].value.shape()) {
        throw ConfigError("optimizer: slot shapes do not mirror parameters");
      }
    }
    return;
  }
  if (!state.slots.empty()) throw ConfigError("optimizer: slot count does not match parameters");
  for (std::size_t k = 0; k < per_param; ++k) {
    for (const auto& p : params) state.slots.emplace_back(p.value.shape());
  }
}

}  // namespace

void sgd_momentum_step(OptimizerState& state, Weights<float>& params,
                       const std::vector<Tensor>& grads) {
  if (state.kind != OptimizerKind::sgd_momentum) throw UsageError("state is not sgd_momentum");
  check_shapes(params, grads);
  ensure_slots(state, params, 1);
  const float lr = static_cast<float>(state.learning_rate);
  const float mu = static_cast<float>(state.momentum);
  const float decay = static_cast<float>(state.weight_decay);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].value.data();
    auto v = state.slots[i].data();
    auto g = grads[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      v[j] = mu * v[j] - lr * (g[j] + decay * w[j]);
      w[j] += v[j];
    }
  }
  ++state.step_count;
}

void adam_step(OptimizerState& state, Weights<float>& params,
               const std::vector<Tensor>& grads) {
  if (state.kind != OptimizerKind::adam) throw UsageError("state is not adam");
  check_shapes(params, grads);
  ensure_slots(state, params, 2);
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  const float b1 = static_cast<float>(state.beta1);
  const float b2 = static_cast<float>(state.beta2);
  const float decay = static_cast<float>(state.weight_decay);
  const double lr = state.learning_rate;
  const double eps = state.epsilon;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].value.data();
    auto m = state.slots[i].data();
    auto v = state.slots[params.size() + i].data();
    auto g = grads[i].data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      const float gj = g[j] + decay * w[j];
      m[j] = b1 * m[j] + (1.0f - b1) * gj;
      v[j] = b2 * v[j] + (1.0f - b2) * gj * gj;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      w[j] -= static_cast<float>(lr * m_hat / (std::sqrt(v_hat) + eps));
    }
  }
}

void optimizer_step(OptimizerState& state, Weights<float>& params,
                    const std::vector<Tensor>& grads) {
  if (state.kind == OptimizerKind::adam) {
    adam_step(state, params, grads);
  } else {
    sgd_momentum_step(state, params, grads);
  }
}

}  // namespace idqn::nn
