#include "idqn/nn/gradient_check.hpp"

#include <algorithm>
#include <cmath>

namespace idqn::nn {

namespace {

double probe_loss(const BasicTensor<double>& out, const BasicTensor<double>& target) {
  double sum = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = out[i] - target[i];
    sum += d * d;
  }
  return sum / static_cast<double>(out.size());
}

// True when some ELU input changes sign between the two probes; the central
// difference then straddles the curvature kink at zero and is not a valid
// reference for the derivative.
bool crosses_kink(const Network<double>& net, const ForwardPass<double>& plus,
                  const ForwardPass<double>& minus) {
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    if (net.layers()[i].kind != LayerKind::elu) continue;
    const auto& a = plus.inputs[i];
    const auto& b = minus.inputs[i];
    for (std::size_t j = 0; j < a.size(); ++j) {
      if ((a[j] >= 0.0) != (b[j] >= 0.0)) return true;
    }
  }
  return false;
}

void consider(GradientCheckResult& result, double analytic, double numeric,
              const std::string& name, std::size_t index) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  const double err = std::abs(analytic - numeric) / denom;
  ++result.checked;
  if (err > result.max_relative_error) {
    result.max_relative_error = err;
    result.worst = name + "[" + std::to_string(index) + "]";
  }
}

}  // namespace

GradientCheckResult gradient_check(const Network<double>& net, const BasicTensor<double>& input,
                                   const GradientCheckOptions& options) {
  Network<double> probe = net;
  const auto base = probe.forward(input, false, nullptr);

  BasicTensor<double> target(base.output.shape());
  Rng rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& t : target.data()) t = normal(rng);

  BasicTensor<double> grad_out(base.output.shape());
  const double n = static_cast<double>(grad_out.size());
  for (std::size_t i = 0; i < grad_out.size(); ++i) {
    grad_out[i] = 2.0 * (base.output[i] - target[i]) / n;
  }
  const auto grads = probe.backward(base, grad_out, options.check_input);

  GradientCheckResult result;
  const double h = options.step;
  for (std::size_t p = 0; p < probe.weights().size(); ++p) {
    auto& values = probe.weights()[p].value;
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + h;
      const auto plus = probe.forward(input, false, nullptr);
      values[j] = saved - h;
      const auto minus = probe.forward(input, false, nullptr);
      values[j] = saved;
      if (crosses_kink(probe, plus, minus)) {
        ++result.skipped;
        continue;
      }
      const double numeric =
          (probe_loss(plus.output, target) - probe_loss(minus.output, target)) / (2.0 * h);
      consider(result, grads.params[p][j], numeric, probe.weights()[p].name, j);
    }
  }
  if (options.check_input) {
    BasicTensor<double> x = input;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double saved = x[j];
      x[j] = saved + h;
      const auto plus = probe.forward(x, false, nullptr);
      x[j] = saved - h;
      const auto minus = probe.forward(x, false, nullptr);
      x[j] = saved;
      if (crosses_kink(probe, plus, minus)) {
        ++result.skipped;
        continue;
      }
      const double numeric =
          (probe_loss(plus.output, target) - probe_loss(minus.output, target)) / (2.0 * h);
      consider(result, grads.input[j], numeric, "input", j);
    }
  }
  return result;
}

}  // namespace idqn::nn
