#pragma once

#include <cstdint>
#include <string>

#include "idqn/nn/network.hpp"

namespace idqn::nn {

struct GradientCheckOptions {
  double step = 1e-3;
  std::uint64_t seed = 0;  // draws the fixed regression target of the probe loss
  bool check_input = true;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst;  // "<tensor>[index]" of the worst entry
  std::size_t checked = 0;
  std::size_t skipped = 0;  // probes straddling an ELU kink
};

// Compares backward() against central finite differences of the probe loss
// mean((f(x) - target)^2), perturbing every parameter (and every input value
// when check_input is set). Runs in eval mode, so dropout is inactive.
// Relative error: |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
// Entries whose +/- probes put some ELU input on opposite sides of zero are
// counted in `skipped` instead of compared.
GradientCheckResult gradient_check(const Network<double>& net, const BasicTensor<double>& input,
                                   const GradientCheckOptions& options = {});

}  // namespace idqn::nn
