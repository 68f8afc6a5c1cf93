#include "idqn/pretrain/architecture.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "idqn/errors.hpp"

namespace idqn::pretrain {

using nn::LayerSpec;

namespace {

struct ConvRow {
  std::size_t channels;
  std::size_t kernel;
  std::size_t stride;
};

std::vector<LayerSpec> build(const ArchitectureOptions& options,
                             const std::array<ConvRow, 5>& convs, bool dropout) {
  if (!(options.width > 0.0)) throw ConfigError("architecture width must be > 0");
  std::vector<LayerSpec> layers{LayerSpec::normalize()};
  for (const auto& row : convs) {
    layers.push_back(
        LayerSpec::conv2d(scaled(row.channels, options.width), row.kernel, row.kernel, row.stride));
    layers.push_back(LayerSpec::elu());
    if (dropout) layers.push_back(LayerSpec::dropout(0.5));
  }
  layers.push_back(LayerSpec::flatten());
  const std::array<std::pair<std::size_t, double>, 4> fcs{
      {{scaled(1164, options.width), 0.5},
       {scaled(100, options.width), 0.4},
       {scaled(50, options.width), 0.25},
       {10, 0.0}}};
  for (const auto& [units, rate] : fcs) {
    layers.push_back(LayerSpec::dense(units));
    layers.push_back(LayerSpec::elu());
    if (dropout && rate > 0.0) layers.push_back(LayerSpec::dropout(rate));
  }
  layers.push_back(LayerSpec::dense(3));
  return layers;
}

}  // namespace

std::size_t scaled(std::size_t units, double width) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(units * width)));
}

std::vector<LayerSpec> build_pretrain_network(const ArchitectureOptions& options) {
  return build(options, {{{24, 5, 2}, {36, 5, 2}, {48, 5, 2}, {64, 3, 1}, {64, 3, 1}}}, true);
}

nn::Shape pretrain_input_shape() { return {3, 64, 64}; }

std::vector<LayerSpec> build_q_network(const ArchitectureOptions& options) {
  return build(options, {{{24, 5, 2}, {36, 5, 2}, {48, 5, 3}, {64, 3, 1}, {64, 3, 1}}}, false);
}

nn::Shape q_input_shape(std::size_t history_length) { return {history_length, 84, 84}; }

}  // namespace idqn::pretrain
