#pragma once

#include <cstddef>
#include <cmath>
#include <string>

#include "idqn/nn/tensor.hpp"

namespace idqn::nn {

enum class LayerKind { normalize, conv2d, dense, elu, dropout, flatten };

std::string to_string(LayerKind kind);

// One entry of a sequential network description. Only the fields relevant to
// `kind` are meaningful.
struct LayerSpec {
  LayerKind kind = LayerKind::flatten;
  std::size_t out_channels = 0;  // conv2d
  std::size_t kernel_h = 0;      // conv2d
  std::size_t kernel_w = 0;      // conv2d
  std::size_t stride = 1;        // conv2d
  std::size_t units = 0;         // dense
  double rate = 0.0;             // dropout

  static LayerSpec normalize();
  static LayerSpec conv2d(std::size_t out_channels, std::size_t kernel_h,
                          std::size_t kernel_w, std::size_t stride);
  static LayerSpec dense(std::size_t units);
  static LayerSpec elu();
  static LayerSpec dropout(double rate);
  static LayerSpec flatten();

  bool has_params() const { return kind == LayerKind::conv2d || kind == LayerKind::dense; }
  std::string describe() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct SpatialShape {
  std::size_t height;
  std::size_t width;
  friend bool operator==(const SpatialShape&, const SpatialShape&) = default;
};

// Valid-padding convolution output size: floor((in - k) / stride) + 1.
SpatialShape conv2d_shape(std::size_t in_h, std::size_t in_w, std::size_t kernel_h,
                          std::size_t kernel_w, std::size_t stride);

// Per-sample output shape of `layer` (index used in error messages).
// Throws ConfigError naming the layer when the input cannot feed it.
Shape layer_output_shape(const LayerSpec& layer, const Shape& input, std::size_t index);

// Checks the spec itself (rates, strides, kernel dims).
void validate_layer(const LayerSpec& layer, std::size_t index);

// Exponential linear unit with alpha = 1.
inline double elu(double x) { return x >= 0.0 ? x : std::expm1(x); }

}  // namespace idqn::nn
