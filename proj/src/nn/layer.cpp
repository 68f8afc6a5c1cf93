#include "idqn/nn/layer.hpp"

#include <cmath>
#include <sstream>

#include "idqn/errors.hpp"

namespace idqn::nn {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::normalize: return "normalize";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::dense: return "dense";
    case LayerKind::elu: return "elu";
    case LayerKind::dropout: return "dropout";
    case LayerKind::flatten: return "flatten";
  }
  return "unknown";
}

LayerSpec LayerSpec::normalize() { return {.kind = LayerKind::normalize}; }

LayerSpec LayerSpec::conv2d(std::size_t out_channels, std::size_t kernel_h,
                            std::size_t kernel_w, std::size_t stride) {
  return {.kind = LayerKind::conv2d,
          .out_channels = out_channels,
          .kernel_h = kernel_h,
          .kernel_w = kernel_w,
          .stride = stride};
}

LayerSpec LayerSpec::dense(std::size_t units) {
  return {.kind = LayerKind::dense, .units = units};
}

LayerSpec LayerSpec::elu() { return {.kind = LayerKind::elu}; }

LayerSpec LayerSpec::dropout(double rate) {
  return {.kind = LayerKind::dropout, .rate = rate};
}

LayerSpec LayerSpec::flatten() { return {.kind = LayerKind::flatten}; }

std::string LayerSpec::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  switch (kind) {
    case LayerKind::conv2d:
      os << ' ' << out_channels << 'x' << kernel_h << 'x' << kernel_w << "/s" << stride;
      break;
    case LayerKind::dense: os << ' ' << units; break;
    case LayerKind::dropout: os << ' ' << rate; break;
    default: break;
  }
  return os.str();
}

namespace {

std::string layer_name(const LayerSpec& layer, std::size_t index) {
  return "layer " + std::to_string(index) + " (" + layer.describe() + ")";
}

}  // namespace

SpatialShape conv2d_shape(std::size_t in_h, std::size_t in_w, std::size_t kernel_h,
                          std::size_t kernel_w, std::size_t stride) {
  if (stride == 0 || kernel_h == 0 || kernel_w == 0) {
    throw ConfigError("conv2d kernel dims and stride must be >= 1");
  }
  if (in_h < kernel_h || in_w < kernel_w) {
    throw ConfigError("conv2d kernel " + std::to_string(kernel_h) + "x" +
                      std::to_string(kernel_w) + " larger than input " +
                      std::to_string(in_h) + "x" + std::to_string(in_w));
  }
  return {(in_h - kernel_h) / stride + 1, (in_w - kernel_w) / stride + 1};
}

void validate_layer(const LayerSpec& layer, std::size_t index) {
  switch (layer.kind) {
    case LayerKind::conv2d:
      if (layer.out_channels == 0 || layer.kernel_h == 0 || layer.kernel_w == 0 ||
          layer.stride == 0) {
        throw ConfigError(layer_name(layer, index) + ": kernel dims and stride must be >= 1");
      }
      break;
    case LayerKind::dense:
      if (layer.units == 0) throw ConfigError(layer_name(layer, index) + ": units must be >= 1");
      break;
    case LayerKind::dropout:
      if (!(layer.rate >= 0.0 && layer.rate < 1.0)) {
        throw ConfigError(layer_name(layer, index) + ": rate must be in [0, 1)");
      }
      break;
    default: break;
  }
}

Shape layer_output_shape(const LayerSpec& layer, const Shape& input, std::size_t index) {
  validate_layer(layer, index);
  switch (layer.kind) {
    case LayerKind::normalize:
    case LayerKind::elu:
    case LayerKind::dropout:
      return input;
    case LayerKind::flatten:
      return {shape_size(input)};
    case LayerKind::dense:
      if (input.size() != 1) {
        throw ConfigError(layer_name(layer, index) + ": expects a flat input, got " +
                          shape_string(input));
      }
      return {layer.units};
    case LayerKind::conv2d: {
      if (input.size() != 3) {
        throw ConfigError(layer_name(layer, index) + ": expects [channels,h,w], got " +
                          shape_string(input));
      }
      try {
        auto out = conv2d_shape(input[1], input[2], layer.kernel_h, layer.kernel_w,
                                layer.stride);
        return {layer.out_channels, out.height, out.width};
      } catch (const ConfigError& e) {
        throw ConfigError(layer_name(layer, index) + ": " + e.what());
      }
    }
  }
  throw ConfigError(layer_name(layer, index) + ": unknown layer kind");
}

}  // namespace idqn::nn
