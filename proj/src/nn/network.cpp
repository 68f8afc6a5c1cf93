#include "idqn/nn/network.hpp"

#include <cmath>

#include "idqn/errors.hpp"
#include "idqn/nn/kernels.hpp"

namespace idqn::nn {

namespace {

constexpr double kPixelScale = 127.5;

kernels::ConvGeometry conv_geometry(const LayerSpec& layer, std::size_t batch,
                                    const Shape& in, const Shape& out) {
  return {.batch = batch,
          .in_channels = in[0],
          .in_h = in[1],
          .in_w = in[2],
          .out_channels = layer.out_channels,
          .kernel_h = layer.kernel_h,
          .kernel_w = layer.kernel_w,
          .stride = layer.stride,
          .out_h = out[1],
          .out_w = out[2]};
}

Shape with_batch(std::size_t batch, const Shape& sample) {
  Shape s;
  s.reserve(sample.size() + 1);
  s.push_back(batch);
  s.insert(s.end(), sample.begin(), sample.end());
  return s;
}

}  // namespace

template <typename T>
Network<T>::Network(std::vector<LayerSpec> layers, Shape input_shape)
    : layers_(std::move(layers)), input_shape_(std::move(input_shape)) {
  if (layers_.empty()) throw ConfigError("network has no layers");
  Shape current = input_shape_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& layer = layers_[i];
    Shape next = layer_output_shape(layer, current, i);
    for (std::size_t d : next) {
      if (d == 0) throw ConfigError("layer " + std::to_string(i) + " produces an empty shape");
    }
    if (layer.has_params()) {
      param_of_layer_.push_back(weights_.size());
      const std::string prefix = "layer" + std::to_string(i) + "." + to_string(layer.kind);
      if (layer.kind == LayerKind::conv2d) {
        weights_.push_back({prefix + ".weight",
                            BasicTensor<T>({layer.out_channels, current[0], layer.kernel_h,
                                            layer.kernel_w})});
        weights_.push_back({prefix + ".bias", BasicTensor<T>({layer.out_channels})});
      } else {
        weights_.push_back({prefix + ".weight", BasicTensor<T>({layer.units, current[0]})});
        weights_.push_back({prefix + ".bias", BasicTensor<T>({layer.units})});
      }
    } else {
      param_of_layer_.push_back(std::nullopt);
    }
    shapes_.push_back(next);
    current = std::move(next);
  }
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& w : weights_) n += w.value.size();
  return n;
}

template <typename T>
std::optional<std::size_t> Network<T>::param_index(std::size_t layer) const {
  return param_of_layer_.at(layer);
}

template <typename T>
void Network<T>::initialize(Rng& rng) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (!param_of_layer_[i]) continue;
    auto& weight = weights_[*param_of_layer_[i]].value;
    auto& bias = weights_[*param_of_layer_[i] + 1].value;
    const Shape& s = weight.shape();
    const double receptive = s.size() == 4 ? static_cast<double>(s[2] * s[3]) : 1.0;
    const double fan_in = static_cast<double>(s[1]) * receptive;
    const double fan_out = static_cast<double>(s[0]) * receptive;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& w : weight.data()) w = static_cast<T>(dist(rng));
    bias.fill(T{0});
  }
}

template <typename T>
void Network<T>::check_batch(const BasicTensor<T>& batch) const {
  const Shape& s = batch.shape();
  bool ok = s.size() == input_shape_.size() + 1 && s[0] > 0;
  for (std::size_t i = 0; ok && i < input_shape_.size(); ++i) ok = s[i + 1] == input_shape_[i];
  if (!ok) {
    throw ConfigError("layer 0 (" + layers_.front().describe() + "): expected input [batch]" +
                      shape_string(input_shape_) + ", got " + shape_string(s));
  }
}

template <typename T>
BasicTensor<T> Network<T>::predict(const BasicTensor<T>& batch) const {
  return run(batch, false, nullptr, false).output;
}

template <typename T>
ForwardPass<T> Network<T>::forward(const BasicTensor<T>& batch, bool training,
                                   Rng* rng) const {
  return run(batch, training, rng, true);
}

template <typename T>
ForwardPass<T> Network<T>::run(const BasicTensor<T>& batch, bool training, Rng* rng,
                               bool keep_cache) const {
  check_batch(batch);
  const std::size_t n = batch.dim(0);
  ForwardPass<T> pass;
  if (keep_cache) {
    pass.inputs.reserve(layers_.size());
    pass.masks.resize(layers_.size());
  }
  BasicTensor<T> x = batch;
  Shape in_shape = input_shape_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& layer = layers_[i];
    const Shape& out_shape = shapes_[i];
    BasicTensor<T> y;
    switch (layer.kind) {
      case LayerKind::normalize: {
        y = BasicTensor<T>(x.shape());
        const T scale = static_cast<T>(1.0 / kPixelScale);
        for (std::size_t j = 0; j < x.size(); ++j) y[j] = x[j] * scale - T{1};
        break;
      }
      case LayerKind::conv2d: {
        const auto g = conv_geometry(layer, n, in_shape, out_shape);
        y = BasicTensor<T>(with_batch(n, out_shape));
        const std::size_t p = *param_of_layer_[i];
        kernels::parallel::conv2d_forward(g, x.raw(), weights_[p].value.raw(),
                                          weights_[p + 1].value.raw(), y.raw());
        break;
      }
      case LayerKind::dense: {
        const kernels::DenseGeometry g{n, in_shape[0], layer.units};
        y = BasicTensor<T>(with_batch(n, out_shape));
        const std::size_t p = *param_of_layer_[i];
        kernels::parallel::dense_forward(g, x.raw(), weights_[p].value.raw(),
                                         weights_[p + 1].value.raw(), y.raw());
        break;
      }
      case LayerKind::elu: {
        y = BasicTensor<T>(x.shape());
        for (std::size_t j = 0; j < x.size(); ++j) {
          y[j] = x[j] >= T{0} ? x[j] : std::expm1(x[j]);
        }
        break;
      }
      case LayerKind::dropout: {
        if (training && layer.rate > 0.0) {
          if (!rng) throw UsageError("training forward with dropout requires an rng");
          BasicTensor<T> mask(x.shape());
          const T keep_scale = static_cast<T>(1.0 / (1.0 - layer.rate));
          std::uniform_real_distribution<double> u(0.0, 1.0);
          for (auto& m : mask.data()) m = u(*rng) >= layer.rate ? keep_scale : T{0};
          y = BasicTensor<T>(x.shape());
          for (std::size_t j = 0; j < x.size(); ++j) y[j] = x[j] * mask[j];
          if (keep_cache) pass.masks[i] = std::move(mask);
        } else {
          y = x;
        }
        break;
      }
      case LayerKind::flatten: {
        y = x;
        y.reshape(with_batch(n, out_shape));
        break;
      }
    }
    if (keep_cache) pass.inputs.push_back(std::move(x));
    x = std::move(y);
    in_shape = out_shape;
  }
  pass.output = std::move(x);
  return pass;
}

template <typename T>
Gradients<T> Network<T>::backward(const ForwardPass<T>& pass,
                                  const BasicTensor<T>& grad_output,
                                  bool input_gradient) const {
  if (!pass.has_cache() || pass.inputs.size() != layers_.size()) {
    throw UsageError("backward requires a forward pass with retained caches");
  }
  if (grad_output.shape() != pass.output.shape()) {
    throw ConfigError("output gradient shape " + shape_string(grad_output.shape()) +
                      " does not match output " + shape_string(pass.output.shape()));
  }
  Gradients<T> grads;
  grads.params.reserve(weights_.size());
  for (const auto& w : weights_) grads.params.emplace_back(w.value.shape());

  std::size_t first_param_layer = layers_.size();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (param_of_layer_[i]) {
      first_param_layer = i;
      break;
    }
  }

  const std::size_t n = grad_output.dim(0);
  BasicTensor<T> dy = grad_output;
  for (std::size_t idx = layers_.size(); idx-- > 0;) {
    const LayerSpec& layer = layers_[idx];
    const BasicTensor<T>& x = pass.inputs[idx];
    const bool need_dx = input_gradient || idx > first_param_layer;
    if (!need_dx && !layer.has_params()) break;
    BasicTensor<T> dx;
    switch (layer.kind) {
      case LayerKind::normalize: {
        dx = BasicTensor<T>(x.shape());
        const T scale = static_cast<T>(1.0 / kPixelScale);
        for (std::size_t j = 0; j < dy.size(); ++j) dx[j] = dy[j] * scale;
        break;
      }
      case LayerKind::conv2d: {
        const Shape in_shape(x.shape().begin() + 1, x.shape().end());
        const auto g = conv_geometry(layer, n, in_shape, shapes_[idx]);
        const std::size_t p = *param_of_layer_[idx];
        if (need_dx) dx = BasicTensor<T>(x.shape());
        kernels::parallel::conv2d_backward(g, x.raw(), weights_[p].value.raw(), dy.raw(),
                                           grads.params[p].raw(), grads.params[p + 1].raw(),
                                           need_dx ? dx.raw() : nullptr);
        break;
      }
      case LayerKind::dense: {
        const kernels::DenseGeometry g{n, x.dim(1), layer.units};
        const std::size_t p = *param_of_layer_[idx];
        if (need_dx) dx = BasicTensor<T>(x.shape());
        kernels::parallel::dense_backward(g, x.raw(), weights_[p].value.raw(), dy.raw(),
                                          grads.params[p].raw(), grads.params[p + 1].raw(),
                                          need_dx ? dx.raw() : nullptr);
        break;
      }
      case LayerKind::elu: {
        dx = BasicTensor<T>(x.shape());
        for (std::size_t j = 0; j < dy.size(); ++j) {
          dx[j] = x[j] >= T{0} ? dy[j] : dy[j] * std::exp(x[j]);
        }
        break;
      }
      case LayerKind::dropout: {
        const auto& mask = pass.masks[idx];
        if (mask.empty()) {
          dx = dy;
        } else {
          dx = BasicTensor<T>(x.shape());
          for (std::size_t j = 0; j < dy.size(); ++j) dx[j] = dy[j] * mask[j];
        }
        break;
      }
      case LayerKind::flatten: {
        dx = dy;
        dx.reshape(x.shape());
        break;
      }
    }
    if (!need_dx) break;
    dy = std::move(dx);
  }
  if (input_gradient) grads.input = std::move(dy);
  return grads;
}

template class Network<float>;
template class Network<double>;

}  // namespace idqn::nn
