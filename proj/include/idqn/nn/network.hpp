#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "idqn/nn/layer.hpp"
#include "idqn/nn/tensor.hpp"

namespace idqn::nn {

using Rng = std::mt19937_64;

template <typename T>
struct NamedTensor {
  std::string name;
  BasicTensor<T> value;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// Parameter tensors in layer order: (weight, bias) for every conv2d/dense.
template <typename T>
using Weights = std::vector<NamedTensor<T>>;

// Result of a forward pass. The per-layer inputs and dropout masks are what
// backward() consumes; predict() leaves them empty.
template <typename T>
struct ForwardPass {
  BasicTensor<T> output;
  std::vector<BasicTensor<T>> inputs;
  std::vector<BasicTensor<T>> masks;

  bool has_cache() const { return !inputs.empty(); }
};

template <typename T>
struct Gradients {
  std::vector<BasicTensor<T>> params;  // aligned with Network::weights()
  BasicTensor<T> input;                // empty unless requested
};

// Sequential network over a batch dimension. Shapes exclude the batch axis.
template <typename T>
class Network {
 public:
  Network() = default;
  Network(std::vector<LayerSpec> layers, Shape input_shape);

  const std::vector<LayerSpec>& layers() const { return layers_; }
  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return shapes_.back(); }
  // Output shape of every layer, in order.
  const std::vector<Shape>& activation_shapes() const { return shapes_; }

  Weights<T>& weights() { return weights_; }
  const Weights<T>& weights() const { return weights_; }
  std::size_t parameter_count() const;
  // Index into weights() of the weight tensor owned by `layer`, if any.
  std::optional<std::size_t> param_index(std::size_t layer) const;

  // Glorot-uniform weights, zero biases.
  void initialize(Rng& rng);

  BasicTensor<T> predict(const BasicTensor<T>& batch) const;
  ForwardPass<T> forward(const BasicTensor<T>& batch, bool training, Rng* rng) const;
  Gradients<T> backward(const ForwardPass<T>& pass, const BasicTensor<T>& grad_output,
                        bool input_gradient = false) const;

  template <typename U>
  Network<U> cast() const {
    Network<U> out(layers_, input_shape_);
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      out.weights()[i].value = weights_[i].value.template cast<U>();
    }
    return out;
  }

 private:
  ForwardPass<T> run(const BasicTensor<T>& batch, bool training, Rng* rng,
                     bool keep_cache) const;
  void check_batch(const BasicTensor<T>& batch) const;

  std::vector<LayerSpec> layers_;
  Shape input_shape_;
  std::vector<Shape> shapes_;
  std::vector<std::optional<std::size_t>> param_of_layer_;
  Weights<T> weights_;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace idqn::nn
