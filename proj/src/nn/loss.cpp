#include "idqn/nn/loss.hpp"

#include "idqn/errors.hpp"

namespace idqn::nn {

template <typename T>
LossResult<T> mse_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
  if (pred.shape() != target.shape()) {
    throw ConfigError("mse_loss: prediction " + shape_string(pred.shape()) +
                      " vs target " + shape_string(target.shape()));
  }
  LossResult<T> result;
  result.gradient = BasicTensor<T>(pred.shape());
  const double n = static_cast<double>(pred.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    sum += d * d;
    result.gradient[i] = static_cast<T>(2.0 * d / n);
  }
  result.value = n > 0 ? sum / n : 0.0;
  return result;
}

template LossResult<float> mse_loss(const Tensor&, const Tensor&);
template LossResult<double> mse_loss(const BasicTensor<double>&, const BasicTensor<double>&);

}  // namespace idqn::nn
