#pragma once

#include "idqn/nn/tensor.hpp"

namespace idqn::nn {

template <typename T>
struct LossResult {
  double value = 0.0;
  BasicTensor<T> gradient;  // d loss / d pred
};

// Mean of squared element differences; gradient 2 (pred - target) / n.
template <typename T>
LossResult<T> mse_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target);

extern template LossResult<float> mse_loss(const Tensor&, const Tensor&);
extern template LossResult<double> mse_loss(const BasicTensor<double>&,
                                            const BasicTensor<double>&);

}  // namespace idqn::nn
