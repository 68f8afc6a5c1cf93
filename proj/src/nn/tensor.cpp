#include "idqn/nn/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "idqn/errors.hpp"

namespace idqn::nn {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw ConfigError("tensor shape " + shape_string(shape_) + " does not match " +
                      std::to_string(data_.size()) + " values");
  }
}

template <typename T>
void BasicTensor<T>::reshape(Shape shape) {
  if (shape_size(shape) != data_.size()) {
    throw ConfigError("cannot reshape " + shape_string(shape_) + " to " +
                      shape_string(shape));
  }
  shape_ = std::move(shape);
}

template <typename T>
void BasicTensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
bool BasicTensor<T>::all_finite() const {
  for (T v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template class BasicTensor<float>;
template class BasicTensor<double>;

}  // namespace idqn::nn
