#pragma once

#include <cstddef>

// Compute kernels for the parameterized layers. Two implementations share each
// signature: `serial` is the direct-loop reference kept for testing, `parallel`
// is the im2col + OpenMP path the network uses. Every output element of the
// parallel path is produced by exactly one thread with a fixed summation
// order, so results do not depend on the thread count.
//
// Layouts: activations NCHW, conv weights [out, in, kh, kw], dense weights
// [units, in].
namespace idqn::nn::kernels {

struct ConvGeometry {
  std::size_t batch;
  std::size_t in_channels;
  std::size_t in_h;
  std::size_t in_w;
  std::size_t out_channels;
  std::size_t kernel_h;
  std::size_t kernel_w;
  std::size_t stride;
  std::size_t out_h;
  std::size_t out_w;

  std::size_t patch() const { return in_channels * kernel_h * kernel_w; }
  std::size_t out_plane() const { return out_h * out_w; }
  std::size_t in_plane() const { return in_h * in_w; }
};

struct DenseGeometry {
  std::size_t batch;
  std::size_t in_dim;
  std::size_t units;
};

namespace serial {

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* weight, const T* bias,
                    T* output);

// d_input may be null when the input gradient is not needed.
template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* input, const T* weight,
                     const T* d_output, T* d_weight, T* d_bias, T* d_input);

template <typename T>
void dense_forward(const DenseGeometry& g, const T* input, const T* weight, const T* bias,
                   T* output);

template <typename T>
void dense_backward(const DenseGeometry& g, const T* input, const T* weight,
                    const T* d_output, T* d_weight, T* d_bias, T* d_input);

}  // namespace serial

namespace parallel {

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* weight, const T* bias,
                    T* output);

template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* input, const T* weight,
                     const T* d_output, T* d_weight, T* d_bias, T* d_input);

template <typename T>
void dense_forward(const DenseGeometry& g, const T* input, const T* weight, const T* bias,
                   T* output);

template <typename T>
void dense_backward(const DenseGeometry& g, const T* input, const T* weight,
                    const T* d_output, T* d_weight, T* d_bias, T* d_input);

}  // namespace parallel

// Unrolls the receptive fields of one sample into a [patch, out_plane] matrix.
template <typename T>
void im2col(const ConvGeometry& g, const T* sample, T* col);

// Scatter-adds a [patch, out_plane] matrix back onto one zeroed sample.
template <typename T>
void col2im(const ConvGeometry& g, const T* col, T* sample);

}  // namespace idqn::nn::kernels
