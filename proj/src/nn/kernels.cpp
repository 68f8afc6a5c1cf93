#include "idqn/nn/kernels.hpp"

#include <algorithm>
#include <vector>

namespace idqn::nn::kernels {

namespace {

// Eight independent accumulators so the compiler can vectorize the reduction
// without reassociating across lanes at runtime.
template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
  T acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t j = 0; j < 8; ++j) acc[j] += a[i + j] * b[i + j];
  }
  T tail = 0;
  for (; i < n; ++i) tail += a[i] * b[i];
  return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) +
         tail;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

template <typename T>
void im2col(const ConvGeometry& g, const T* sample, T* col) {
  const std::size_t plane = g.out_plane();
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    const T* channel = sample + c * g.in_plane();
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
        T* row = col + ((c * g.kernel_h + ky) * g.kernel_w + kx) * plane;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const T* src = channel + (oy * g.stride + ky) * g.in_w + kx;
          T* dst = row + oy * g.out_w;
          if (g.stride == 1) {
            std::copy(src, src + g.out_w, dst);
          } else {
            for (std::size_t ox = 0; ox < g.out_w; ++ox) dst[ox] = src[ox * g.stride];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const ConvGeometry& g, const T* col, T* sample) {
  const std::size_t plane = g.out_plane();
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    T* channel = sample + c * g.in_plane();
    for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
      for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
        const T* row = col + ((c * g.kernel_h + ky) * g.kernel_w + kx) * plane;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          T* dst = channel + (oy * g.stride + ky) * g.in_w + kx;
          const T* src = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) dst[ox * g.stride] += src[ox];
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// serial reference

namespace serial {

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* weight, const T* bias,
                    T* output) {
  for (std::size_t b = 0; b < g.batch; ++b) {
    const T* in = input + b * g.in_channels * g.in_plane();
    for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
      const T* w = weight + oc * g.patch();
      T* out = output + (b * g.out_channels + oc) * g.out_plane();
      for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          T sum = bias[oc];
          for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                sum += in[(ic * g.in_h + oy * g.stride + ky) * g.in_w + ox * g.stride + kx] *
                       w[(ic * g.kernel_h + ky) * g.kernel_w + kx];
              }
            }
          }
          out[oy * g.out_w + ox] = sum;
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* input, const T* weight,
                     const T* d_output, T* d_weight, T* d_bias, T* d_input) {
  std::fill(d_weight, d_weight + g.out_channels * g.patch(), T{0});
  std::fill(d_bias, d_bias + g.out_channels, T{0});
  if (d_input) std::fill(d_input, d_input + g.batch * g.in_channels * g.in_plane(), T{0});

  for (std::size_t b = 0; b < g.batch; ++b) {
    const T* in = input + b * g.in_channels * g.in_plane();
    T* din = d_input ? d_input + b * g.in_channels * g.in_plane() : nullptr;
    for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
      const T* w = weight + oc * g.patch();
      T* dw = d_weight + oc * g.patch();
      const T* dout = d_output + (b * g.out_channels + oc) * g.out_plane();
      for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
          const T go = dout[oy * g.out_w + ox];
          d_bias[oc] += go;
          for (std::size_t ic = 0; ic < g.in_channels; ++ic) {
            for (std::size_t ky = 0; ky < g.kernel_h; ++ky) {
              for (std::size_t kx = 0; kx < g.kernel_w; ++kx) {
                const std::size_t wi = (ic * g.kernel_h + ky) * g.kernel_w + kx;
                const std::size_t ii =
                    (ic * g.in_h + oy * g.stride + ky) * g.in_w + ox * g.stride + kx;
                dw[wi] += go * in[ii];
                if (din) din[ii] += go * w[wi];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void dense_forward(const DenseGeometry& g, const T* input, const T* weight, const T* bias,
                   T* output) {
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t u = 0; u < g.units; ++u) {
      T sum = bias[u];
      for (std::size_t i = 0; i < g.in_dim; ++i) {
        sum += weight[u * g.in_dim + i] * input[b * g.in_dim + i];
      }
      output[b * g.units + u] = sum;
    }
  }
}

template <typename T>
void dense_backward(const DenseGeometry& g, const T* input, const T* weight,
                    const T* d_output, T* d_weight, T* d_bias, T* d_input) {
  std::fill(d_weight, d_weight + g.units * g.in_dim, T{0});
  std::fill(d_bias, d_bias + g.units, T{0});
  if (d_input) std::fill(d_input, d_input + g.batch * g.in_dim, T{0});
  for (std::size_t b = 0; b < g.batch; ++b) {
    for (std::size_t u = 0; u < g.units; ++u) {
      const T go = d_output[b * g.units + u];
      d_bias[u] += go;
      for (std::size_t i = 0; i < g.in_dim; ++i) {
        d_weight[u * g.in_dim + i] += go * input[b * g.in_dim + i];
        if (d_input) d_input[b * g.in_dim + i] += go * weight[u * g.in_dim + i];
      }
    }
  }
}

}  // namespace serial

// ---------------------------------------------------------------------------
// im2col + OpenMP

namespace parallel {

template <typename T>
void conv2d_forward(const ConvGeometry& g, const T* input, const T* weight, const T* bias,
                    T* output) {
  const std::size_t plane = g.out_plane();
  const std::size_t patch = g.patch();
  const long batch = static_cast<long>(g.batch);
#pragma omp parallel
  {
    std::vector<T> col(patch * plane);
#pragma omp for schedule(static)
    for (long b = 0; b < batch; ++b) {
      im2col(g, input + b * g.in_channels * g.in_plane(), col.data());
      T* out = output + b * g.out_channels * plane;
      std::size_t oc = 0;
      // Four output rows share each column load.
      for (; oc + 4 <= g.out_channels; oc += 4) {
        T* o0 = out + oc * plane;
        T* o1 = o0 + plane;
        T* o2 = o1 + plane;
        T* o3 = o2 + plane;
        std::fill(o0, o0 + plane, bias[oc]);
        std::fill(o1, o1 + plane, bias[oc + 1]);
        std::fill(o2, o2 + plane, bias[oc + 2]);
        std::fill(o3, o3 + plane, bias[oc + 3]);
        const T* w0 = weight + oc * patch;
        const T* w1 = w0 + patch;
        const T* w2 = w1 + patch;
        const T* w3 = w2 + patch;
        for (std::size_t k = 0; k < patch; ++k) {
          const T* c = col.data() + k * plane;
          const T a0 = w0[k], a1 = w1[k], a2 = w2[k], a3 = w3[k];
          for (std::size_t p = 0; p < plane; ++p) {
            const T v = c[p];
            o0[p] += a0 * v;
            o1[p] += a1 * v;
            o2[p] += a2 * v;
            o3[p] += a3 * v;
          }
        }
      }
      for (; oc < g.out_channels; ++oc) {
        T* o = out + oc * plane;
        std::fill(o, o + plane, bias[oc]);
        const T* w = weight + oc * patch;
        for (std::size_t k = 0; k < patch; ++k) axpy(w[k], col.data() + k * plane, o, plane);
      }
    }
  }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, const T* input, const T* weight,
                     const T* d_output, T* d_weight, T* d_bias, T* d_input) {
  const std::size_t plane = g.out_plane();
  const std::size_t patch = g.patch();
  const long batch = static_cast<long>(g.batch);
  const long out_channels = static_cast<long>(g.out_channels);
  thread_local std::vector<T> cols;
  cols.resize(g.batch * patch * plane);
  T* cols_ptr = cols.data();

#pragma omp parallel for schedule(static)
  for (long b = 0; b < batch; ++b) {
    im2col(g, input + b * g.in_channels * g.in_plane(), cols_ptr + b * patch * plane);
  }

#pragma omp parallel for schedule(static)
  for (long oc = 0; oc < out_channels; ++oc) {
    T bias_sum = 0;
    T* dw = d_weight + oc * patch;
    std::fill(dw, dw + patch, T{0});
    for (long b = 0; b < batch; ++b) {
      const T* dout = d_output + (b * g.out_channels + oc) * plane;
      T s = 0;
      for (std::size_t p = 0; p < plane; ++p) s += dout[p];
      bias_sum += s;
      const T* col = cols_ptr + b * patch * plane;
      for (std::size_t k = 0; k < patch; ++k) dw[k] += dot(dout, col + k * plane, plane);
    }
    d_bias[oc] = bias_sum;
  }

  if (!d_input) return;
#pragma omp parallel
  {
    std::vector<T> dcol(patch * plane);
#pragma omp for schedule(static)
    for (long b = 0; b < batch; ++b) {
      const T* dout = d_output + b * g.out_channels * plane;
      for (std::size_t k = 0; k < patch; ++k) {
        T* row = dcol.data() + k * plane;
        std::fill(row, row + plane, T{0});
        for (std::size_t oc = 0; oc < g.out_channels; ++oc) {
          axpy(weight[oc * patch + k], dout + oc * plane, row, plane);
        }
      }
      T* din = d_input + b * g.in_channels * g.in_plane();
      std::fill(din, din + g.in_channels * g.in_plane(), T{0});
      col2im(g, dcol.data(), din);
    }
  }
}

template <typename T>
void dense_forward(const DenseGeometry& g, const T* input, const T* weight, const T* bias,
                   T* output) {
  const long batch = static_cast<long>(g.batch);
#pragma omp parallel for schedule(static)
  for (long b = 0; b < batch; ++b) {
    const T* x = input + b * g.in_dim;
    for (std::size_t u = 0; u < g.units; ++u) {
      output[b * g.units + u] = bias[u] + dot(weight + u * g.in_dim, x, g.in_dim);
    }
  }
}

template <typename T>
void dense_backward(const DenseGeometry& g, const T* input, const T* weight,
                    const T* d_output, T* d_weight, T* d_bias, T* d_input) {
  const long units = static_cast<long>(g.units);
  const long batch = static_cast<long>(g.batch);
#pragma omp parallel for schedule(static)
  for (long u = 0; u < units; ++u) {
    T* dw = d_weight + u * g.in_dim;
    std::fill(dw, dw + g.in_dim, T{0});
    T bias_sum = 0;
    for (long b = 0; b < batch; ++b) {
      const T go = d_output[b * g.units + u];
      bias_sum += go;
      if (go != T{0}) axpy(go, input + b * g.in_dim, dw, g.in_dim);
    }
    d_bias[u] = bias_sum;
  }
  if (!d_input) return;
#pragma omp parallel for schedule(static)
  for (long b = 0; b < batch; ++b) {
    T* dx = d_input + b * g.in_dim;
    std::fill(dx, dx + g.in_dim, T{0});
    for (std::size_t u = 0; u < g.units; ++u) {
      const T go = d_output[b * g.units + u];
      if (go != T{0}) axpy(go, weight + u * g.in_dim, dx, g.in_dim);
    }
  }
}

}  // namespace parallel

#define IDQN_INSTANTIATE(T)                                                                  \
  template void im2col<T>(const ConvGeometry&, const T*, T*);                              \
  template void col2im<T>(const ConvGeometry&, const T*, T*);                              \
  template void serial::conv2d_forward<T>(const ConvGeometry&, const T*, const T*,         \
                                          const T*, T*);                                   \
  template void serial::conv2d_backward<T>(const ConvGeometry&, const T*, const T*,        \
                                           const T*, T*, T*, T*);                          \
  template void serial::dense_forward<T>(const DenseGeometry&, const T*, const T*,         \
                                         const T*, T*);                                    \
  template void serial::dense_backward<T>(const DenseGeometry&, const T*, const T*,        \
                                          const T*, T*, T*, T*);                           \
  template void parallel::conv2d_forward<T>(const ConvGeometry&, const T*, const T*,       \
                                            const T*, T*);                                 \
  template void parallel::conv2d_backward<T>(const ConvGeometry&, const T*, const T*,      \
                                             const T*, T*, T*, T*);                        \
  template void parallel::dense_forward<T>(const DenseGeometry&, const T*, const T*,       \
                                           const T*, T*);                                  \
  template void parallel::dense_backward<T>(const DenseGeometry&, const T*, const T*,      \
                                            const T*, T*, T*, T*);

IDQN_INSTANTIATE(float)
IDQN_INSTANTIATE(double)

#undef IDQN_INSTANTIATE

}  // namespace idqn::nn::kernels
