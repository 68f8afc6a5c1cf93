// Serial reference vs im2col/OpenMP kernels on the layer sizes the agent and
// the pre-training network actually run.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "idqn/nn/kernels.hpp"

namespace k = idqn::nn::kernels;

namespace {

std::vector<float> noise(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-1, 1);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// First conv of the pre-training net (64x64x3 -> 30x30x24) and of the
// grayscale Q-network (84x84x4 -> 40x40x24).
k::ConvGeometry geometry(int which, std::size_t batch) {
  if (which == 0) return {batch, 3, 64, 64, 24, 5, 5, 2, 30, 30};
  return {batch, 4, 84, 84, 24, 5, 5, 2, 40, 40};
}

template <bool Parallel>
void BM_ConvForward(benchmark::State& state) {
  const auto g = geometry(static_cast<int>(state.range(0)), 32);
  auto in = noise(g.batch * g.in_channels * g.in_plane());
  auto w = noise(g.out_channels * g.patch());
  auto b = noise(g.out_channels);
  std::vector<float> out(g.batch * g.out_channels * g.out_plane());
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::conv2d_forward(g, in.data(), w.data(), b.data(), out.data());
    } else {
      k::serial::conv2d_forward(g, in.data(), w.data(), b.data(), out.data());
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * g.batch * g.out_channels * g.out_plane() *
                          g.patch());
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& state) {
  const auto g = geometry(static_cast<int>(state.range(0)), 32);
  auto in = noise(g.batch * g.in_channels * g.in_plane());
  auto w = noise(g.out_channels * g.patch());
  auto dy = noise(g.batch * g.out_channels * g.out_plane());
  std::vector<float> dw(w.size()), db(g.out_channels), dx(in.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::conv2d_backward(g, in.data(), w.data(), dy.data(), dw.data(), db.data(),
                                   dx.data());
    } else {
      k::serial::conv2d_backward(g, in.data(), w.data(), dy.data(), dw.data(), db.data(),
                                 dx.data());
    }
    benchmark::DoNotOptimize(dx.data());
  }
}

template <bool Parallel>
void BM_Dense(benchmark::State& state) {
  const k::DenseGeometry g{128, 1164, 100};
  auto x = noise(g.batch * g.in_dim);
  auto w = noise(g.units * g.in_dim);
  auto b = noise(g.units);
  std::vector<float> y(g.batch * g.units);
  for (auto _ : state) {
    if constexpr (Parallel) {
      k::parallel::dense_forward(g, x.data(), w.data(), b.data(), y.data());
    } else {
      k::serial::dense_forward(g, x.data(), w.data(), b.data(), y.data());
    }
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(BM_ConvForward<false>)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForward<true>)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<false>)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackward<true>)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Dense<false>)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Dense<true>)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
