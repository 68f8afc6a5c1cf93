#include <cmath>
#include <sstream>

#include "doctest.h"
#include "idqn/errors.hpp"
#include "idqn/nn/gradient_check.hpp"
#include "idqn/nn/loss.hpp"
#include "idqn/nn/network.hpp"
#include "idqn/nn/optimizer.hpp"
#include "idqn/nn/weights_io.hpp"

using namespace idqn::nn;

namespace {

BasicTensor<double> random_input(const Shape& shape, std::uint64_t seed, double lo = -1.0,
                                 double hi = 1.0) {
  BasicTensor<double> t(shape);
  Rng rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

Network<double> initialized(std::vector<LayerSpec> layers, Shape input, std::uint64_t seed) {
  Network<double> net(std::move(layers), std::move(input));
  Rng rng(seed);
  net.initialize(rng);
  // Nonzero biases so every parameter carries gradient signal.
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto& w : net.weights()) {
    if (w.value.rank() == 1) {
      for (auto& b : w.value.data()) b = u(rng);
    }
  }
  return net;
}

}  // namespace

TEST_CASE("elu") {
  CHECK(elu(0.0) == 0.0);
  CHECK(elu(2.0) == 2.0);
  CHECK(elu(-1.0) == doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-12));
  CHECK(elu(-1.0) == doctest::Approx(-0.63212).epsilon(1e-5));
}

TEST_CASE("conv2d_shape") {
  CHECK(conv2d_shape(64, 64, 5, 5, 2) == SpatialShape{30, 30});
  CHECK(conv2d_shape(30, 30, 5, 5, 2) == SpatialShape{13, 13});
  CHECK(conv2d_shape(5, 5, 3, 3, 1) == SpatialShape{3, 3});
  CHECK_THROWS_AS(conv2d_shape(2, 8, 3, 3, 1), idqn::ConfigError);
}

TEST_CASE("layer spec validation") {
  CHECK_THROWS_AS(Network<float>({LayerSpec::dropout(1.0)}, {4}), idqn::ConfigError);
  CHECK_THROWS_AS(Network<float>({LayerSpec::conv2d(2, 3, 3, 0)}, {1, 5, 5}),
                  idqn::ConfigError);
  try {
    Network<float>({LayerSpec::conv2d(4, 3, 3, 1), LayerSpec::conv2d(4, 5, 5, 1)}, {1, 5, 5});
    FAIL("expected a configuration error");
  } catch (const idqn::ConfigError& e) {
    CHECK(std::string(e.what()).find("layer 1") != std::string::npos);
  }
}

TEST_CASE("forward: identity dense layer") {
  Network<float> net({LayerSpec::dense(3)}, {3});
  auto& w = net.weights()[0].value;
  for (std::size_t i = 0; i < 3; ++i) w[i * 3 + i] = 1.0f;
  Tensor x({1, 3}, {1, 2, 3});
  auto y = net.predict(x);
  CHECK(y.shape() == Shape{1, 3});
  CHECK(y[0] == 1.0f);
  CHECK(y[1] == 2.0f);
  CHECK(y[2] == 3.0f);
}

TEST_CASE("forward: zero input through conv+ELU with zero biases is zero") {
  Network<float> net({LayerSpec::conv2d(4, 3, 3, 1), LayerSpec::elu(),
                      LayerSpec::conv2d(2, 3, 3, 2), LayerSpec::elu()},
                     {2, 9, 9});
  Rng rng(1);
  net.initialize(rng);
  auto y = net.predict(Tensor({2, 2, 9, 9}));
  for (float v : y.data()) CHECK(v == 0.0f);
}

TEST_CASE("forward: input shape mismatch names the first layer") {
  Network<float> net({LayerSpec::conv2d(4, 3, 3, 1)}, {1, 5, 5});
  try {
    net.predict(Tensor({1, 1, 6, 5}));
    FAIL("expected a configuration error");
  } catch (const idqn::ConfigError& e) {
    CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
  }
}

TEST_CASE("forward: eval mode is bit-deterministic") {
  Network<float> net({LayerSpec::normalize(), LayerSpec::conv2d(3, 3, 3, 2), LayerSpec::elu(),
                      LayerSpec::dropout(0.5), LayerSpec::flatten(), LayerSpec::dense(4)},
                     {2, 11, 11});
  Rng rng(9);
  net.initialize(rng);
  Tensor x({3, 2, 11, 11});
  std::uniform_real_distribution<float> u(0, 255);
  for (auto& v : x.data()) v = u(rng);
  CHECK(net.predict(x) == net.predict(x));
}

TEST_CASE("mse_loss") {
  auto zero = mse_loss(Tensor({3}, {1, 0, 0}), Tensor({3}, {1, 0, 0}));
  CHECK(zero.value == 0.0);
  auto r = mse_loss(Tensor({2}, {1, 2}), Tensor({2}, {0, 0}));
  CHECK(r.value == 2.5);
  CHECK(r.gradient[0] == 1.0f);
  CHECK(r.gradient[1] == 2.0f);
  CHECK_THROWS_AS(mse_loss(Tensor({2}), Tensor({3})), idqn::ConfigError);
}

TEST_CASE("backward: single dense layer gradient is the outer product") {
  Network<float> net({LayerSpec::dense(2)}, {3});
  Rng rng(2);
  net.initialize(rng);
  Tensor x({1, 3}, {0.5f, -1.0f, 2.0f});
  auto pass = net.forward(x, true, &rng);
  Tensor target({1, 2}, {0.0f, 0.0f});
  auto loss = mse_loss(pass.output, target);
  auto g = net.backward(pass, loss.gradient);
  for (std::size_t u = 0; u < 2; ++u) {
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(g.params[0][u * 3 + i] == doctest::Approx(loss.gradient[u] * x[i]));
    }
    CHECK(g.params[1][u] == doctest::Approx(loss.gradient[u]));
  }
}

TEST_CASE("backward: missing cache is a usage error") {
  Network<float> net({LayerSpec::dense(2)}, {3});
  ForwardPass<float> empty;
  empty.output = Tensor({1, 2});
  CHECK_THROWS_AS(net.backward(empty, Tensor({1, 2})), idqn::UsageError);
}

TEST_CASE("backward: eval-mode dropout passes gradients unchanged") {
  Network<float> net({LayerSpec::dropout(0.4)}, {5});
  Tensor x({2, 5}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  auto pass = net.forward(x, false, nullptr);
  Tensor dy({2, 5}, {1, -1, 2, -2, 3, -3, 4, -4, 5, -5});
  auto g = net.backward(pass, dy, true);
  CHECK(g.input == dy);
}

TEST_CASE("gradient check: every layer kind within 1e-4") {
  SUBCASE("dense + elu toy net, 10 parameters") {
    auto net = initialized({LayerSpec::dense(3), LayerSpec::elu(), LayerSpec::dense(1)}, {1}, 4);
    CHECK(net.parameter_count() == 10);
    auto r = gradient_check(net, random_input({4, 1}, 1));
    CHECK(r.max_relative_error < 1e-4);
    CHECK(r.checked > 2 * r.skipped);
  }
  SUBCASE("dense + elu, wider") {
    auto net = initialized({LayerSpec::dense(5), LayerSpec::elu(), LayerSpec::dense(2)}, {3}, 4);
    auto r = gradient_check(net, random_input({4, 3}, 1));
    CHECK(r.max_relative_error < 1e-4);
    CHECK(r.checked > 2 * r.skipped);
  }
  SUBCASE("conv2d 3x3 on 8x8") {
    auto net = initialized({LayerSpec::conv2d(3, 3, 3, 1)}, {2, 8, 8}, 5);
    auto r = gradient_check(net, random_input({2, 2, 8, 8}, 2));
    CHECK(r.max_relative_error < 1e-4);
    CHECK(r.checked > 2 * r.skipped);
  }
  SUBCASE("strided conv2d") {
    auto net = initialized({LayerSpec::conv2d(2, 3, 2, 2), LayerSpec::elu()}, {2, 9, 8}, 6);
    auto r = gradient_check(net, random_input({2, 2, 9, 8}, 3));
    CHECK(r.max_relative_error < 1e-4);
    CHECK(r.checked > 2 * r.skipped);
  }
  SUBCASE("normalize + flatten + dense") {
    auto net = initialized({LayerSpec::normalize(), LayerSpec::flatten(), LayerSpec::dense(3)},
                           {2, 3, 3}, 7);
    auto r = gradient_check(net, random_input({2, 2, 3, 3}, 4, 0.0, 255.0));
    CHECK(r.max_relative_error < 1e-4);
    CHECK(r.checked > 2 * r.skipped);
  }
  SUBCASE("dropout (eval) + elu") {
    auto net = initialized({LayerSpec::dense(4), LayerSpec::elu(), LayerSpec::dropout(0.5),
                            LayerSpec::dense(2)},
                           {3}, 8);
    auto r = gradient_check(net, random_input({3, 3}, 5));
    CHECK(r.max_relative_error < 1e-4);
    CHECK(r.checked > 2 * r.skipped);
  }
}

TEST_CASE("dropout statistics in training mode") {
  const double rate = 0.3;
  Network<float> net({LayerSpec::dropout(rate)}, {10000});
  Tensor x({1, 10000}, 1.0f);
  Rng rng(17);
  auto pass = net.forward(x, true, &rng);
  std::size_t zeros = 0;
  for (float v : pass.output.data()) {
    if (v == 0.0f) {
      ++zeros;
    } else {
      CHECK(v == doctest::Approx(1.0 / (1.0 - rate)));
    }
  }
  const double frac = static_cast<double>(zeros) / 10000.0;
  CHECK(frac > rate - 0.02);
  CHECK(frac < rate + 0.02);
}

TEST_CASE("sgd momentum step") {
  Weights<float> params{{"w", Tensor({1}, {0.0f})}};
  auto state = OptimizerState::sgd_momentum(0.001, 0.95);
  std::vector<Tensor> grads{Tensor({1}, {1.0f})};
  sgd_momentum_step(state, params, grads);
  CHECK(params[0].value[0] == doctest::Approx(-0.001));
  CHECK(state.slots[0][0] == doctest::Approx(-0.001));
  sgd_momentum_step(state, params, grads);
  CHECK(state.slots[0][0] == doctest::Approx(-0.00195));

  Weights<float> fixed{{"w", Tensor({1}, {0.0f})}};
  auto s2 = OptimizerState::sgd_momentum(0.001, 0.95);
  sgd_momentum_step(s2, fixed, {Tensor({1}, {0.0f})});
  CHECK(fixed[0].value[0] == 0.0f);

  CHECK_THROWS_AS(sgd_momentum_step(s2, fixed, {Tensor({2})}), idqn::ConfigError);
}

TEST_CASE("adam step") {
  for (float g : {0.3f, -7.0f}) {
    Weights<float> params{{"w", Tensor({1}, {1.0f})}};
    auto state = OptimizerState::adam(0.0001);
    adam_step(state, params, {Tensor({1}, {g})});
    const double first = params[0].value[0] - 1.0;
    CHECK(first == doctest::Approx(g > 0 ? -0.0001 : 0.0001).epsilon(1e-3));
    const float before = params[0].value[0];
    adam_step(state, params, {Tensor({1}, {g})});
    const double second = params[0].value[0] - before;
    CHECK(std::abs(second) <= std::abs(first) * (1 + 1e-6));
  }
  Weights<float> params{{"w", Tensor({2}, {0.5f, -0.5f})}};
  auto state = OptimizerState::adam(0.0001);
  for (int i = 0; i < 5; ++i) adam_step(state, params, {Tensor({2})});
  CHECK(params[0].value[0] == 0.5f);
  CHECK(params[0].value[1] == -0.5f);
}

TEST_CASE("optimizer steps keep parameters finite") {
  Rng rng(23);
  std::normal_distribution<float> big(0.0f, 1e3f);
  for (auto kind : {OptimizerKind::sgd_momentum, OptimizerKind::adam}) {
    Weights<float> params{{"w", Tensor({64})}};
    auto state = kind == OptimizerKind::adam ? OptimizerState::adam(1e-4, 0.9, 0.999, 1e-8, 1e-5)
                                             : OptimizerState::sgd_momentum(1e-3, 0.95, 1e-5);
    for (int step = 0; step < 200; ++step) {
      Tensor g({64});
      for (auto& v : g.data()) v = big(rng);
      optimizer_step(state, params, {g});
    }
    CHECK(params[0].value.all_finite());
    CHECK(state.step_count == 200);
  }
}

TEST_CASE("weights container layout and round trip") {
  Weights<float> w{{"a", Tensor({2}, {1.5f, -2.0f})}, {"bb", Tensor({1, 1, 1}, {3.0f})}};
  std::stringstream ss;
  write_weights(ss, w);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 6) == "IDQNW1");
  // name length 1, 'a', rank 1, dim 2, two floats
  CHECK(bytes.size() == 6 + (4 + 1 + 4 + 4 + 8) + (4 + 2 + 4 + 12 + 4));
  CHECK(static_cast<unsigned char>(bytes[6]) == 1);
  CHECK(bytes[10] == 'a');
  CHECK(read_weights(ss) == w);

  std::stringstream bad("NOTAWEIGHTFILE");
  CHECK_THROWS_AS(read_weights(bad), idqn::ConfigError);
}

TEST_CASE("gradient check skips probes that straddle an ELU kink") {
  using namespace idqn::nn;
  // One dense unit feeding ELU with pre-activation exactly at zero.
  Network<double> net({LayerSpec::dense(1), LayerSpec::elu()}, {1});
  net.weights()[0].value.fill(1.0);
  net.weights()[1].value.fill(0.0);
  BasicTensor<double> x({1, 1});
  x[0] = 0.0;
  auto r = gradient_check(net, x);
  CHECK(r.skipped > 0);
  CHECK(r.max_relative_error < 1e-4);
}
