#include "idqn/pretrain/supervised.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "idqn/errors.hpp"
#include "idqn/nn/loss.hpp"
#include "idqn/nn/optimizer.hpp"

namespace idqn::pretrain {

namespace {

constexpr std::size_t kPlane = 64 * 64;

void fill_target(const DemoLabel& label, float* out) {
  out[0] = static_cast<float>(label.throttle);
  out[1] = static_cast<float>(label.steering);
  out[2] = static_cast<float>(label.brake);
}

}  // namespace

void PretrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("pretrain batch size must be > 0");
  if (!(learning_rate > 0.0)) throw ConfigError("pretrain learning rate must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("pretrain weight decay must be >= 0");
  if (epochs == 0) throw ConfigError("pretrain epochs must be > 0");
  augmentation.validate();
}

void planar_rgb(const sim::Frame& frame, float* out) {
  if (frame.width != 64 || frame.height != 64 || frame.channels != 3) {
    throw UsageError("planar_rgb expects a 64x64x3 frame");
  }
  for (std::size_t i = 0; i < kPlane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) out[c * kPlane + i] = frame.pixels[3 * i + c];
  }
}

double evaluate(const nn::Network<float>& network, const DemoDataset& dataset,
                const std::vector<std::size_t>& indices, const AugmentConfig& cfg,
                std::size_t batch_size) {
  if (indices.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (std::size_t begin = 0; begin < indices.size(); begin += batch_size) {
    const std::size_t n = std::min(batch_size, indices.size() - begin);
    nn::Tensor x({n, 3, 64, 64});
    nn::Tensor y({n, 3});
    for (std::size_t b = 0; b < n; ++b) {
      const auto& s = dataset.samples.at(indices[begin + b]);
      planar_rgb(preprocess(s.frame, cfg), x.raw() + b * 3 * kPlane);
      fill_target(s.label, y.raw() + b * 3);
    }
    total += nn::mse_loss(network.predict(x), y).value * static_cast<double>(n);
  }
  return total / static_cast<double>(indices.size());
}

PretrainResult train_supervised(const DemoDataset& dataset, const PretrainConfig& cfg,
                                nn::Rng& rng) {
  cfg.validate();
  if (dataset.samples.empty()) throw ConfigError("pretrain dataset is empty");
  if (dataset.train.size() < cfg.batch_size) {
    throw ConfigError("pretrain training split has " + std::to_string(dataset.train.size()) +
                      " samples, fewer than one batch of " + std::to_string(cfg.batch_size));
  }
  PretrainResult result;
  result.network = nn::Network<float>(build_pretrain_network(cfg.architecture), pretrain_input_shape());
  result.network.initialize(rng);
  auto opt = nn::OptimizerState::adam(cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay);

  std::vector<std::size_t> order = dataset.train;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - begin);
      nn::Tensor x({n, 3, 64, 64});
      nn::Tensor y({n, 3});
      for (std::size_t b = 0; b < n; ++b) {
        const auto& s = dataset.samples[order[begin + b]];
        const DemoSample a = cfg.augment ? augment(s, cfg.augmentation, rng)
                                         : apply_augment(s, cfg.augmentation, {});
        planar_rgb(a.frame, x.raw() + b * 3 * kPlane);
        fill_target(a.label, y.raw() + b * 3);
      }
      const auto pass = result.network.forward(x, true, &rng);
      const auto loss = nn::mse_loss(pass.output, y);
      const auto grads = result.network.backward(pass, loss.gradient);
      nn::optimizer_step(opt, result.network.weights(), grads.params);
      total += loss.value * static_cast<double>(n);
    }
    EpochLoss e;
    e.epoch = epoch;
    e.train_loss = total / static_cast<double>(order.size());
    e.val_loss = evaluate(result.network, dataset, dataset.validation, cfg.augmentation,
                          cfg.batch_size);
    result.history.push_back(e);
    if (cfg.stop_at_train_loss && e.train_loss <= *cfg.stop_at_train_loss) break;
  }
  return result;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochLoss>& history) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.precision(10);
  out << "epoch,train_loss,val_loss\n";
  for (const auto& e : history) out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << '\n';
  if (!out) throw ConfigError("write failed: " + path.string());
}

}  // namespace idqn::pretrain
