#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <vector>

#include "idqn/nn/network.hpp"
#include "idqn/pretrain/architecture.hpp"
#include "idqn/pretrain/augment.hpp"
#include "idqn/pretrain/demo_dataset.hpp"

namespace idqn::pretrain {

struct PretrainConfig {
  std::size_t batch_size = 128;
  double learning_rate = 1e-4;  // Adam
  double weight_decay = 1e-5;
  std::size_t epochs = 200;
  bool augment = true;
  AugmentConfig augmentation;
  ArchitectureOptions architecture;
  // Stop once an epoch's training loss is at or below this value.
  std::optional<double> stop_at_train_loss;

  void validate() const;
};

struct EpochLoss {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;  // NaN when the validation split is empty
};

struct PretrainResult {
  nn::Network<float> network;
  std::vector<EpochLoss> history;
};

// 3 x 64 x 64 planar floats of a preprocessed frame.
void planar_rgb(const sim::Frame& frame, float* out);

// Eval-mode MSE over `indices` (preprocessing only, no augmentation).
double evaluate(const nn::Network<float>& network, const DemoDataset& dataset,
                const std::vector<std::size_t>& indices, const AugmentConfig& cfg,
                std::size_t batch_size = 128);

PretrainResult train_supervised(const DemoDataset& dataset, const PretrainConfig& cfg,
                                nn::Rng& rng);

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochLoss>& history);

}  // namespace idqn::pretrain
