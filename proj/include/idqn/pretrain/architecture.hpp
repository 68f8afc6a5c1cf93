#pragma once

#include <cstddef>
#include <vector>

#include "idqn/nn/layer.hpp"
#include "idqn/nn/tensor.hpp"

namespace idqn::pretrain {

// Conv channel counts (24, 36, 48, 64, 64) and the first three fully
// connected widths (1164, 100, 50) are multiplied by `width` (rounded, at
// least 1); fc10 and fc3 are fixed.
struct ArchitectureOptions {
  double width = 1.0;
};

// normalize -> 5 x (conv, ELU, dropout 0.5) -> flatten
//   -> fc1164 ELU drop.5 -> fc100 ELU drop.4 -> fc50 ELU drop.25 -> fc10 ELU -> fc3
// Conv kernels 5x5 (stride 2) x3 then 3x3 (stride 1) x2.
std::vector<nn::LayerSpec> build_pretrain_network(const ArchitectureOptions& options = {});
// Per-sample input of the pre-training network: 3 x 64 x 64.
nn::Shape pretrain_input_shape();

// The Q-network of the same family: identical layer sizes without dropout,
// reading an N-frame 84x84 grayscale stack. The third conv uses stride 3 so
// the spatial chain 84 -> 40 -> 18 -> 5 -> 3 -> 1 ends at the same flatten
// size as the pre-training chain 64 -> 30 -> 13 -> 5 -> 3 -> 1.
std::vector<nn::LayerSpec> build_q_network(const ArchitectureOptions& options = {});
nn::Shape q_input_shape(std::size_t history_length);

std::size_t scaled(std::size_t units, double width);

}  // namespace idqn::pretrain
