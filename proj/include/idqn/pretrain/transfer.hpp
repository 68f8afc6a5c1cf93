#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "idqn/errors.hpp"
#include "idqn/nn/network.hpp"

namespace idqn::pretrain {

class TransferError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct TransferReport {
  std::vector<std::string> copied;   // target layer names copied verbatim
  std::vector<std::string> adapted;  // first conv, RGB -> N-channel stack
  std::vector<std::string> fresh;    // left at the target's initialization
};

// Pairs parameterised layers by ordinal. Equal shapes are copied. A first
// conv reading 3 channels feeding one reading N channels gets
// W'[o][n] = (W[o][r] + W[o][g] + W[o][b]) / N for every n, bias copied, so a
// gray image replicated over the N-stack responds exactly as the same image
// replicated over RGB did. Anything else keeps its fresh weights and is
// reported. Throws TransferError when nothing transfers.
TransferReport transfer_weights(const nn::Network<float>& pretrained, nn::Network<float>& target);

}  // namespace idqn::pretrain
