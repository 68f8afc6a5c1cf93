#include "idqn/pretrain/transfer.hpp"

namespace idqn::pretrain {

namespace {

std::string layer_name(const std::string& weight_name) {
  return weight_name.substr(0, weight_name.rfind('.'));
}

bool adapt_first_conv(const nn::Tensor& src, const nn::Tensor& src_bias, nn::Tensor& dst,
                      nn::Tensor& dst_bias) {
  if (src.rank() != 4 || dst.rank() != 4 || src.dim(1) != 3) return false;
  if (src.dim(0) != dst.dim(0) || src.dim(2) != dst.dim(2) || src.dim(3) != dst.dim(3)) {
    return false;
  }
  if (src_bias.shape() != dst_bias.shape()) return false;
  const std::size_t out = src.dim(0), n = dst.dim(1), k = src.dim(2) * src.dim(3);
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t j = 0; j < k; ++j) {
      double sum = 0.0;
      for (std::size_t c = 0; c < 3; ++c) sum += src[(o * 3 + c) * k + j];
      for (std::size_t i = 0; i < n; ++i) {
        dst[(o * n + i) * k + j] = static_cast<float>(sum / static_cast<double>(n));
      }
    }
  }
  dst_bias = src_bias;
  return true;
}

}  // namespace

TransferReport transfer_weights(const nn::Network<float>& pretrained, nn::Network<float>& target) {
  const auto& src = pretrained.weights();
  auto& dst = target.weights();
  TransferReport report;
  for (std::size_t p = 0; p + 1 < dst.size(); p += 2) {
    const std::string name = layer_name(dst[p].name);
    if (p + 1 >= src.size()) {
      report.fresh.push_back(name);
      continue;
    }
    if (src[p].value.shape() == dst[p].value.shape() &&
        src[p + 1].value.shape() == dst[p + 1].value.shape()) {
      dst[p].value = src[p].value;
      dst[p + 1].value = src[p + 1].value;
      report.copied.push_back(name);
    } else if (p == 0 &&
               adapt_first_conv(src[0].value, src[1].value, dst[0].value, dst[1].value)) {
      report.adapted.push_back(name);
    } else {
      report.fresh.push_back(name);
    }
  }
  if (report.copied.empty() && report.adapted.empty()) {
    throw TransferError("weight transfer: no layer of the pretrained network matches the target");
  }
  return report;
}

}  // namespace idqn::pretrain
