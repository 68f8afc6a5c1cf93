#pragma once

#include <filesystem>
#include <iosfwd>

#include "idqn/nn/network.hpp"

// Weight container: the 6-byte magic "IDQNW1" followed by one record per
// tensor until end of stream:
//   u32 name_length, name bytes, u32 rank, rank x u32 dims, product(dims) x f32
// All integers and floats little-endian.
namespace idqn::nn {

inline constexpr char kWeightsMagic[] = "IDQNW1";

void write_weights(std::ostream& out, const Weights<float>& tensors);
Weights<float> read_weights(std::istream& in);

void save_weights(const std::filesystem::path& path, const Weights<float>& tensors);
Weights<float> load_weights(const std::filesystem::path& path);

// Copies `tensors` into `net` in order; every shape must match.
void assign_weights(Network<float>& net, const Weights<float>& tensors);

}  // namespace idqn::nn
