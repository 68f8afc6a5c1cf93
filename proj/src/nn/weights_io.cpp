#include "idqn/nn/weights_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "idqn/errors.hpp"

namespace idqn::nn {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff),
                              static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

bool get_u32(std::istream& in, std::uint32_t& v) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(std::string("weights file truncated: ") + what);
}

}  // namespace

void write_weights(std::ostream& out, const Weights<float>& tensors) {
  out.write(kWeightsMagic, 6);
  for (const auto& t : tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(out, static_cast<std::uint32_t>(t.value.rank()));
    for (std::size_t d : t.value.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float f : t.value.data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  if (!out) throw ConfigError("failed writing weights");
}

Weights<float> read_weights(std::istream& in) {
  char magic[6];
  if (!in.read(magic, 6) || std::memcmp(magic, kWeightsMagic, 6) != 0) {
    throw ConfigError("not an IDQNW1 weights file");
  }
  Weights<float> tensors;
  std::uint32_t name_len = 0;
  while (get_u32(in, name_len)) {
    NamedTensor<float> t;
    t.name.resize(name_len);
    require(static_cast<bool>(in.read(t.name.data(), name_len)), "name");
    std::uint32_t rank = 0;
    require(get_u32(in, rank), "rank");
    Shape shape(rank);
    for (auto& d : shape) {
      std::uint32_t v = 0;
      require(get_u32(in, v), "dims");
      d = v;
    }
    std::vector<float> data(shape_size(shape));
    for (auto& f : data) {
      std::uint32_t v = 0;
      require(get_u32(in, v), "data");
      f = std::bit_cast<float>(v);
    }
    t.value = Tensor(std::move(shape), std::move(data));
    tensors.push_back(std::move(t));
  }
  return tensors;
}

void save_weights(const std::filesystem::path& path, const Weights<float>& tensors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  write_weights(out, tensors);
}

Weights<float> load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return read_weights(in);
}

void assign_weights(Network<float>& net, const Weights<float>& tensors) {
  auto& dst = net.weights();
  if (dst.size() != tensors.size()) {
    throw ConfigError("weights: expected " + std::to_string(dst.size()) + " tensors, got " +
                      std::to_string(tensors.size()));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i].value.shape() != tensors[i].value.shape()) {
      throw ConfigError("weights: tensor " + tensors[i].name + " has shape " +
                        shape_string(tensors[i].value.shape()) + ", network expects " +
                        shape_string(dst[i].value.shape()));
    }
  }
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i].value = tensors[i].value;
}

}  // namespace idqn::nn
