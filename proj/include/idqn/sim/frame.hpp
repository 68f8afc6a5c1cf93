#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace idqn::sim {

// Interleaved (HWC) 8-bit raster.
struct Frame {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;

  Frame() = default;
  Frame(std::size_t width, std::size_t height, std::size_t channels, std::uint8_t fill = 0);

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t c = 0) {
    return pixels[(y * width + x) * channels + c];
  }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t c = 0) const {
    return pixels[(y * width + x) * channels + c];
  }
  bool empty() const { return pixels.empty(); }

  friend bool operator==(const Frame&, const Frame&) = default;
};

// ITU-R 601 luma, rounded.
Frame to_gray(const Frame& rgb);

// Rows [top, top + rows) of the frame.
Frame crop_rows(const Frame& frame, std::size_t top, std::size_t rows);

// Bilinear resample with pixel-center alignment.
Frame resize_bilinear(const Frame& frame, std::size_t width, std::size_t height);

// Binary PPM (P6) for 3 channels, PGM (P5) for 1 channel, maxval 255.
void write_pnm(const std::filesystem::path& path, const Frame& frame);
Frame read_pnm(const std::filesystem::path& path);

}  // namespace idqn::sim
