#include "idqn/sim/frame.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <string>

#include "idqn/errors.hpp"

namespace idqn::sim {

Frame::Frame(std::size_t w, std::size_t h, std::size_t c, std::uint8_t fill)
    : width(w), height(h), channels(c), pixels(w * h * c, fill) {}

Frame to_gray(const Frame& rgb) {
  if (rgb.channels == 1) return rgb;
  if (rgb.channels != 3) throw ConfigError("to_gray: expected 3 channels");
  Frame out(rgb.width, rgb.height, 1);
  for (std::size_t i = 0; i < rgb.width * rgb.height; ++i) {
    const double y = 0.299 * rgb.pixels[3 * i] + 0.587 * rgb.pixels[3 * i + 1] +
                     0.114 * rgb.pixels[3 * i + 2];
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(std::clamp(y, 0.0, 255.0)));
  }
  return out;
}

Frame crop_rows(const Frame& frame, std::size_t top, std::size_t rows) {
  if (top + rows > frame.height || rows == 0) {
    throw ConfigError("crop_rows: rows " + std::to_string(top) + "+" + std::to_string(rows) +
                      " outside frame height " + std::to_string(frame.height));
  }
  Frame out(frame.width, rows, frame.channels);
  const std::size_t stride = frame.width * frame.channels;
  std::copy_n(frame.pixels.begin() + static_cast<std::ptrdiff_t>(top * stride), rows * stride,
              out.pixels.begin());
  return out;
}

Frame resize_bilinear(const Frame& frame, std::size_t width, std::size_t height) {
  if (frame.width == width && frame.height == height) return frame;
  Frame out(width, height, frame.channels);
  const double sx = static_cast<double>(frame.width) / static_cast<double>(width);
  const double sy = static_cast<double>(frame.height) / static_cast<double>(height);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(frame.height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, frame.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(frame.width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, frame.width - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < frame.channels; ++c) {
        const double top = (1 - wx) * frame.at(x0, y0, c) + wx * frame.at(x1, y0, c);
        const double bottom = (1 - wx) * frame.at(x0, y1, c) + wx * frame.at(x1, y1, c);
        const double v = (1 - wy) * top + wy * bottom;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

void write_pnm(const std::filesystem::path& path, const Frame& frame) {
  if (frame.channels != 1 && frame.channels != 3) {
    throw ConfigError("write_pnm: unsupported channel count " + std::to_string(frame.channels));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out << (frame.channels == 3 ? "P6" : "P5") << '\n'
      << frame.width << ' ' << frame.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(frame.pixels.data()),
            static_cast<std::streamsize>(frame.pixels.size()));
  if (!out) throw ConfigError("write failed: " + path.string());
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  for (int c = in.get(); c != EOF; c = in.get()) {
    if (c == '#') {
      std::string discard;
      std::getline(in, discard);
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return token;
}

}  // namespace

Frame read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open image " + path.string());
  const std::string magic = next_token(in);
  std::size_t channels = 0;
  if (magic == "P6") {
    channels = 3;
  } else if (magic == "P5") {
    channels = 1;
  } else {
    throw ConfigError("unreadable image " + path.string() + ": not binary PPM/PGM");
  }
  std::size_t width = 0, height = 0, maxval = 0;
  try {
    width = std::stoul(next_token(in));
    height = std::stoul(next_token(in));
    maxval = std::stoul(next_token(in));
  } catch (const std::exception&) {
    throw ConfigError("unreadable image " + path.string() + ": bad header");
  }
  if (maxval != 255 || width == 0 || height == 0) {
    throw ConfigError("unreadable image " + path.string() + ": unsupported header");
  }
  Frame frame(width, height, channels);
  in.read(reinterpret_cast<char*>(frame.pixels.data()),
          static_cast<std::streamsize>(frame.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(frame.pixels.size())) {
    throw ConfigError("unreadable image " + path.string() + ": truncated pixel data");
  }
  return frame;
}

}  // namespace idqn::sim
