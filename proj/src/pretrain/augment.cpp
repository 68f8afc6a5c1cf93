#include "idqn/pretrain/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "idqn/errors.hpp"

namespace idqn::pretrain {

void AugmentConfig::validate() const {
  if (!(crop_fraction > 0.0 && crop_fraction <= 1.0)) {
    throw ConfigError("augment crop fraction must be in (0, 1]");
  }
  if (!(shift_sigma >= 0.0) || !(rot_sigma >= 0.0)) {
    throw ConfigError("augment sigmas must be >= 0");
  }
  if (!std::isfinite(steer_correction)) throw ConfigError("augment steer correction must be finite");
}

AugmentDraw draw_augment(const AugmentConfig& cfg, std::mt19937_64& rng) {
  AugmentDraw d;
  if (cfg.shift_sigma > 0.0) d.shift_px = std::normal_distribution<double>(0.0, cfg.shift_sigma)(rng);
  if (cfg.rot_sigma > 0.0) d.rotation_deg = std::normal_distribution<double>(0.0, cfg.rot_sigma)(rng);
  return d;
}

sim::Frame preprocess(const sim::Frame& frame, const AugmentConfig& cfg) {
  const auto rows = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(cfg.crop_fraction * static_cast<double>(frame.height))));
  return sim::resize_bilinear(sim::crop_rows(frame, frame.height - rows, rows), 64, 64);
}

sim::Frame warp(const sim::Frame& frame, const AugmentDraw& draw) {
  if (draw.shift_px == 0.0 && draw.rotation_deg == 0.0) return frame;
  sim::Frame out(frame.width, frame.height, frame.channels);
  const double cx = (static_cast<double>(frame.width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(frame.height) - 1.0) / 2.0;
  const double a = draw.rotation_deg * std::numbers::pi / 180.0;
  const double ca = std::cos(a), sa = std::sin(a);
  const double max_x = static_cast<double>(frame.width) - 1.0;
  const double max_y = static_cast<double>(frame.height) - 1.0;
  for (std::size_t y = 0; y < frame.height; ++y) {
    for (std::size_t x = 0; x < frame.width; ++x) {
      const double dx = static_cast<double>(x) - cx;
      const double dy = static_cast<double>(y) - cy;
      // Inverse rotation, then the shift: out(p) = in(R(-a) (p - c) + c + (s, 0)).
      const double sx = std::clamp(cx + ca * dx + sa * dy + draw.shift_px, 0.0, max_x);
      const double sy = std::clamp(cy - sa * dx + ca * dy, 0.0, max_y);
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const auto y0 = static_cast<std::size_t>(std::floor(sy));
      const auto x1 = std::min(x0 + 1, frame.width - 1);
      const auto y1 = std::min(y0 + 1, frame.height - 1);
      const double fx = sx - static_cast<double>(x0);
      const double fy = sy - static_cast<double>(y0);
      for (std::size_t c = 0; c < frame.channels; ++c) {
        const double top = frame.at(x0, y0, c) * (1.0 - fx) + frame.at(x1, y0, c) * fx;
        const double bottom = frame.at(x0, y1, c) * (1.0 - fx) + frame.at(x1, y1, c) * fx;
        out.at(x, y, c) = static_cast<std::uint8_t>(
            std::clamp(std::lround(top * (1.0 - fy) + bottom * fy), 0L, 255L));
      }
    }
  }
  return out;
}

DemoSample apply_augment(const DemoSample& sample, const AugmentConfig& cfg,
                         const AugmentDraw& draw) {
  DemoSample out;
  out.frame = warp(preprocess(sample.frame, cfg), draw);
  out.label = sample.label;
  out.label.steering =
      std::clamp(sample.label.steering - cfg.steer_correction * draw.shift_px, -1.0, 1.0);
  out.action_id = sample.action_id;
  return out;
}

DemoSample augment(const DemoSample& sample, const AugmentConfig& cfg, std::mt19937_64& rng) {
  return apply_augment(sample, cfg, draw_augment(cfg, rng));
}

}  // namespace idqn::pretrain
