#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "idqn/sim/simulator.hpp"

namespace idqn::sim {

namespace {

using Rgb = std::array<double, 3>;

// Colors chosen so the grayscale lumas stay well separated:
// grass 69, road 110, obstacle 149, sky 195, marking 235.
constexpr Rgb kSky{170, 200, 235};
constexpr Rgb kGrass{40, 90, 40};
constexpr Rgb kRoad{110, 110, 110};
constexpr Rgb kMarking{235, 235, 235};
constexpr Rgb kObstacle{240, 120, 60};

// Forward depth along `dir` (unit forward component) at which the ground ray
// from `origin` first enters the rectangle, or +inf.
double ray_box(Vec2 origin, Vec2 dir, const Obstacle& box) {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  const double o[2] = {origin.x, origin.y};
  const double d[2] = {dir.x, dir.y};
  const double lo[2] = {box.min.x, box.min.y};
  const double hi[2] = {box.max.x, box.max.y};
  for (int axis = 0; axis < 2; ++axis) {
    if (std::abs(d[axis]) < 1e-15) {
      if (o[axis] < lo[axis] || o[axis] > hi[axis]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double a = (lo[axis] - o[axis]) / d[axis];
    double b = (hi[axis] - o[axis]) / d[axis];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  if (t0 > t1 || t0 <= 0.0) return std::numeric_limits<double>::infinity();
  return t0;
}

Rgb ground_color(const RoadMap& map, Vec2 p, double marking_half_width) {
  bool road = false;
  for (const auto& seg : map.segments) {
    const double d = seg.distance(p);
    if (d <= marking_half_width) return kMarking;
    if (d <= seg.half_width) road = true;
  }
  return road ? kRoad : kGrass;
}

}  // namespace

// Pinhole camera at the car pose looking along the heading with a level
// optical axis; the principal point sits on the horizon row. Each pixel
// averages supersample^2 rays.
Frame render(const CarState& state, const RoadMap& map, RenderMode mode,
             const CameraConfig& camera) {
  const std::size_t size = mode == RenderMode::dqn_gray_84 ? 84 : 64;
  const auto w = static_cast<double>(size);
  const double focal = (w / 2.0) / std::tan(camera.fov_deg * std::numbers::pi / 360.0);
  const double horizon = camera.horizon * w;
  const Vec2 forward{std::cos(state.heading), std::sin(state.heading)};
  const Vec2 right{-std::sin(state.heading), std::cos(state.heading)};
  const std::size_t ss = camera.supersample;
  const double inv = 1.0 / static_cast<double>(ss * ss);

  Frame rgb(size, size, 3);
  std::vector<double> wall(size * ss);
  for (std::size_t col = 0; col < size * ss; ++col) {
    const double u = (static_cast<double>(col) + 0.5) / static_cast<double>(ss) - w / 2.0;
    const Vec2 dir = forward + right * (u / focal);
    double t = std::numeric_limits<double>::infinity();
    for (const auto& box : map.obstacles) t = std::min(t, ray_box(state.position, dir, box));
    wall[col] = t <= camera.max_distance ? t : std::numeric_limits<double>::infinity();
  }

  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      Rgb acc{0, 0, 0};
      for (std::size_t sy = 0; sy < ss; ++sy) {
        const double v = static_cast<double>(y) + (static_cast<double>(sy) + 0.5) / ss - horizon;
        for (std::size_t sx = 0; sx < ss; ++sx) {
          const std::size_t col = x * ss + sx;
          const double u = (static_cast<double>(col) + 0.5) / static_cast<double>(ss) - w / 2.0;
          Rgb c = kSky;
          const double t = wall[col];
          const double h = camera.height - v * t / focal;
          if (std::isfinite(t) && h >= 0.0 && h <= camera.obstacle_height) {
            c = kObstacle;
          } else if (v > 0.0) {
            const double z = camera.height * focal / v;
            if (z > camera.max_distance) {
              c = kGrass;
            } else {
              const Vec2 p = state.position + forward * z + right * (u * z / focal);
              c = ground_color(map, p, camera.marking_half_width);
            }
          }
          for (int k = 0; k < 3; ++k) acc[k] += c[k];
        }
      }
      for (std::size_t k = 0; k < 3; ++k) {
        rgb.at(x, y, k) = static_cast<std::uint8_t>(std::lround(acc[k] * inv));
      }
    }
  }
  return mode == RenderMode::dqn_gray_84 ? to_gray(rgb) : rgb;
}

}  // namespace idqn::sim
