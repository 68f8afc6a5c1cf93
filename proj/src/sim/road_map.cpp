#include "idqn/sim/road_map.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "idqn/errors.hpp"

namespace idqn::sim {

double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

double Segment::length() const { return norm(end - start); }

double Segment::direction() const { return std::atan2(end.y - start.y, end.x - start.x); }

double Segment::distance(Vec2 p) const {
  const Vec2 d = end - start;
  const double len2 = dot(d, d);
  const double t = len2 > 0.0 ? std::clamp(dot(p - start, d) / len2, 0.0, 1.0) : 0.0;
  return norm(p - (start + d * t));
}

void RoadMap::validate() const {
  if (segments.empty()) throw ConfigError("map has no segments");
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (!(segments[i].half_width > 0.0)) {
      throw ConfigError("segment " + std::to_string(i) + ": half_width must be > 0");
    }
    if (segments[i].length() <= 0.0) {
      throw ConfigError("segment " + std::to_string(i) + ": zero length");
    }
  }
  constexpr double tol = 1e-6;
  for (std::size_t j = 0; j < junctions.size(); ++j) {
    const auto& junction = junctions[j];
    if (junction.segments.size() < 2) {
      throw ConfigError("junction " + std::to_string(j) + ": needs at least two segments");
    }
    for (std::size_t s : junction.segments) {
      if (s >= segments.size()) {
        throw ConfigError("junction " + std::to_string(j) + ": unknown segment " +
                          std::to_string(s));
      }
      const auto& seg = segments[s];
      if (norm(seg.start - junction.point) > tol && norm(seg.end - junction.point) > tol) {
        throw ConfigError("junction " + std::to_string(j) + ": segment " + std::to_string(s) +
                          " does not meet the junction point");
      }
    }
  }
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    if (!(obstacles[i].min.x < obstacles[i].max.x && obstacles[i].min.y < obstacles[i].max.y)) {
      throw ConfigError("obstacle " + std::to_string(i) + ": min must be below max");
    }
  }
}

RoadMap parse_map(std::istream& in, const std::string& source) {
  RoadMap map;
  bool have_spawn = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string kind;
    if (!(fields >> kind)) continue;
    const auto fail = [&](const std::string& what) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + what);
    };
    if (kind == "segment") {
      Segment s;
      if (!(fields >> s.start.x >> s.start.y >> s.end.x >> s.end.y >> s.half_width)) {
        fail("segment needs x0 y0 x1 y1 half_width");
      }
      map.segments.push_back(s);
    } else if (kind == "junction") {
      Junction j;
      if (!(fields >> j.point.x >> j.point.y)) fail("junction needs x y seg...");
      std::size_t s;
      while (fields >> s) j.segments.push_back(s);
      if (!fields.eof()) fail("junction segment indices must be non-negative integers");
      map.junctions.push_back(j);
    } else if (kind == "obstacle") {
      Obstacle o;
      if (!(fields >> o.min.x >> o.min.y >> o.max.x >> o.max.y)) {
        fail("obstacle needs xmin ymin xmax ymax");
      }
      map.obstacles.push_back(o);
    } else if (kind == "spawn") {
      if (!(fields >> map.spawn.position.x >> map.spawn.position.y >> map.spawn.heading >>
            map.spawn.speed)) {
        fail("spawn needs x y heading speed");
      }
      have_spawn = true;
    } else {
      fail("unknown record '" + kind + "'");
    }
    std::string extra;
    if (kind != "junction" && (fields >> extra)) fail("trailing field '" + extra + "'");
  }
  if (!have_spawn) throw ConfigError(source + ": missing spawn record");
  map.validate();
  return map;
}

RoadMap load_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open map " + path.string());
  return parse_map(in, path.string());
}

void write_map(std::ostream& out, const RoadMap& map) {
  out << std::setprecision(17);
  for (const auto& s : map.segments) {
    out << "segment " << s.start.x << ' ' << s.start.y << ' ' << s.end.x << ' ' << s.end.y << ' '
        << s.half_width << '\n';
  }
  for (const auto& j : map.junctions) {
    out << "junction " << j.point.x << ' ' << j.point.y;
    for (auto s : j.segments) out << ' ' << s;
    out << '\n';
  }
  for (const auto& o : map.obstacles) {
    out << "obstacle " << o.min.x << ' ' << o.min.y << ' ' << o.max.x << ' ' << o.max.y << '\n';
  }
  out << "spawn " << map.spawn.position.x << ' ' << map.spawn.position.y << ' '
      << map.spawn.heading << ' ' << map.spawn.speed << '\n';
}

void save_map(const std::filesystem::path& path, const RoadMap& map) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  write_map(out, map);
}

RoadMap intersection_map() {
  RoadMap map;
  map.segments = {
      {{0.0, 0.0}, {0.0, -40.0}, 4.0},        // approach, heading north
      {{0.0, -40.0}, {-250.0, -40.0}, 4.0},   // west arm (left turn)
      {{0.0, -40.0}, {250.0, -40.0}, 4.0},    // east arm (right turn)
  };
  map.junctions = {{{0.0, -40.0}, {0, 1, 2}}};
  map.obstacles = {{{-8.0, -44.0}, {8.0, -43.2}}};
  map.spawn = {{0.0, -20.0}, -std::numbers::pi / 2.0, 0.0};
  return map;
}

RoadMap straight_map() {
  RoadMap map;
  map.segments = {{{0.0, 0.0}, {400.0, 0.0}, 4.0}};
  map.spawn = {{3.0, 0.0}, 0.0, 0.0};
  return map;
}

RoadMap resolve_map(const std::string& name_or_path) {
  if (name_or_path == "intersection") return intersection_map();
  if (name_or_path == "straight") return straight_map();
  return load_map(name_or_path);
}

}  // namespace idqn::sim
