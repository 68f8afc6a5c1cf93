#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

// World frame: x east, y south (image-like), meters. Headings are radians
// measured clockwise from +x, so heading -pi/2 points north.
namespace idqn::sim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

double dot(Vec2 a, Vec2 b);
double norm(Vec2 v);
// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

// Directed lane segment; travel direction is start -> end.
struct Segment {
  Vec2 start;
  Vec2 end;
  double half_width = 0.0;

  double length() const;
  double direction() const;  // heading of start -> end
  // Distance from p to the centerline (clamped to the segment ends).
  double distance(Vec2 p) const;
  friend bool operator==(const Segment&, const Segment&) = default;
};

// Junction point; every pair of listed segments is a permitted connection.
struct Junction {
  Vec2 point;
  std::vector<std::size_t> segments;
  friend bool operator==(const Junction&, const Junction&) = default;
};

// Axis-aligned static collision rectangle.
struct Obstacle {
  Vec2 min;
  Vec2 max;
  friend bool operator==(const Obstacle&, const Obstacle&) = default;
};

struct Spawn {
  Vec2 position;
  double heading = 0.0;
  double speed = 0.0;
  friend bool operator==(const Spawn&, const Spawn&) = default;
};

struct RoadMap {
  std::vector<Segment> segments;
  std::vector<Junction> junctions;
  std::vector<Obstacle> obstacles;
  Spawn spawn;

  // Throws ConfigError on empty maps, non-positive widths, and junctions
  // whose segments do not start or end at the junction point.
  void validate() const;
  friend bool operator==(const RoadMap&, const RoadMap&) = default;
};

// Plain-text map format, one record per line, '#' starts a comment:
//   segment  x0 y0 x1 y1 half_width
//   junction x y seg_index seg_index ...
//   obstacle xmin ymin xmax ymax
//   spawn    x y heading speed
RoadMap parse_map(std::istream& in, const std::string& source = "<map>");
RoadMap load_map(const std::filesystem::path& path);
void write_map(std::ostream& out, const RoadMap& map);
void save_map(const std::filesystem::path& path, const RoadMap& map);

// T-junction: a 40 m approach heading north meets an east-west street; a
// fence lines the far side of the street opposite the approach.
RoadMap intersection_map();
// One 400 m segment heading east; spawn centered at its start.
RoadMap straight_map();

// Built-in maps by name ("intersection", "straight"), otherwise a file path.
RoadMap resolve_map(const std::string& name_or_path);

}  // namespace idqn::sim
