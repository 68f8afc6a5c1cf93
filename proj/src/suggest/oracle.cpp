#include "idqn/suggest/oracle.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "idqn/errors.hpp"

namespace idqn::suggest {

std::string to_string(Turn turn) {
  switch (turn) {
    case Turn::left: return "left";
    case Turn::straight: return "straight";
    case Turn::right: return "right";
  }
  return "?";
}

Turn parse_turn(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "left") return Turn::left;
  if (s == "straight" || s == "forward") return Turn::straight;
  if (s == "right") return Turn::right;
  throw ConfigError("unknown turn '" + std::string(text) + "' (expected left, straight, right)");
}

std::optional<GoalArm> goal_arm(const sim::RoadMap& map, Turn goal) {
  if (map.junctions.empty()) return std::nullopt;
  const auto& j = map.junctions.front();
  const double h = map.spawn.heading;
  const sim::Vec2 forward{std::cos(h), std::sin(h)};
  // Left of the heading in a y-down frame.
  const sim::Vec2 left{std::sin(h), -std::cos(h)};
  const sim::Vec2 want = goal == Turn::left    ? left
                         : goal == Turn::right ? left * -1.0
                                               : forward;
  std::optional<sim::Vec2> best;
  sim::Vec2 approach = forward * -1.0;
  double best_score = 0.5, approach_score = 0.5;
  for (const auto idx : j.segments) {
    const auto& seg = map.segments.at(idx);
    const bool from_start = sim::norm(seg.start - j.point) <= sim::norm(seg.end - j.point);
    const sim::Vec2 along = (seg.end - seg.start) * (1.0 / seg.length());
    const sim::Vec2 dir = from_start ? along : along * -1.0;
    const double score = sim::dot(dir, want);
    if (score > best_score) {
      best_score = score;
      best = dir;
    }
    if (-sim::dot(dir, forward) > approach_score) {
      approach_score = -sim::dot(dir, forward);
      approach = dir;
    }
  }
  if (!best) return std::nullopt;
  return GoalArm{j.point, *best, approach};
}

PathPoint pursuit_target(const sim::CarState& state, const GoalArm& arm, double lookahead) {
  const sim::Vec2 rel = state.position - arm.junction;
  const double before = sim::dot(rel, arm.approach);  // distance still to go
  if (before > lookahead) {
    return {arm.junction + arm.approach * (before - lookahead), arm.approach * -1.0};
  }
  if (before > 0.0) return {arm.junction + arm.direction * (lookahead - before), arm.direction};
  const double t = std::max(0.0, sim::dot(rel, arm.direction));
  return {arm.junction + arm.direction * (t + lookahead), arm.direction};
}

double heading_error(const sim::CarState& state, sim::Vec2 target) {
  const sim::Vec2 to = target - state.position;
  return sim::wrap_angle(std::atan2(to.y, to.x) - state.heading);
}

sim::ActionId pursuit_action(const sim::CarState& state, const GoalArm& arm,
                             const OracleConfig& cfg) {
  const double error = heading_error(state, pursuit_target(state, arm, cfg.lookahead).point);
  // Heading increases clockwise, and LEFT steering decreases it.
  if (error < -cfg.deadband) return sim::ActionId::left;
  if (error > cfg.deadband) return sim::ActionId::right;
  return sim::ActionId::forward;
}

std::optional<Suggestion> scripted_oracle(const sim::CarState& state, const sim::RoadMap& map,
                                          Turn goal, std::optional<sim::ActionId> last_action,
                                          const OracleConfig& cfg) {
  const auto arm = goal_arm(map, goal);
  if (!arm) return std::nullopt;
  if (sim::norm(state.position - arm->junction) > cfg.trigger_radius) return std::nullopt;
  const auto action = pursuit_action(state, *arm, cfg);
  if (last_action && *last_action == action) return std::nullopt;
  return Suggestion{action, now_ms(), Source::scripted_oracle};
}

}  // namespace idqn::suggest
