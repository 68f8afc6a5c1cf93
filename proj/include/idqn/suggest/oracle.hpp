#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "idqn/sim/road_map.hpp"
#include "idqn/sim/simulator.hpp"
#include "idqn/suggest/queue.hpp"

namespace idqn::suggest {

enum class Turn { left, straight, right };

std::string to_string(Turn turn);
Turn parse_turn(std::string_view text);

struct OracleConfig {
  double trigger_radius = 12.0;  // metres from the junction point
  double lookahead = 6.0;        // pursuit point distance along the goal arm
  double deadband = 0.15;        // radians of heading error answered by FORWARD
};

// The junction arm the goal turn leads onto, relative to the map's spawn
// heading (the direction cars enter the map), plus the arm cars arrive on.
// nullopt when the map has no junction or no arm in that direction.
struct GoalArm {
  sim::Vec2 junction;
  sim::Vec2 direction;  // unit, pointing away from the junction
  sim::Vec2 approach;   // unit, from the junction back toward the spawn
};
std::optional<GoalArm> goal_arm(const sim::RoadMap& map, Turn goal);

// Point `lookahead` metres ahead of the car's progress along the path
// approach centreline -> junction -> goal arm centreline, and the path's
// travel direction there.
struct PathPoint {
  sim::Vec2 point;
  sim::Vec2 direction;
};
PathPoint pursuit_target(const sim::CarState& state, const GoalArm& arm, double lookahead);

// Heading change (radians, positive clockwise = toward the car's right)
// that points the car at `target`.
double heading_error(const sim::CarState& state, sim::Vec2 target);

// Pure pursuit of pursuit_target with a FORWARD deadband.
sim::ActionId pursuit_action(const sim::CarState& state, const GoalArm& arm,
                             const OracleConfig& cfg);

// Stand-in trainer: within trigger_radius of the junction, suggests the
// pursuit action unless the agent's last action already equals it.
std::optional<Suggestion> scripted_oracle(const sim::CarState& state, const sim::RoadMap& map,
                                          Turn goal, std::optional<sim::ActionId> last_action,
                                          const OracleConfig& cfg = {});

}  // namespace idqn::suggest
