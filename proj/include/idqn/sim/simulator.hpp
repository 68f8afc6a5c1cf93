#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>

#include "idqn/sim/frame.hpp"
#include "idqn/sim/road_map.hpp"

namespace idqn::sim {

enum class ActionId : std::uint8_t { forward = 0, left = 1, right = 2 };
inline constexpr std::size_t kNumActions = 3;

std::string to_string(ActionId id);
// Accepts "FORWARD"/"LEFT"/"RIGHT" in any case.
std::optional<ActionId> parse_action(const std::string& name);

// Control command. Discrete actions fix steering and throttle; recorded
// demonstrations drive with arbitrary commands.
struct Action {
  ActionId id = ActionId::forward;
  double steering = 0.0;  // [-1, 1], negative steers left
  double throttle = 0.0;  // [0, 1]
  double brake = 0.0;     // [0, 1]
};

enum class RenderMode { dqn_gray_84, demo_rgb_64 };

struct CameraConfig {
  double height = 1.2;          // meters above ground
  double fov_deg = 90.0;        // horizontal field of view
  double horizon = 0.4;         // horizon row as a fraction of frame height
  double max_distance = 150.0;  // ground beyond this renders as haze
  double obstacle_height = 1.5;
  double marking_half_width = 0.1;
  std::size_t supersample = 2;  // per axis
};

struct SimConfig {
  double dt = 0.1;
  double throttle = 0.35;   // constant throttle of the discrete actions
  double steer_left = -0.25;
  double steer_right = 0.25;
  double k_steer = 1.0;     // yaw rate per unit steering per m/s
  double k_throttle = 10.0; // acceleration per unit throttle
  double k_drag = 0.7;      // linear drag, 1/s
  double k_brake = 8.0;     // deceleration per unit brake
  double car_radius = 1.0;
  int step_limit = 500;
  // Reward instantiation.
  double w_distance = 1.0;
  double w_angle = 1.0;
  double w_speed = 1.0;
  double theta_max = std::numbers::pi / 2.0;
  double p_terminal = 10.0;
  // Reset jitter, uniform within +-bounds.
  bool jitter = true;
  double jitter_lateral = 0.5;
  double jitter_heading_deg = 5.0;
  RenderMode render_mode = RenderMode::dqn_gray_84;
  CameraConfig camera;

  // Terminal speed under the constant action throttle.
  double v_max() const { return k_throttle * throttle / k_drag; }
  void validate() const;
};

Action make_action(ActionId id, const SimConfig& cfg);

struct CarState {
  Vec2 position;
  double heading = 0.0;  // (-pi, pi]
  double speed = 0.0;    // >= 0
  bool alive = true;
  int tick = 0;          // steps taken this episode
  friend bool operator==(const CarState&, const CarState&) = default;
};

enum class EndCause { none, out_of_bounds, collision, step_limit };
std::string to_string(EndCause cause);

struct StepOutcome {
  CarState next_state;
  Frame frame;
  double reward = 0.0;  // unclipped
  bool done = false;
  EndCause cause = EndCause::none;
};

// Per-segment lane geometry of a pose.
struct LaneQuery {
  std::size_t segment = 0;  // nearest centerline
  double distance = 0.0;    // to the nearest centerline
  double heading_error = 0.0;
  bool on_road = false;     // within half_width of some segment
};
LaneQuery query_lane(const RoadMap& map, Vec2 position, double heading);

bool collides(const RoadMap& map, Vec2 position, double radius);

// Shaped reward without events: the best lane score over segments,
//   w_d (1 - d/hw)+ + w_a g (1 - |theta_err|/theta_max)+,
// where g = clamp((2 hw - d)/hw, 0, 1) fades the heading term out beside a
// lane, plus w_v min(1, v / v_max).
double shaped_reward(const CarState& state, const RoadMap& map, const SimConfig& cfg);

// Full reward: -p_terminal when off every lane; shaped - p_terminal on
// collision; shaped otherwise.
double reward(const CarState& state, const RoadMap& map, const SimConfig& cfg);

Frame render(const CarState& state, const RoadMap& map, RenderMode mode,
             const CameraConfig& camera = {});

// Owns a map and configuration; every method is a pure function of its
// arguments.
class Simulator {
 public:
  Simulator(RoadMap map, SimConfig cfg);

  const RoadMap& map() const { return map_; }
  const SimConfig& config() const { return cfg_; }

  // Spawn pose, with seeded lateral/heading jitter when enabled.
  CarState reset(std::uint64_t seed) const;
  StepOutcome step(const CarState& state, const Action& action) const;
  StepOutcome step(const CarState& state, const Action& action, double dt) const;
  // Kinematics only: no reward, termination, or rendering.
  CarState advance(const CarState& state, const Action& action, double dt) const;
  Frame render(const CarState& state) const;
  Frame render(const CarState& state, RenderMode mode) const;

 private:
  RoadMap map_;
  SimConfig cfg_;
};

}  // namespace idqn::sim
