#include "idqn/sim/simulator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <random>

#include "idqn/errors.hpp"

namespace idqn::sim {

std::string to_string(ActionId id) {
  switch (id) {
    case ActionId::forward: return "FORWARD";
    case ActionId::left: return "LEFT";
    case ActionId::right: return "RIGHT";
  }
  return "?";
}

std::optional<ActionId> parse_action(const std::string& name) {
  std::string upper = name;
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "FORWARD") return ActionId::forward;
  if (upper == "LEFT") return ActionId::left;
  if (upper == "RIGHT") return ActionId::right;
  return std::nullopt;
}

std::string to_string(EndCause cause) {
  switch (cause) {
    case EndCause::none: return "none";
    case EndCause::out_of_bounds: return "out_of_bounds";
    case EndCause::collision: return "collision";
    case EndCause::step_limit: return "step_limit";
  }
  return "?";
}

void SimConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("sim config: ") + what);
  };
  require(dt > 0.0, "dt must be > 0");
  require(throttle > 0.0 && throttle <= 1.0, "throttle must be in (0, 1]");
  require(k_drag > 0.0, "k_drag must be > 0");
  require(k_throttle > 0.0 && k_steer >= 0.0 && k_brake >= 0.0, "gains must be non-negative");
  require(car_radius >= 0.0, "car_radius must be >= 0");
  require(step_limit >= 1, "step_limit must be >= 1");
  require(theta_max > 0.0, "theta_max must be > 0");
  require(p_terminal >= 0.0, "p_terminal must be >= 0");
  require(w_distance >= 0.0 && w_angle >= 0.0 && w_speed >= 0.0, "weights must be >= 0");
  require(jitter_lateral >= 0.0 && jitter_heading_deg >= 0.0, "jitter bounds must be >= 0");
  require(camera.fov_deg > 0.0 && camera.fov_deg < 180.0, "camera fov must be in (0, 180)");
  require(camera.horizon >= 0.0 && camera.horizon < 1.0, "camera horizon must be in [0, 1)");
  require(camera.height > 0.0 && camera.supersample >= 1, "camera height/supersample");
}

Action make_action(ActionId id, const SimConfig& cfg) {
  Action a;
  a.id = id;
  a.throttle = cfg.throttle;
  a.steering = id == ActionId::left ? cfg.steer_left
               : id == ActionId::right ? cfg.steer_right
                                       : 0.0;
  return a;
}

LaneQuery query_lane(const RoadMap& map, Vec2 position, double heading) {
  LaneQuery q;
  q.distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < map.segments.size(); ++i) {
    const auto& seg = map.segments[i];
    const double d = seg.distance(position);
    if (d <= seg.half_width) q.on_road = true;
    if (d < q.distance) {
      q.distance = d;
      q.segment = i;
      q.heading_error = wrap_angle(heading - seg.direction());
    }
  }
  return q;
}

bool collides(const RoadMap& map, Vec2 p, double radius) {
  for (const auto& o : map.obstacles) {
    const double cx = std::clamp(p.x, o.min.x, o.max.x);
    const double cy = std::clamp(p.y, o.min.y, o.max.y);
    if (norm(p - Vec2{cx, cy}) <= radius) return true;
  }
  return false;
}

double shaped_reward(const CarState& state, const RoadMap& map, const SimConfig& cfg) {
  double lane = 0.0;
  for (const auto& seg : map.segments) {
    const double hw = seg.half_width;
    const double d = seg.distance(state.position);
    const double err = std::abs(wrap_angle(state.heading - seg.direction()));
    const double gate = std::clamp((2.0 * hw - d) / hw, 0.0, 1.0);
    const double score = cfg.w_distance * std::max(0.0, 1.0 - d / hw) +
                         cfg.w_angle * gate * std::max(0.0, 1.0 - err / cfg.theta_max);
    lane = std::max(lane, score);
  }
  return lane + cfg.w_speed * std::min(1.0, state.speed / cfg.v_max());
}

double reward(const CarState& state, const RoadMap& map, const SimConfig& cfg) {
  if (!query_lane(map, state.position, state.heading).on_road) return -cfg.p_terminal;
  const double shaped = shaped_reward(state, map, cfg);
  if (collides(map, state.position, cfg.car_radius)) return shaped - cfg.p_terminal;
  return shaped;
}

Simulator::Simulator(RoadMap map, SimConfig cfg) : map_(std::move(map)), cfg_(cfg) {
  map_.validate();
  cfg_.validate();
}

CarState Simulator::reset(std::uint64_t seed) const {
  CarState s;
  s.position = map_.spawn.position;
  s.heading = wrap_angle(map_.spawn.heading);
  s.speed = map_.spawn.speed;
  if (cfg_.jitter) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> lateral(-cfg_.jitter_lateral, cfg_.jitter_lateral);
    const double h = cfg_.jitter_heading_deg * std::numbers::pi / 180.0;
    std::uniform_real_distribution<double> yaw(-h, h);
    const double offset = lateral(rng);
    const Vec2 right{-std::sin(s.heading), std::cos(s.heading)};
    s.position = s.position + right * offset;
    s.heading = wrap_angle(s.heading + yaw(rng));
  }
  return s;
}

CarState Simulator::advance(const CarState& state, const Action& action, double dt) const {
  CarState next = state;
  next.heading = wrap_angle(state.heading + cfg_.k_steer * action.steering * state.speed * dt);
  next.speed = std::max(0.0, state.speed + (cfg_.k_throttle * action.throttle -
                                            cfg_.k_drag * state.speed -
                                            cfg_.k_brake * action.brake) *
                                               dt);
  const Vec2 forward{std::cos(next.heading), std::sin(next.heading)};
  next.position = state.position + forward * (next.speed * dt);
  next.tick = state.tick + 1;
  return next;
}

StepOutcome Simulator::step(const CarState& state, const Action& action) const {
  return step(state, action, cfg_.dt);
}

StepOutcome Simulator::step(const CarState& state, const Action& action, double dt) const {
  if (!state.alive) throw UsageError("step called on a finished episode");
  if (!(dt > 0.0)) throw UsageError("step requires dt > 0");
  StepOutcome out;
  out.next_state = advance(state, action, dt);
  const CarState& s = out.next_state;
  if (collides(map_, s.position, cfg_.car_radius)) {
    out.cause = EndCause::collision;
  } else if (!query_lane(map_, s.position, s.heading).on_road) {
    out.cause = EndCause::out_of_bounds;
  } else if (s.tick >= cfg_.step_limit) {
    out.cause = EndCause::step_limit;
  }
  out.reward = reward(s, map_, cfg_);
  out.done = out.cause != EndCause::none;
  out.next_state.alive = !out.done;
  out.frame = render(out.next_state);
  return out;
}

Frame Simulator::render(const CarState& state) const { return render(state, cfg_.render_mode); }

Frame Simulator::render(const CarState& state, RenderMode mode) const {
  return sim::render(state, map_, mode, cfg_.camera);
}

}  // namespace idqn::sim
