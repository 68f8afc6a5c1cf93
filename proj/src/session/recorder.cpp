#include "idqn/session/recorder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "idqn/errors.hpp"

namespace idqn::session {

ScriptedDriver::ScriptedDriver(const sim::RoadMap& map, suggest::Turn goal, DriverConfig cfg,
                               std::uint64_t seed)
    : map_(map), arm_(suggest::goal_arm(map, goal)), cfg_(cfg), rng_(seed) {
  new_episode();
}

void ScriptedDriver::new_episode() { ticks_ = 0; }

pretrain::DemoLabel ScriptedDriver::operator()(const sim::CarState& state) {
  if (ticks_ % cfg_.hold == 0) {
    offset_ = cfg_.max_offset > 0.0
                  ? std::uniform_real_distribution<double>(-cfg_.max_offset, cfg_.max_offset)(rng_)
                  : 0.0;
  }
  ++ticks_;
  suggest::PathPoint target;
  if (arm_) {
    target = suggest::pursuit_target(state, *arm_, cfg_.lookahead);
  } else {
    // Nearest segment, followed in the direction the car is facing.
    const sim::Segment* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& seg : map_.segments) {
      const double d = seg.distance(state.position);
      if (d < best_d) {
        best_d = d;
        best = &seg;
      }
    }
    if (best == nullptr) throw UsageError("scripted driver needs a map with segments");
    sim::Vec2 dir = (best->end - best->start) * (1.0 / best->length());
    if (sim::dot(dir, {std::cos(state.heading), std::sin(state.heading)}) < 0.0) dir = dir * -1.0;
    const double t = sim::dot(state.position - best->start, dir);
    const sim::Vec2 foot = best->start + dir * t;
    target = {foot + dir * cfg_.lookahead, dir};
  }
  const sim::Vec2 right{-target.direction.y, target.direction.x};
  const sim::Vec2 aim = target.point + right * offset_;
  pretrain::DemoLabel label;
  label.throttle = cfg_.throttle;
  label.steering = std::clamp(cfg_.gain * suggest::heading_error(state, aim), -1.0, 1.0);
  label.brake = 0.0;
  return label;
}

DemoWriter::DemoWriter(const std::filesystem::path& dir) : dir_(dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "frames", ec);
  if (ec) throw ConfigError("cannot create " + (dir / "frames").string() + ": " + ec.message());
  labels_.open(dir / "labels.csv");
  if (!labels_) throw ConfigError("cannot write " + (dir / "labels.csv").string());
  labels_ << "index,throttle,steering,brake,action_id\n";
  labels_.precision(17);
}

void DemoWriter::append(const pretrain::DemoSample& s) {
  try {
    sim::write_pnm(dir_ / "frames" / pretrain::frame_filename(written_, s.frame.channels), s.frame);
  } catch (const std::exception& e) {
    throw ConfigError("recording aborted after " + std::to_string(written_) +
                      " frames: " + e.what());
  }
  labels_ << written_ << ',' << s.label.throttle << ',' << s.label.steering << ','
          << s.label.brake << ',' << s.action_id << '\n';
  labels_.flush();
  if (!labels_) {
    throw ConfigError("recording aborted after " + std::to_string(written_) +
                      " frames: cannot write labels.csv");
  }
  ++written_;
}

RecordResult record_demo(const sim::Simulator& simulator, const DriveSource& drive,
                         std::size_t ticks, const std::filesystem::path& dir, std::uint64_t seed,
                         const std::function<void()>& on_episode) {
  DemoWriter writer(dir);
  RecordResult result;
  sim::CarState state = simulator.reset(seed);
  result.episodes = 1;
  for (std::size_t t = 0; t < ticks; ++t) {
    pretrain::DemoSample sample;
    sample.frame = simulator.render(state, sim::RenderMode::demo_rgb_64);
    sample.label = drive(state);
    writer.append(sample);
    sim::Action action;
    action.id = sim::ActionId::forward;
    action.throttle = sample.label.throttle;
    action.steering = sample.label.steering;
    action.brake = sample.label.brake;
    const auto out = simulator.step(state, action);
    state = out.next_state;
    if (out.done && t + 1 < ticks) {
      state = simulator.reset(seed + result.episodes);
      ++result.episodes;
      if (on_episode) on_episode();
    }
  }
  result.frames = writer.written();
  return result;
}

}  // namespace idqn::session
