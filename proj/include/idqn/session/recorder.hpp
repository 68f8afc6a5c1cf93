#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include "idqn/pretrain/demo_dataset.hpp"
#include "idqn/sim/simulator.hpp"
#include "idqn/suggest/oracle.hpp"

namespace idqn::session {

struct DriverConfig {
  double gain = 0.8;         // steering per radian of heading error
  double max_offset = 1.5;   // lateral target offset drawn uniformly in +-max_offset
  std::size_t hold = 40;     // ticks between offset draws
  double lookahead = 6.0;
  double throttle = 0.35;
};

// Demonstration driver: pure pursuit of the road centreline (through the
// goal turn on junction maps) shifted by a lateral offset that changes every
// `hold` ticks, so recorded steering varies.
class ScriptedDriver {
 public:
  ScriptedDriver(const sim::RoadMap& map, suggest::Turn goal, DriverConfig cfg,
                 std::uint64_t seed);

  pretrain::DemoLabel operator()(const sim::CarState& state);
  void new_episode();
  double offset() const { return offset_; }

 private:
  const sim::RoadMap& map_;
  std::optional<suggest::GoalArm> arm_;
  DriverConfig cfg_;
  std::mt19937_64 rng_;
  double offset_ = 0.0;
  std::size_t ticks_ = 0;
};

// Appends frames/%06d.ppm and labels.csv rows one tick at a time.
class DemoWriter {
 public:
  explicit DemoWriter(const std::filesystem::path& dir);
  void append(const pretrain::DemoSample& sample);
  std::size_t written() const { return written_; }

 private:
  std::filesystem::path dir_;
  std::ofstream labels_;
  std::size_t written_ = 0;
};

using DriveSource = std::function<pretrain::DemoLabel(const sim::CarState&)>;

struct RecordResult {
  std::size_t frames = 0;
  std::size_t episodes = 0;
};

// Drives `ticks` steps, one demo_rgb_64 frame and label per tick, resetting
// (seed, seed + 1, ...) whenever an episode ends. `on_episode` is called
// at each reset. Disk errors abort with the number of frames written.
RecordResult record_demo(const sim::Simulator& simulator, const DriveSource& drive,
                         std::size_t ticks, const std::filesystem::path& dir, std::uint64_t seed,
                         const std::function<void()>& on_episode = {});

}  // namespace idqn::session
