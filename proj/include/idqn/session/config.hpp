#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "idqn/agent/agent.hpp"
#include "idqn/pretrain/supervised.hpp"
#include "idqn/sim/simulator.hpp"
#include "idqn/suggest/inject.hpp"
#include "idqn/suggest/oracle.hpp"

namespace idqn::session {

enum class Mode { dqn, idqn, pretrain, record, replay_eval };

std::string to_string(Mode mode);
Mode parse_mode(std::string_view text);

struct SessionConfig {
  // [session]
  Mode mode = Mode::dqn;
  std::string map = "intersection";  // built-in name or .map path
  std::uint64_t seed = 1;
  std::size_t max_episodes = 30;
  std::size_t checkpoint_every = 0;  // episodes; 0 disables
  std::uint16_t port = 0;            // 0 disables the WebSocket server
  std::filesystem::path output_dir = "runs/latest";
  std::filesystem::path load_weights;  // pre-trained or Q weights; empty = none
  std::filesystem::path input_log;     // replay_eval source
  std::size_t thumbnail_size = 42;     // telemetry frame side, pixels

  // [agent]
  agent::AgentConfig agent;
  double network_width = 1.0;

  // [sim]
  sim::SimConfig sim;

  // [suggest]
  suggest::SuggestConfig suggest;
  bool oracle = true;  // scripted trainer in idqn mode
  suggest::Turn goal = suggest::Turn::left;
  suggest::OracleConfig oracle_cfg;

  // [pretrain]
  pretrain::PretrainConfig pretrain;
  std::filesystem::path demo_dir = "demos";
  double validation_fraction = 0.2;
  std::size_t record_ticks = 1500;
  double driver_gain = 0.8;        // steering per radian of heading error
  double driver_offset = 1.5;      // max lateral target offset, metres
  std::size_t driver_hold = 40;    // ticks between offset changes

  void validate() const;
  friend bool operator==(const SessionConfig&, const SessionConfig&);
};

// TOML with sections [session], [agent], [sim], [suggest], [pretrain].
// Missing keys keep their defaults; unknown keys are errors.
SessionConfig parse_config(std::string_view text, const std::string& source = "<config>");
SessionConfig load_config(const std::filesystem::path& path);
// Every key, in the same layout parse_config reads.
std::string to_toml(const SessionConfig& cfg);

}  // namespace idqn::session
