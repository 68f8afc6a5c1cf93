#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "idqn/agent/agent.hpp"
#include "idqn/pretrain/supervised.hpp"
#include "idqn/pretrain/transfer.hpp"
#include "idqn/session/config.hpp"
#include "idqn/session/metrics.hpp"
#include "idqn/session/protocol.hpp"
#include "idqn/session/recorder.hpp"
#include "idqn/sim/simulator.hpp"
#include "idqn/suggest/queue.hpp"

namespace idqn::session {

// A suggestion as it was consumed by the training loop: injected right
// after environment step `step` completed.
struct InputEvent {
  std::uint64_t step = 0;
  sim::ActionId action = sim::ActionId::forward;
  suggest::Source source = suggest::Source::ui_button;
  friend bool operator==(const InputEvent&, const InputEvent&) = default;
};

// step,action,source
void save_input_log(const std::filesystem::path& path, const std::vector<InputEvent>& events);
std::vector<InputEvent> load_input_log(const std::filesystem::path& path);

// How pre-trained or saved weights entered the Q-network.
struct WeightLoad {
  bool direct = false;  // shapes matched the Q-network exactly
  pretrain::TransferReport transfer;
};

// Flags shared with the control channel, checked between steps.
struct Controls {
  std::atomic<bool> paused{false};
  std::atomic<bool> stop{false};
};

// Seed of episode k's simulator reset.
std::uint64_t episode_seed(std::uint64_t seed, std::size_t episode);

// Owns simulator, agent, and the suggestion queue for one run. The
// training loop runs on the calling thread; the queue, controls, drive
// command, and handle_client_message may be used from other threads.
class Session {
 public:
  explicit Session(SessionConfig cfg);

  const SessionConfig& config() const { return cfg_; }
  const sim::Simulator& simulator() const { return sim_; }
  agent::Agent& agent() { return *agent_; }
  const agent::Agent& agent() const { return *agent_; }
  suggest::SuggestionQueue& queue() { return queue_; }
  Controls& controls() { return controls_; }
  const RunLog& log() const { return log_; }
  std::uint64_t global_step() const { return log_.global_step; }
  std::size_t next_episode() const { return log_.episodes.size(); }
  const std::vector<InputEvent>& input_log() const { return inputs_; }

  // Receives every telemetry and episode message (JSON text).
  void set_telemetry(std::function<void(const std::string&)> sink);
  // Replaces live suggestions with a recorded input log (replay_eval).
  void set_replay_inputs(std::vector<InputEvent> events);

  // Loads a weights file (or a checkpoint directory's Q weights): assigned
  // directly when the shapes match the Q-network, otherwise read as a
  // pre-training network and transferred. The target is synced afterwards.
  WeightLoad load_initial_weights(const std::filesystem::path& path);

  // Greedy actions of the current Q-network over a fixed probe drive.
  std::vector<sim::ActionId> probe_actions(std::size_t steps) const;

  EpisodeStats run_episode();
  // Episodes until max_episodes (or a stop request); after each episode the
  // run log and input log are written to output_dir, and a checkpoint every
  // checkpoint_every episodes.
  const RunLog& run_training();

  void save_checkpoint(const std::filesystem::path& dir) const;
  // Rebuilds a session from a checkpoint; `overrides` may change
  // max_episodes, output_dir, port, and checkpoint_every.
  static std::unique_ptr<Session> resume(const std::filesystem::path& dir,
                                         const std::function<void(SessionConfig&)>& overrides = {});

  // Control channel: returns the reply for the sending client.
  std::string handle_client_message(std::string_view text);
  DriveMessage drive_command() const;

 private:
  bool wait_while_paused();
  std::size_t inject_suggestions(const sim::Frame& state);
  void publish(const std::string& message) const;
  void publish_telemetry(std::size_t episode_step, double reward,
                         std::optional<sim::ActionId> action, const sim::Frame& frame);

  SessionConfig cfg_;
  sim::Simulator sim_;
  std::unique_ptr<agent::Agent> agent_;
  suggest::SuggestionQueue queue_;
  Controls controls_;
  RunLog log_;
  std::vector<InputEvent> inputs_;
  std::optional<std::vector<InputEvent>> replay_inputs_;
  std::size_t replay_cursor_ = 0;
  std::function<void(const std::string&)> telemetry_;
  mutable std::mutex drive_mutex_;
  DriveMessage drive_;
  sim::Frame last_frame_;
};

// mode=record: scripted driver, or live drive commands when `live` is set.
RecordResult run_record(const SessionConfig& cfg, const Session* live = nullptr);

struct PretrainOutcome {
  pretrain::PretrainResult result;
  double baseline_train_mse = 0.0;  // constant predictor: mean training label
  double baseline_val_mse = 0.0;
  std::size_t samples = 0;
};
// mode=pretrain: loads demo_dir, trains, writes pretrained.weights and
// loss.csv to output_dir.
PretrainOutcome run_pretrain(const SessionConfig& cfg);

}  // namespace idqn::session
