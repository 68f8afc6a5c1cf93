#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "idqn/errors.hpp"
#include "idqn/session/metrics.hpp"
#include "idqn/sim/frame.hpp"
#include "idqn/suggest/queue.hpp"

// JSON envelopes exchanged over the session WebSocket. Every message is an
// object with a "type" field.
namespace idqn::session {

class ProtocolError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

// Server -> client, once per environment step (and periodically while paused).
struct TelemetrySnapshot {
  std::string mode;
  std::uint64_t global_step = 0;
  std::size_t episode = 0;
  std::size_t episode_step = 0;
  double reward = 0.0;  // unclipped, last step
  std::optional<sim::ActionId> action;
  double epsilon = 0.0;
  bool paused = false;
  std::uint64_t suggestions_received = 0;
  std::uint64_t suggestions_injected = 0;
  std::uint64_t suggestions_dropped = 0;
  sim::Frame thumbnail;  // single-channel
};

std::string telemetry_message(const TelemetrySnapshot& t);
std::string episode_message(const EpisodeStats& e);
std::string ack_message(std::string_view of, bool accepted, std::string_view detail = {});
std::string error_message(std::string_view detail);

// Client -> server.
struct SuggestMessage {
  sim::ActionId action = sim::ActionId::forward;
  std::int64_t ts_ms = 0;
  suggest::Source source = suggest::Source::ui_button;
  friend bool operator==(const SuggestMessage&, const SuggestMessage&) = default;
};
enum class ControlCommand { start, pause, toggle, stop };
struct ControlMessage {
  ControlCommand command = ControlCommand::toggle;
  friend bool operator==(const ControlMessage&, const ControlMessage&) = default;
};
struct DriveMessage {
  double throttle = 0.35;
  double steering = 0.0;
  double brake = 0.0;
  friend bool operator==(const DriveMessage&, const DriveMessage&) = default;
};
using ClientMessage = std::variant<SuggestMessage, ControlMessage, DriveMessage>;

// Throws ProtocolError naming the problem.
ClientMessage parse_client_message(std::string_view text);
std::string to_json(const ClientMessage& message);

}  // namespace idqn::session
