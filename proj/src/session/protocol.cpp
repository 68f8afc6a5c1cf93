#include "idqn/session/protocol.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <json.hpp>

namespace idqn::session {

namespace {

using nlohmann::json;

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string control_name(ControlCommand c) {
  switch (c) {
    case ControlCommand::start: return "start";
    case ControlCommand::pause: return "pause";
    case ControlCommand::toggle: return "toggle";
    case ControlCommand::stop: return "stop";
  }
  return "?";
}

double number_in(const json& j, const char* key, double lo, double hi, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw ProtocolError(std::string("field '") + key + "' must be a number");
  const double v = j[key].get<double>();
  if (!(v >= lo && v <= hi)) {
    throw ProtocolError(std::string("field '") + key + "' out of range");
  }
  return v;
}

}  // namespace

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    const std::uint32_t b0 = bytes[i];
    const std::uint32_t b1 = i + 1 < bytes.size() ? bytes[i + 1] : 0;
    const std::uint32_t b2 = i + 2 < bytes.size() ? bytes[i + 2] : 0;
    const std::uint32_t v = (b0 << 16) | (b1 << 8) | b2;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += i + 1 < bytes.size() ? kAlphabet[(v >> 6) & 63] : '=';
    out += i + 2 < bytes.size() ? kAlphabet[v & 63] : '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::array<int, 256> value;
  value.fill(-1);
  for (int i = 0; i < 64; ++i) value[static_cast<unsigned char>(kAlphabet[i])] = i;
  if (text.size() % 4 != 0) throw ProtocolError("base64 length must be a multiple of 4");
  std::vector<std::uint8_t> out;
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::uint32_t v = 0;
    int pad = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        ++pad;
        v <<= 6;
        continue;
      }
      const int d = value[static_cast<unsigned char>(c)];
      if (d < 0 || pad > 0) throw ProtocolError("invalid base64 character");
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::string telemetry_message(const TelemetrySnapshot& t) {
  json j{{"type", "telemetry"},
         {"mode", t.mode},
         {"step", t.global_step},
         {"episode", t.episode},
         {"episode_step", t.episode_step},
         {"reward", t.reward},
         {"eps", t.epsilon},
         {"paused", t.paused},
         {"counters",
          {{"received", t.suggestions_received},
           {"injected", t.suggestions_injected},
           {"dropped", t.suggestions_dropped}}}};
  j["action"] = t.action ? json(sim::to_string(*t.action)) : json(nullptr);
  if (!t.thumbnail.empty()) {
    j["frame"] = {{"width", t.thumbnail.width},
                  {"height", t.thumbnail.height},
                  {"data", base64_encode(t.thumbnail.pixels)}};
  }
  return j.dump();
}

std::string episode_message(const EpisodeStats& e) {
  return json{{"type", "episode"},
              {"episode", e.episode},
              {"mean_reward", e.mean_reward},
              {"std_reward", e.std_reward},
              {"total_reward", e.total_reward},
              {"steps", e.steps},
              {"end_cause", sim::to_string(e.end_cause)},
              {"suggestions_injected", e.suggestions_injected}}
      .dump();
}

std::string ack_message(std::string_view of, bool accepted, std::string_view detail) {
  json j{{"type", "ack"}, {"of", of}, {"accepted", accepted}};
  if (!detail.empty()) j["detail"] = detail;
  return j.dump();
}

std::string error_message(std::string_view detail) {
  return json{{"type", "error"}, {"detail", detail}}.dump();
}

ClientMessage parse_client_message(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("message must be a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) throw ProtocolError("missing string field 'type'");
  const auto type = j["type"].get<std::string>();
  if (type == "suggest") {
    if (!j.contains("action") || !j["action"].is_string()) {
      throw ProtocolError("suggest needs a string field 'action'");
    }
    const auto action = sim::parse_action(j["action"].get<std::string>());
    if (!action) throw ProtocolError("unknown action '" + j["action"].get<std::string>() + "'");
    SuggestMessage m;
    m.action = *action;
    if (j.contains("ts")) {
      if (!j["ts"].is_number_integer()) throw ProtocolError("field 'ts' must be an integer");
      m.ts_ms = j["ts"].get<std::int64_t>();
    } else {
      m.ts_ms = suggest::now_ms();
    }
    if (j.contains("source")) {
      if (!j["source"].is_string()) throw ProtocolError("field 'source' must be a string");
      try {
        m.source = suggest::parse_source(j["source"].get<std::string>());
      } catch (const ConfigError& e) {
        throw ProtocolError(e.what());
      }
    }
    return m;
  }
  if (type == "control") {
    if (!j.contains("command") || !j["command"].is_string()) {
      throw ProtocolError("control needs a string field 'command'");
    }
    const auto c = j["command"].get<std::string>();
    for (auto cmd : {ControlCommand::start, ControlCommand::pause, ControlCommand::toggle,
                     ControlCommand::stop}) {
      if (c == control_name(cmd)) return ControlMessage{cmd};
    }
    throw ProtocolError("unknown control command '" + c + "'");
  }
  if (type == "drive") {
    DriveMessage d;
    d.throttle = number_in(j, "throttle", 0.0, 1.0, d.throttle);
    d.steering = number_in(j, "steering", -1.0, 1.0, d.steering);
    d.brake = number_in(j, "brake", 0.0, 1.0, d.brake);
    return d;
  }
  throw ProtocolError("unknown message type '" + type + "'");
}

std::string to_json(const ClientMessage& message) {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SuggestMessage>) {
          return json{{"type", "suggest"},
                      {"action", sim::to_string(m.action)},
                      {"ts", m.ts_ms},
                      {"source", suggest::to_string(m.source)}}
              .dump();
        } else if constexpr (std::is_same_v<T, ControlMessage>) {
          return json{{"type", "control"}, {"command", control_name(m.command)}}.dump();
        } else {
          return json{{"type", "drive"},
                      {"throttle", m.throttle},
                      {"steering", m.steering},
                      {"brake", m.brake}}
              .dump();
        }
      },
      message);
}

}  // namespace idqn::session
