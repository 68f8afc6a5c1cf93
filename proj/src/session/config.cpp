#include "idqn/session/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <type_traits>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "idqn/errors.hpp"

namespace idqn::session {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string render_mode_name(sim::RenderMode m) {
  return m == sim::RenderMode::dqn_gray_84 ? "dqn_gray_84" : "demo_rgb_64";
}

sim::RenderMode parse_render_mode(std::string_view s) {
  if (s == "dqn_gray_84") return sim::RenderMode::dqn_gray_84;
  if (s == "demo_rgb_64") return sim::RenderMode::demo_rgb_64;
  throw ConfigError("unknown render mode '" + std::string(s) + "'");
}

// Calls f(section, key, field) for every configurable field.
template <typename C, typename F>
void for_each_field(C& c, F&& f) {
  f("session", "mode", c.mode);
  f("session", "map", c.map);
  f("session", "seed", c.seed);
  f("session", "max_episodes", c.max_episodes);
  f("session", "checkpoint_every", c.checkpoint_every);
  f("session", "port", c.port);
  f("session", "output_dir", c.output_dir);
  f("session", "load_weights", c.load_weights);
  f("session", "input_log", c.input_log);
  f("session", "thumbnail_size", c.thumbnail_size);

  f("agent", "gamma", c.agent.gamma);
  f("agent", "learning_rate", c.agent.learning_rate);
  f("agent", "momentum", c.agent.momentum);
  f("agent", "weight_decay", c.agent.weight_decay);
  f("agent", "batch_size", c.agent.batch_size);
  f("agent", "train_start", c.agent.train_start);
  f("agent", "train_every", c.agent.train_every);
  f("agent", "target_sync_every", c.agent.target_sync_every);
  f("agent", "clip_mode", c.agent.clip_mode);
  f("agent", "replay_capacity", c.agent.replay_capacity);
  f("agent", "history_length", c.agent.history_length);
  f("agent", "eps_max", c.agent.explorer.eps_max);
  f("agent", "eps_min", c.agent.explorer.eps_min);
  f("agent", "eps_anneal_steps", c.agent.explorer.anneal_steps);
  f("agent", "network_width", c.network_width);

  f("sim", "dt", c.sim.dt);
  f("sim", "throttle", c.sim.throttle);
  f("sim", "steer_left", c.sim.steer_left);
  f("sim", "steer_right", c.sim.steer_right);
  f("sim", "k_steer", c.sim.k_steer);
  f("sim", "k_throttle", c.sim.k_throttle);
  f("sim", "k_drag", c.sim.k_drag);
  f("sim", "k_brake", c.sim.k_brake);
  f("sim", "car_radius", c.sim.car_radius);
  f("sim", "step_limit", c.sim.step_limit);
  f("sim", "w_distance", c.sim.w_distance);
  f("sim", "w_angle", c.sim.w_angle);
  f("sim", "w_speed", c.sim.w_speed);
  f("sim", "theta_max", c.sim.theta_max);
  f("sim", "p_terminal", c.sim.p_terminal);
  f("sim", "jitter", c.sim.jitter);
  f("sim", "jitter_lateral", c.sim.jitter_lateral);
  f("sim", "jitter_heading_deg", c.sim.jitter_heading_deg);
  f("sim", "render_mode", c.sim.render_mode);
  f("sim", "camera_height", c.sim.camera.height);
  f("sim", "camera_fov_deg", c.sim.camera.fov_deg);
  f("sim", "camera_horizon", c.sim.camera.horizon);
  f("sim", "camera_max_distance", c.sim.camera.max_distance);
  f("sim", "camera_obstacle_height", c.sim.camera.obstacle_height);
  f("sim", "camera_marking_half_width", c.sim.camera.marking_half_width);
  f("sim", "camera_supersample", c.sim.camera.supersample);

  f("suggest", "reward_value", c.suggest.reward_value);
  f("suggest", "repeat", c.suggest.repeat);
  f("suggest", "oracle", c.oracle);
  f("suggest", "goal", c.goal);
  f("suggest", "trigger_radius", c.oracle_cfg.trigger_radius);
  f("suggest", "lookahead", c.oracle_cfg.lookahead);
  f("suggest", "deadband", c.oracle_cfg.deadband);

  f("pretrain", "batch_size", c.pretrain.batch_size);
  f("pretrain", "learning_rate", c.pretrain.learning_rate);
  f("pretrain", "weight_decay", c.pretrain.weight_decay);
  f("pretrain", "epochs", c.pretrain.epochs);
  f("pretrain", "augment", c.pretrain.augment);
  f("pretrain", "crop_fraction", c.pretrain.augmentation.crop_fraction);
  f("pretrain", "shift_sigma", c.pretrain.augmentation.shift_sigma);
  f("pretrain", "rot_sigma", c.pretrain.augmentation.rot_sigma);
  f("pretrain", "steer_correction", c.pretrain.augmentation.steer_correction);
  f("pretrain", "network_width", c.pretrain.architecture.width);
  f("pretrain", "stop_at_train_loss", c.pretrain.stop_at_train_loss);
  f("pretrain", "demo_dir", c.demo_dir);
  f("pretrain", "validation_fraction", c.validation_fraction);
  f("pretrain", "record_ticks", c.record_ticks);
  f("pretrain", "driver_gain", c.driver_gain);
  f("pretrain", "driver_offset", c.driver_offset);
  f("pretrain", "driver_hold", c.driver_hold);
}

constexpr const char* kSections[] = {"session", "agent", "sim", "suggest", "pretrain"};

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

struct Emitter {
  std::map<std::string, std::string>& sections;

  template <typename T>
  void operator()(const char* section, const char* key, const T& v) const {
    sections[section] += std::string(key) + " = " + value(v) + "\n";
  }

  template <typename T>
  static std::string value(const T& v) {
    if constexpr (std::is_same_v<T, bool>) {
      return v ? "true" : "false";
    } else if constexpr (std::is_integral_v<T>) {
      return std::to_string(v);
    } else if constexpr (std::is_floating_point_v<T>) {
      return format_double(v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      return quote(v);
    } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
      return quote(v.generic_string());
    } else if constexpr (std::is_same_v<T, std::optional<double>>) {
      // 0 disables the threshold.
      return format_double(v.value_or(0.0));
    } else if constexpr (std::is_same_v<T, Mode>) {
      return quote(to_string(v));
    } else if constexpr (std::is_same_v<T, agent::ClipMode>) {
      return quote(agent::to_string(v));
    } else if constexpr (std::is_same_v<T, sim::RenderMode>) {
      return quote(render_mode_name(v));
    } else {
      static_assert(std::is_same_v<T, suggest::Turn>);
      return quote(suggest::to_string(v));
    }
  }
};

struct Reader {
  const toml::table& root;
  const std::string& source;
  std::set<std::string>& known;

  [[noreturn]] void fail(const std::string& where, const std::string& what) const {
    throw ConfigError(source + ": " + where + ": " + what);
  }

  template <typename T>
  void operator()(const char* section, const char* key, T& field) const {
    const std::string where = std::string("[") + section + "]." + key;
    known.insert(where);
    const auto* tbl = root[section].as_table();
    if (!tbl) return;
    const toml::node* node = tbl->get(key);
    if (!node) return;
    read(*node, where, field);
  }

  template <typename T>
  void read(const toml::node& node, const std::string& where, T& field) const {
    if constexpr (std::is_same_v<T, bool>) {
      const auto v = node.value<bool>();
      if (!node.is_boolean() || !v) fail(where, "expected true or false");
      field = *v;
    } else if constexpr (std::is_integral_v<T>) {
      if (!node.is_integer()) fail(where, "expected an integer");
      const auto v = *node.value<std::int64_t>();
      if (v < 0 && std::is_unsigned_v<T>) fail(where, "must be >= 0");
      if (static_cast<std::uint64_t>(std::max<std::int64_t>(v, 0)) >
          static_cast<std::uint64_t>(std::numeric_limits<T>::max())) {
        fail(where, "out of range");
      }
      field = static_cast<T>(v);
    } else if constexpr (std::is_floating_point_v<T> ||
                         std::is_same_v<T, std::optional<double>>) {
      if (!node.is_number()) fail(where, "expected a number");
      const double v = *node.value<double>();
      if constexpr (std::is_same_v<T, std::optional<double>>) {
        field = v > 0.0 ? std::optional<double>(v) : std::nullopt;
      } else {
        field = v;
      }
    } else {
      if (!node.is_string()) fail(where, "expected a string");
      const std::string s = *node.value<std::string>();
      try {
        if constexpr (std::is_same_v<T, std::string>) {
          field = s;
        } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
          field = s;
        } else if constexpr (std::is_same_v<T, Mode>) {
          field = parse_mode(s);
        } else if constexpr (std::is_same_v<T, agent::ClipMode>) {
          field = agent::parse_clip_mode(s);
        } else if constexpr (std::is_same_v<T, sim::RenderMode>) {
          field = parse_render_mode(s);
        } else {
          static_assert(std::is_same_v<T, suggest::Turn>);
          field = suggest::parse_turn(s);
        }
      } catch (const ConfigError& e) {
        fail(where, e.what());
      }
    }
  }
};

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::dqn: return "dqn";
    case Mode::idqn: return "idqn";
    case Mode::pretrain: return "pretrain";
    case Mode::record: return "record";
    case Mode::replay_eval: return "replay_eval";
  }
  return "?";
}

Mode parse_mode(std::string_view text) {
  const auto s = lower(text);
  for (Mode m : {Mode::dqn, Mode::idqn, Mode::pretrain, Mode::record, Mode::replay_eval}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown mode '" + std::string(text) +
                    "' (expected dqn, idqn, pretrain, record, replay_eval)");
}

void SessionConfig::validate() const {
  agent.validate();
  sim.validate();
  suggest.validate();
  pretrain.validate();
  if (map.empty()) throw ConfigError("session map must be set");
  if (max_episodes == 0) throw ConfigError("session max_episodes must be > 0");
  if (thumbnail_size == 0) throw ConfigError("session thumbnail_size must be > 0");
  if (!(network_width > 0.0)) throw ConfigError("agent network_width must be > 0");
  if (!(oracle_cfg.trigger_radius > 0.0) || !(oracle_cfg.lookahead > 0.0) ||
      !(oracle_cfg.deadband >= 0.0)) {
    throw ConfigError("suggest oracle geometry must be positive");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("pretrain validation_fraction must be in [0, 1)");
  }
  if (record_ticks == 0) throw ConfigError("pretrain record_ticks must be > 0");
  if (driver_hold == 0) throw ConfigError("pretrain driver_hold must be > 0");
  if (!(driver_gain > 0.0) || !(driver_offset >= 0.0)) {
    throw ConfigError("pretrain driver_gain must be > 0 and driver_offset >= 0");
  }
  if (mode == Mode::replay_eval && input_log.empty()) {
    throw ConfigError("replay_eval needs session.input_log");
  }
}

bool operator==(const SessionConfig& a, const SessionConfig& b) { return to_toml(a) == to_toml(b); }

SessionConfig parse_config(std::string_view text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  SessionConfig cfg;
  std::set<std::string> known;
  for_each_field(cfg, Reader{root, source, known});
  for (const auto& [section, node] : root) {
    const std::string name(section.str());
    const auto* tbl = node.as_table();
    if (!tbl || std::find(std::begin(kSections), std::end(kSections), name) == std::end(kSections)) {
      throw ConfigError(source + ": unknown section '" + name + "'");
    }
    for (const auto& [key, value] : *tbl) {
      const std::string where = "[" + name + "]." + std::string(key.str());
      if (!known.count(where)) throw ConfigError(source + ": unknown key " + where);
    }
  }
  cfg.validate();
  return cfg;
}

SessionConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string());
}

std::string to_toml(const SessionConfig& cfg) {
  std::map<std::string, std::string> sections;
  for_each_field(cfg, Emitter{sections});
  std::string out;
  for (const char* s : kSections) {
    if (!out.empty()) out += "\n";
    out += std::string("[") + s + "]\n" + sections[s];
  }
  return out;
}

}  // namespace idqn::session
