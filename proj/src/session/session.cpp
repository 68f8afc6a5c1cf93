#include "idqn/session/session.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "idqn/errors.hpp"
#include "idqn/nn/weights_io.hpp"
#include "idqn/pretrain/architecture.hpp"
#include "idqn/suggest/inject.hpp"
#include "idqn/suggest/oracle.hpp"

namespace idqn::session {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

nn::Network<float> fresh_q_network(const SessionConfig& cfg) {
  nn::Network<float> net(pretrain::build_q_network({.width = cfg.network_width}),
                         pretrain::q_input_shape(cfg.agent.history_length));
  nn::Rng rng(splitmix64(cfg.seed ^ 0x51A7E5EEDULL));
  net.initialize(rng);
  return net;
}

sim::SimConfig agent_sim_config(SessionConfig& cfg) {
  cfg.validate();
  if (cfg.sim.render_mode != sim::RenderMode::dqn_gray_84) {
    throw ConfigError("training modes need sim.render_mode = \"dqn_gray_84\"");
  }
  return cfg.sim;
}

bool shapes_match(const nn::Weights<float>& a, const nn::Weights<float>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].value.shape() != b[i].value.shape()) return false;
  }
  return true;
}

}  // namespace

std::uint64_t episode_seed(std::uint64_t seed, std::size_t episode) {
  return splitmix64(splitmix64(seed) + static_cast<std::uint64_t>(episode));
}

void save_input_log(const std::filesystem::path& path, const std::vector<InputEvent>& events) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "step,action,source\n";
  for (const auto& e : events) {
    out << e.step << ',' << sim::to_string(e.action) << ',' << suggest::to_string(e.source) << '\n';
  }
  if (!out) throw ConfigError("write failed: " + path.string());
}

std::vector<InputEvent> load_input_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open input log " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "step,action,source") throw ConfigError(path.string() + ": bad header '" + line + "'");
  std::vector<InputEvent> events;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(row);
    std::stringstream fields(line);
    std::string step, action, source;
    if (!std::getline(fields, step, ',') || !std::getline(fields, action, ',') ||
        !std::getline(fields, source)) {
      throw ConfigError(where + ": expected step,action,source");
    }
    InputEvent e;
    try {
      e.step = std::stoull(step);
    } catch (const std::logic_error&) {
      throw ConfigError(where + ": bad step '" + step + "'");
    }
    const auto a = sim::parse_action(action);
    if (!a) throw ConfigError(where + ": unknown action '" + action + "'");
    e.action = *a;
    e.source = suggest::parse_source(source);
    if (!events.empty() && e.step < events.back().step) {
      throw ConfigError(where + ": steps must not decrease");
    }
    events.push_back(e);
  }
  return events;
}

Session::Session(SessionConfig cfg)
    : cfg_(std::move(cfg)),
      sim_(sim::resolve_map(cfg_.map), agent_sim_config(cfg_)),
      agent_(std::make_unique<agent::Agent>(cfg_.agent, fresh_q_network(cfg_), cfg_.seed)) {
  log_.config_snapshot = to_toml(cfg_);
}

void Session::set_telemetry(std::function<void(const std::string&)> sink) {
  telemetry_ = std::move(sink);
}

void Session::set_replay_inputs(std::vector<InputEvent> events) {
  replay_inputs_ = std::move(events);
  replay_cursor_ = 0;
}

WeightLoad Session::load_initial_weights(const std::filesystem::path& path) {
  const auto file = std::filesystem::is_directory(path) ? path / "q.weights" : path;
  const auto weights = nn::load_weights(file);
  WeightLoad load;
  auto& q = agent_->q_network();
  if (shapes_match(weights, q.weights())) {
    nn::assign_weights(q, weights);
    load.direct = true;
  } else {
    nn::Network<float> pre(pretrain::build_pretrain_network(cfg_.pretrain.architecture),
                           pretrain::pretrain_input_shape());
    if (!shapes_match(weights, pre.weights())) {
      throw ConfigError(file.string() +
                        ": weights match neither the Q-network nor the pre-training network "
                        "(check agent.network_width and pretrain.network_width)");
    }
    nn::assign_weights(pre, weights);
    load.transfer = pretrain::transfer_weights(pre, q);
  }
  agent_->sync_target();
  return load;
}

std::vector<sim::ActionId> Session::probe_actions(std::size_t steps) const {
  sim::CarState state = sim_.reset(episode_seed(cfg_.seed, 0));
  agent::History history(cfg_.agent.history_length);
  history.push(sim_.render(state));
  std::vector<sim::ActionId> actions;
  for (std::size_t i = 0; i < steps; ++i) {
    const auto a = agent::argmax_action(agent_->q_values(history));
    actions.push_back(a);
    const auto out = sim_.step(state, sim::make_action(a, cfg_.sim));
    if (out.done) break;
    state = out.next_state;
    history.push(out.frame);
  }
  return actions;
}

void Session::publish(const std::string& message) const {
  if (telemetry_) telemetry_(message);
}

void Session::publish_telemetry(std::size_t episode_step, double reward,
                                std::optional<sim::ActionId> action, const sim::Frame& frame) {
  if (!telemetry_) return;
  TelemetrySnapshot t;
  t.mode = to_string(cfg_.mode);
  t.global_step = log_.global_step;
  t.episode = log_.episodes.size();
  t.episode_step = episode_step;
  t.reward = reward;
  t.action = action;
  t.epsilon = agent::eps(cfg_.agent.explorer, log_.global_step);
  t.paused = controls_.paused.load();
  t.suggestions_received = queue_.submitted();
  t.suggestions_injected = log_.suggestions_injected;
  t.suggestions_dropped = queue_.dropped();
  if (!frame.empty()) {
    const sim::Frame gray = frame.channels == 1 ? frame : sim::to_gray(frame);
    t.thumbnail = sim::resize_bilinear(gray, cfg_.thumbnail_size, cfg_.thumbnail_size);
  }
  publish(telemetry_message(t));
}

bool Session::wait_while_paused() {
  auto last = std::chrono::steady_clock::now() - std::chrono::seconds(1);
  while (controls_.paused.load() && !controls_.stop.load()) {
    const auto now = std::chrono::steady_clock::now();
    if (now - last >= std::chrono::milliseconds(100)) {
      publish_telemetry(0, 0.0, std::nullopt, last_frame_);
      last = now;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  return !controls_.stop.load();
}

std::size_t Session::inject_suggestions(const sim::Frame& state) {
  std::vector<suggest::Suggestion> batch;
  if (replay_inputs_) {
    const auto& events = *replay_inputs_;
    while (replay_cursor_ < events.size() && events[replay_cursor_].step < log_.global_step) {
      ++replay_cursor_;
    }
    while (replay_cursor_ < events.size() && events[replay_cursor_].step == log_.global_step) {
      const auto& e = events[replay_cursor_++];
      batch.push_back({e.action, 0, e.source});
    }
  } else if (cfg_.mode == Mode::idqn) {
    batch = queue_.drain();
  }
  for (const auto& s : batch) inputs_.push_back({log_.global_step, s.action, s.source});
  const auto n = suggest::apply_suggestions(batch, state, agent_->replay(), cfg_.suggest);
  log_.suggestions_injected += n;
  return n;
}

EpisodeStats Session::run_episode() {
  if (cfg_.mode != Mode::dqn && cfg_.mode != Mode::idqn && cfg_.mode != Mode::replay_eval) {
    throw UsageError("run_episode needs mode dqn, idqn, or replay_eval");
  }
  const std::size_t episode = log_.episodes.size();
  try {
    sim::CarState state = sim_.reset(episode_seed(cfg_.seed, episode));
    sim::Frame frame = sim_.render(state);
    last_frame_ = frame;
    agent_->begin_episode(frame);
    const bool oracle = cfg_.mode == Mode::idqn && cfg_.oracle;
    std::vector<double> rewards;
    std::uint64_t injected = 0;
    sim::EndCause cause = sim::EndCause::none;
    while (true) {
      wait_while_paused();
      const sim::Frame current = agent_->history().snapshot();
      const auto action = agent_->select_action(agent_->history(), log_.global_step);
      if (oracle) {
        if (auto s = suggest::scripted_oracle(state, sim_.map(), cfg_.goal, action, cfg_.oracle_cfg)) {
          queue_.submit(*s);
        }
      }
      auto out = sim_.step(state, sim::make_action(action, cfg_.sim));
      rewards.push_back(out.reward);
      agent_->observe(frame, action, out.reward, out.done, out.frame);
      ++log_.global_step;
      injected += inject_suggestions(current);
      agent_->learn(log_.global_step);
      state = out.next_state;
      frame = std::move(out.frame);
      last_frame_ = frame;
      publish_telemetry(rewards.size(), rewards.back(), action, frame);
      if (out.done) {
        cause = out.cause;
        break;
      }
    }
    EpisodeStats stats = compute_stats(episode, rewards, cause);
    stats.suggestions_injected = injected;
    log_.episodes.push_back(stats);
    log_.suggestions_received = queue_.submitted();
    log_.suggestions_dropped = queue_.dropped();
    publish(episode_message(stats));
    return stats;
  } catch (const ConfigError& e) {
    throw ConfigError("episode " + std::to_string(episode) + ": " + e.what());
  } catch (const UsageError& e) {
    throw UsageError("episode " + std::to_string(episode) + ": " + e.what());
  }
}

const RunLog& Session::run_training() {
  const auto& out = cfg_.output_dir;
  while (log_.episodes.size() < cfg_.max_episodes && !controls_.stop.load()) {
    run_episode();
    save_runlog_csv(out / "runlog.csv", log_);
    save_input_log(out / "inputs.csv", inputs_);
    if (cfg_.checkpoint_every > 0 && log_.episodes.size() % cfg_.checkpoint_every == 0) {
      save_checkpoint(out / "checkpoint");
    }
  }
  std::ofstream summary(out / "summary.csv");
  write_summary_csv(summary, summarize(log_.episodes));
  return log_;
}

std::string Session::handle_client_message(std::string_view text) {
  ClientMessage msg;
  try {
    msg = parse_client_message(text);
  } catch (const ProtocolError& e) {
    return error_message(e.what());
  }
  if (const auto* s = std::get_if<SuggestMessage>(&msg)) {
    const bool room = queue_.submit({s->action, s->ts_ms, s->source});
    const bool consumed = cfg_.mode == Mode::idqn;
    std::string detail = consumed ? "" : "suggestions are only consumed in idqn mode";
    if (!room) detail = "queue full: oldest suggestion dropped";
    return ack_message("suggest", true, detail);
  }
  if (const auto* c = std::get_if<ControlMessage>(&msg)) {
    switch (c->command) {
      case ControlCommand::start: controls_.paused = false; break;
      case ControlCommand::pause: controls_.paused = true; break;
      case ControlCommand::toggle: controls_.paused = !controls_.paused.load(); break;
      case ControlCommand::stop: controls_.stop = true; break;
    }
    return ack_message("control", true, controls_.paused.load() ? "paused" : "running");
  }
  const auto& d = std::get<DriveMessage>(msg);
  {
    std::lock_guard lock(drive_mutex_);
    drive_ = d;
  }
  return ack_message("drive", true);
}

DriveMessage Session::drive_command() const {
  std::lock_guard lock(drive_mutex_);
  return drive_;
}

RecordResult run_record(const SessionConfig& cfg, const Session* live) {
  const sim::Simulator simulator(sim::resolve_map(cfg.map), cfg.sim);
  DriverConfig dc;
  dc.gain = cfg.driver_gain;
  dc.max_offset = cfg.driver_offset;
  dc.hold = cfg.driver_hold;
  dc.throttle = cfg.sim.throttle;
  ScriptedDriver driver(simulator.map(), cfg.goal, dc, splitmix64(cfg.seed ^ 0xD21DEULL));
  DriveSource source;
  if (live != nullptr) {
    source = [live](const sim::CarState&) {
      const auto d = live->drive_command();
      return pretrain::DemoLabel{d.throttle, d.steering, d.brake};
    };
  } else {
    source = [&driver](const sim::CarState& s) { return driver(s); };
  }
  return record_demo(simulator, source, cfg.record_ticks, cfg.demo_dir, cfg.seed,
                     [&driver] { driver.new_episode(); });
}

PretrainOutcome run_pretrain(const SessionConfig& cfg) {
  PretrainOutcome outcome;
  auto dataset = pretrain::load_demos(cfg.demo_dir);
  pretrain::assign_split(dataset, cfg.validation_fraction, cfg.seed);
  outcome.samples = dataset.samples.size();

  std::array<double, 3> mean{};
  for (auto i : dataset.train) {
    const auto& l = dataset.samples[i].label;
    mean[0] += l.throttle;
    mean[1] += l.steering;
    mean[2] += l.brake;
  }
  for (auto& m : mean) m /= static_cast<double>(std::max<std::size_t>(1, dataset.train.size()));
  auto baseline = [&](const std::vector<std::size_t>& idx) {
    if (idx.empty()) return std::nan("");
    double sum = 0.0;
    for (auto i : idx) {
      const auto& l = dataset.samples[i].label;
      sum += (l.throttle - mean[0]) * (l.throttle - mean[0]) +
             (l.steering - mean[1]) * (l.steering - mean[1]) +
             (l.brake - mean[2]) * (l.brake - mean[2]);
    }
    return sum / (3.0 * static_cast<double>(idx.size()));
  };
  outcome.baseline_train_mse = baseline(dataset.train);
  outcome.baseline_val_mse = baseline(dataset.validation);

  nn::Rng rng(splitmix64(cfg.seed ^ 0x9E7A1ULL));
  outcome.result = pretrain::train_supervised(dataset, cfg.pretrain, rng);
  std::filesystem::create_directories(cfg.output_dir);
  nn::save_weights(cfg.output_dir / "pretrained.weights", outcome.result.network.weights());
  pretrain::write_loss_csv(cfg.output_dir / "loss.csv", outcome.result.history);
  return outcome;
}

}  // namespace idqn::session
