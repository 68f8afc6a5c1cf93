#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <thread>

#include "idqn/errors.hpp"
#include "idqn/session/config.hpp"
#include "idqn/session/metrics.hpp"
#include "idqn/session/server.hpp"
#include "idqn/session/session.hpp"

using namespace idqn;
using namespace idqn::session;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> map;
  std::optional<std::string> load_weights;
  std::optional<std::size_t> episodes;
  std::optional<std::uint16_t> port;
  std::optional<std::string> output;
  std::optional<std::string> input_log;
  std::optional<std::string> demo_dir;
  std::string resume;
  bool live = false;
};

void apply(const Options& o, SessionConfig& c) {
  if (o.seed) c.seed = *o.seed;
  if (o.map) c.map = *o.map;
  if (o.load_weights) c.load_weights = *o.load_weights;
  if (o.episodes) c.max_episodes = *o.episodes;
  if (o.port) c.port = *o.port;
  if (o.output) c.output_dir = *o.output;
  if (o.input_log) c.input_log = *o.input_log;
  if (o.demo_dir) c.demo_dir = *o.demo_dir;
}

SessionConfig make_config(const Options& o, Mode mode) {
  SessionConfig c = o.config.empty() ? SessionConfig{} : load_config(o.config);
  c.mode = mode;
  apply(o, c);
  c.validate();
  return c;
}

std::unique_ptr<TelemetryServer> serve(Session& s) {
  if (s.config().port == 0) return nullptr;
  auto server = std::make_unique<TelemetryServer>(
      s.config().port, [&s](std::string_view text) { return s.handle_client_message(text); });
  std::fprintf(stderr, "telemetry: ws://127.0.0.1:%u\n", unsigned(server->port()));
  return server;
}

int train(const Options& o, Mode mode) {
  std::unique_ptr<Session> s;
  if (!o.resume.empty()) {
    s = Session::resume(o.resume, [&](SessionConfig& c) { apply(o, c); });
    std::fprintf(stderr, "resumed at episode %zu, step %llu\n", s->next_episode(),
                 static_cast<unsigned long long>(s->global_step()));
  } else {
    s = std::make_unique<Session>(make_config(o, mode));
    if (!s->config().load_weights.empty()) {
      const auto w = s->load_initial_weights(s->config().load_weights);
      std::fprintf(stderr, "weights: %s (%zu copied, %zu adapted, %zu fresh layers)\n",
                   w.direct ? "direct" : "transferred", w.transfer.copied.size(),
                   w.transfer.adapted.size(), w.transfer.fresh.size());
    }
    if (mode == Mode::replay_eval) {
      if (s->config().input_log.empty()) throw ConfigError("replay_eval needs --input-log");
      s->set_replay_inputs(load_input_log(s->config().input_log));
    }
  }
  auto server = serve(*s);
  s->set_telemetry([&, raw = server.get()](const std::string& m) {
    if (raw) raw->broadcast(m);
    if (m.find("\"type\":\"episode\"") != std::string::npos) std::cout << m << '\n' << std::flush;
  });
  s->run_training();
  std::cout << summary_table(summarize(s->log().episodes));
  std::fprintf(stderr, "outputs in %s\n", s->config().output_dir.string().c_str());
  return 0;
}

int record(const Options& o) {
  const auto cfg = make_config(o, Mode::record);
  std::unique_ptr<Session> live;
  std::unique_ptr<TelemetryServer> server;
  if (o.live) {
    if (cfg.port == 0) throw ConfigError("--live needs --port");
    auto scfg = cfg;
    scfg.sim.render_mode = sim::RenderMode::dqn_gray_84;
    live = std::make_unique<Session>(scfg);
    server = serve(*live);
  }
  const auto r = run_record(cfg, live.get());
  std::printf("recorded %zu frames over %zu episodes to %s\n", r.frames, r.episodes,
              cfg.demo_dir.string().c_str());
  return 0;
}

int pretrain_mode(const Options& o) {
  const auto out = run_pretrain(make_config(o, Mode::pretrain));
  const auto& last = out.result.history.back();
  std::printf("samples %zu, epochs %zu\n", out.samples, out.result.history.size());
  std::printf("train MSE %.5f (constant baseline %.5f)\n", last.train_loss,
              out.baseline_train_mse);
  std::printf("validation MSE %.5f (constant baseline %.5f)\n", last.val_loss,
              out.baseline_val_mse);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interactive DQN driving lab"};
  app.require_subcommand(1);
  Options o;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "TOML configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Run seed");
    sub->add_option("--map", o.map, "Built-in map name or .map file");
    sub->add_option("--output", o.output, "Output directory");
  };
  const auto training = [&](CLI::App* sub) {
    common(sub);
    sub->add_option("--load-weights", o.load_weights, "Pre-trained or Q-network weights");
    sub->add_option("--episodes", o.episodes, "Number of episodes");
    sub->add_option("--port", o.port, "WebSocket port (0 disables)");
    sub->add_option("--resume", o.resume, "Checkpoint directory")->check(CLI::ExistingDirectory);
  };
  auto* dqn = app.add_subcommand("dqn", "Train without suggestions");
  training(dqn);
  auto* idqn = app.add_subcommand("idqn", "Train with trainer suggestions");
  training(idqn);
  auto* replay = app.add_subcommand("replay_eval", "Re-run a training run from its input log");
  training(replay);
  replay->add_option("--input-log", o.input_log, "inputs.csv of the recorded run");
  auto* rec = app.add_subcommand("record", "Record demonstration frames and labels");
  common(rec);
  rec->add_option("--demo-dir", o.demo_dir, "Destination directory");
  rec->add_option("--port", o.port, "WebSocket port for --live");
  rec->add_flag("--live", o.live, "Drive from WebSocket drive messages");
  auto* pre = app.add_subcommand("pretrain", "Supervised pre-training on demonstrations");
  common(pre);
  pre->add_option("--demo-dir", o.demo_dir, "Demonstration directory");
  auto* cfg = app.add_subcommand("config", "Print the effective configuration as TOML");
  common(cfg);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*dqn) return train(o, Mode::dqn);
    if (*idqn) return train(o, Mode::idqn);
    if (*replay) return train(o, Mode::replay_eval);
    if (*rec) return record(o);
    if (*pre) return pretrain_mode(o);
    if (*cfg) {
      SessionConfig c = o.config.empty() ? SessionConfig{} : load_config(o.config);
      apply(o, c);
      std::cout << to_toml(c);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
