#include <doctest.h>
#include <json.hpp>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "idqn/errors.hpp"
#include "idqn/pretrain/architecture.hpp"
#include "idqn/nn/weights_io.hpp"
#include "idqn/session/config.hpp"
#include "idqn/session/metrics.hpp"
#include "idqn/session/protocol.hpp"
#include "idqn/session/server.hpp"
#include "idqn/session/session.hpp"

using namespace idqn;
using namespace idqn::session;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("idqn_session_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Small, fast training setup.
SessionConfig small_config(Mode mode, const std::string& name) {
  SessionConfig c;
  c.mode = mode;
  c.map = "intersection";
  c.seed = 7;
  c.max_episodes = 4;
  c.output_dir = temp_dir(name);
  c.network_width = 0.125;
  c.agent.replay_capacity = 2000;
  c.agent.train_start = 20;
  c.agent.train_every = 2;
  c.agent.target_sync_every = 25;
  c.agent.batch_size = 8;
  c.agent.explorer.anneal_steps = 100;
  c.sim.step_limit = 40;
  return c;
}

std::string csv_of(const RunLog& log) {
  std::ostringstream out;
  write_runlog_csv(out, log);
  return out.str();
}

std::set<std::string> keys_of(const std::string& toml) {
  std::set<std::string> keys;
  std::istringstream in(toml);
  std::string section;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '[') {
      section = line;
      continue;
    }
    keys.insert(section + line.substr(0, line.find(' ')));
  }
  return keys;
}

}  // namespace

TEST_CASE("episode statistics") {
  const std::vector<double> r{1.0, -1.0, 0.0};
  const auto s = compute_stats(0, r, sim::EndCause::collision);
  CHECK(s.mean_reward == doctest::Approx(0.0));
  CHECK(s.std_reward == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
  CHECK(s.std_reward == doctest::Approx(0.8165).epsilon(1e-4));
  CHECK(s.total_reward == 0.0);
  CHECK(s.steps == 3);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-10.0, 3.0);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> xs(1 + rng() % 400);
    for (auto& x : xs) x = d(rng);
    const auto e = compute_stats(1, xs, sim::EndCause::none);
    CHECK(std::abs(e.total_reward - e.mean_reward * double(e.steps)) < 1e-9);
  }
  CHECK_THROWS_AS(compute_stats(0, {}, sim::EndCause::none), UsageError);
}

TEST_CASE("summaries partition episodes into windows") {
  std::vector<EpisodeStats> eps;
  for (std::size_t i = 0; i < 12; ++i) {
    EpisodeStats e;
    e.episode = i;
    e.mean_reward = 1.5;
    e.total_reward = 30.0;
    e.steps = 20;
    eps.push_back(e);
  }
  const auto rows = summarize(eps);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].first_episode == 0);
  CHECK(rows[0].last_episode == 4);
  CHECK(rows[1].first_episode == 5);
  CHECK(rows[2].first_episode == 10);
  CHECK(rows[2].last_episode == 11);
  for (const auto& w : rows) {
    CHECK(w.mean_reward_std == 0.0);
    CHECK(w.total_reward_std == 0.0);
    CHECK(w.steps_std == 0.0);
  }
  EpisodeStats one;
  one.mean_reward = 0.7;
  one.total_reward = 7.0;
  one.steps = 10;
  const auto single = summarize({one});
  REQUIRE(single.size() == 1);
  CHECK(single[0].mean_reward_mean == 0.7);
  CHECK(single[0].total_reward_mean == 7.0);
  CHECK(single[0].steps_mean == 10.0);
  CHECK(summary_table(rows).find("10-11") != std::string::npos);
}

TEST_CASE("run log CSV round-trips exactly") {
  RunLog log;
  for (std::size_t i = 0; i < 3; ++i) {
    EpisodeStats e = compute_stats(i, std::vector<double>{0.1 * double(i), -1.0 / 3.0},
                                   sim::EndCause::out_of_bounds);
    e.suggestions_injected = i;
    log.episodes.push_back(e);
  }
  std::stringstream io;
  write_runlog_csv(io, log);
  CHECK(io.str().rfind("episode,mean_reward,std_reward,total_reward,steps,end_cause,"
                       "suggestions_injected\n", 0) == 0);
  CHECK(read_runlog_csv(io) == log.episodes);
}

TEST_CASE("config: TOML round-trip, strict keys, shipped files") {
  const SessionConfig defaults;
  CHECK(parse_config(to_toml(defaults)) == defaults);
  SessionConfig c = defaults;
  c.mode = Mode::idqn;
  c.agent.explorer.anneal_steps = 1234;
  c.sim.camera.fov_deg = 75.0;
  c.pretrain.stop_at_train_loss = 0.1;
  c.goal = suggest::Turn::right;
  const auto back = parse_config(to_toml(c));
  CHECK(back == c);
  CHECK(back.pretrain.stop_at_train_loss == 0.1);

  CHECK_THROWS_WITH_AS(parse_config("[agent]\ngamma_x = 1.0\n", "t.toml"),
                       "t.toml: unknown key [agent].gamma_x", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[agent]\nbatch_size = \"32\"\n", "t.toml"),
                       "t.toml: [agent].batch_size: expected an integer", ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[extra]\nx = 1\n", "t.toml"),
                       "t.toml: unknown section 'extra'", ConfigError);
  CHECK_THROWS_AS(parse_config("[session]\nmode = \"train\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[agent]\ngamma = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[session\n"), ConfigError);

  const auto all = keys_of(to_toml(defaults));
  for (const char* name : {"desk.toml", "full.toml"}) {
    const auto path = std::filesystem::path(IDQN_SOURCE_DIR) / "configs" / name;
    CAPTURE(name);
    const auto loaded = load_config(path);
    std::ifstream in(path);
    std::stringstream text;
    text << in.rdbuf();
    CHECK(keys_of(text.str()) == all);
  }
  const auto full = load_config(std::filesystem::path(IDQN_SOURCE_DIR) / "configs/full.toml");
  CHECK(full.agent.replay_capacity == 500000);
  CHECK(full.agent.learning_rate == 0.001);
  CHECK(full.pretrain.batch_size == 128);
  CHECK(full.network_width == 1.0);
}

TEST_CASE("protocol: envelopes and errors") {
  const std::vector<std::uint8_t> bytes{0, 1, 2, 250, 251, 252, 253};
  for (std::size_t n = 0; n <= bytes.size(); ++n) {
    const std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + std::ptrdiff_t(n));
    CHECK(base64_decode(base64_encode(part)) == part);
  }
  CHECK(base64_encode({'M', 'a', 'n'}) == "TWFu");
  CHECK_THROWS_AS(base64_decode("abc"), ProtocolError);

  const auto m = parse_client_message(R"({"type":"suggest","action":"LEFT","ts":12})");
  REQUIRE(std::holds_alternative<SuggestMessage>(m));
  CHECK(std::get<SuggestMessage>(m).action == sim::ActionId::left);
  CHECK(std::get<SuggestMessage>(m).ts_ms == 12);
  CHECK(parse_client_message(to_json(m)) == m);
  const auto c = parse_client_message(R"({"type":"control","command":"pause"})");
  CHECK(std::get<ControlMessage>(c).command == ControlCommand::pause);
  const auto d = parse_client_message(R"({"type":"drive","steering":-0.5})");
  CHECK(std::get<DriveMessage>(d).steering == -0.5);
  CHECK(std::get<DriveMessage>(d).throttle == 0.35);
  for (const char* bad : {"nope", "[]", R"({"action":"LEFT"})", R"({"type":"suggest"})",
                          R"({"type":"suggest","action":"BACK"})",
                          R"({"type":"control","command":"jump"})",
                          R"({"type":"drive","steering":3})", R"({"type":"teleport"})"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_client_message(bad), ProtocolError);
  }

  TelemetrySnapshot t;
  t.mode = "idqn";
  t.global_step = 5;
  t.suggestions_injected = 2;
  t.thumbnail = sim::Frame(2, 1, 1, 9);
  const auto j = nlohmann::json::parse(telemetry_message(t));
  CHECK(j["type"] == "telemetry");
  CHECK(j["step"] == 5);
  CHECK(j["counters"]["injected"] == 2);
  CHECK(j["frame"]["width"] == 2);
  CHECK(base64_decode(j["frame"]["data"].get<std::string>()) == t.thumbnail.pixels);
}

TEST_CASE("run_episode: a collision at step 1 is a one-step episode") {
  auto map = sim::straight_map();
  map.obstacles.push_back({{4.0, -2.0}, {6.0, 2.0}});
  const auto dir = temp_dir("collision_map");
  sim::save_map(dir / "blocked.map", map);
  auto cfg = small_config(Mode::dqn, "collision");
  cfg.map = (dir / "blocked.map").string();
  cfg.sim.jitter = false;
  Session s(cfg);
  const auto stats = s.run_episode();
  CHECK(stats.steps == 1);
  CHECK(stats.end_cause == sim::EndCause::collision);
  CHECK(stats.total_reward == stats.mean_reward);
  CHECK(stats.total_reward < 0.0);
  CHECK(s.global_step() == 1);
}

TEST_CASE("modes: dqn never drains suggestions; idqn without oracle equals dqn") {
  auto cfg = small_config(Mode::dqn, "dqn_mode");
  Session dqn(cfg);
  dqn.queue().submit({sim::ActionId::left, 0, suggest::Source::ui_button});
  dqn.run_training();
  CHECK(dqn.queue().size() == 1);
  CHECK(dqn.log().suggestions_injected == 0);
  CHECK(dqn.agent().replay().suggested_pushed() == 0);

  auto icfg = small_config(Mode::idqn, "idqn_no_oracle");
  icfg.oracle = false;
  Session idqn(icfg);
  idqn.run_training();
  CHECK(csv_of(idqn.log()) == csv_of(dqn.log()));

  SUBCASE("with the oracle, suggestions reach replay and the log") {
    auto ocfg = small_config(Mode::idqn, "idqn_oracle");
    ocfg.sim.step_limit = 150;
    ocfg.max_episodes = 3;
    Session o(ocfg);
    o.run_training();
    std::uint64_t per_episode = 0;
    for (const auto& e : o.log().episodes) per_episode += e.suggestions_injected;
    CHECK(per_episode == o.log().suggestions_injected);
    CHECK(o.agent().replay().suggested_pushed() == o.log().suggestions_injected);
    CHECK(o.input_log().size() == o.log().suggestions_injected);
  }
}

TEST_CASE("determinism: same seed and config give identical run logs") {
  auto cfg = small_config(Mode::idqn, "det_a");
  cfg.sim.step_limit = 120;
  Session a(cfg);
  a.run_training();
  cfg.output_dir = temp_dir("det_b");
  Session b(cfg);
  b.run_training();
  CHECK(csv_of(a.log()) == csv_of(b.log()));
  CHECK(a.input_log() == b.input_log());
  cfg.seed = 8;
  cfg.output_dir = temp_dir("det_c");
  Session c(cfg);
  c.run_training();
  CHECK(csv_of(a.log()) != csv_of(c.log()));
  // Files written per episode.
  CHECK(load_runlog_csv(cfg.output_dir / "runlog.csv") == c.log().episodes);
  CHECK(std::filesystem::exists(cfg.output_dir / "summary.csv"));
}

TEST_CASE("checkpoint: resume continues with an identical log tail") {
  auto cfg = small_config(Mode::idqn, "ckpt_full");
  cfg.sim.step_limit = 80;
  cfg.max_episodes = 5;
  Session full(cfg);
  full.run_training();

  cfg.output_dir = temp_dir("ckpt_part");
  cfg.max_episodes = 2;
  cfg.checkpoint_every = 2;
  {
    Session part(cfg);
    part.run_training();
  }
  const auto resumed = Session::resume(cfg.output_dir / "checkpoint",
                                       [](SessionConfig& c) { c.max_episodes = 5; });
  CHECK(resumed->next_episode() == 2);
  resumed->run_training();
  CHECK(csv_of(resumed->log()) == csv_of(full.log()));
  CHECK(resumed->global_step() == full.global_step());
  CHECK(resumed->input_log() == full.input_log());
  CHECK(resumed->agent().replay() == full.agent().replay());
  CHECK(resumed->agent().q_network().weights() == full.agent().q_network().weights());
  CHECK_THROWS_AS(Session::resume(cfg.output_dir / "missing"), ConfigError);
}

TEST_CASE("replay_eval: a live run is reproduced from its input log") {
  auto cfg = small_config(Mode::idqn, "live");
  cfg.oracle = false;
  cfg.sim.step_limit = 100;
  Session live(cfg);
  std::atomic<bool> done{false};
  std::thread trainer_input([&] {
    std::mt19937_64 rng(5);
    while (!done) {
      live.handle_client_message(R"({"type":"suggest","action":")" +
                                 sim::to_string(static_cast<sim::ActionId>(rng() % 3)) + "\"}");
      std::this_thread::sleep_for(std::chrono::microseconds(rng() % 3000));
    }
  });
  live.run_training();
  done = true;
  trainer_input.join();
  REQUIRE(live.log().suggestions_injected > 0);
  save_input_log(cfg.output_dir / "inputs_copy.csv", live.input_log());

  auto rcfg = cfg;
  rcfg.mode = Mode::replay_eval;
  rcfg.input_log = cfg.output_dir / "inputs_copy.csv";
  rcfg.output_dir = temp_dir("replayed");
  Session replayed(rcfg);
  replayed.set_replay_inputs(load_input_log(rcfg.input_log));
  replayed.run_training();
  CHECK(csv_of(replayed.log()) == csv_of(live.log()));
  CHECK(replayed.input_log() == live.input_log());
}

TEST_CASE("pre-trained weights initialize the Q-network") {
  auto cfg = small_config(Mode::dqn, "weights");
  cfg.pretrain.architecture.width = cfg.network_width;
  Session fresh(cfg);
  nn::Network<float> pre(pretrain::build_pretrain_network(cfg.pretrain.architecture),
                         pretrain::pretrain_input_shape());
  nn::Rng rng(77);
  pre.initialize(rng);
  const auto path = cfg.output_dir / "pre.weights";
  nn::save_weights(path, pre.weights());

  Session loaded(cfg);
  const auto report = loaded.load_initial_weights(path);
  CHECK_FALSE(report.direct);
  CHECK(report.transfer.fresh.empty());
  CHECK(report.transfer.adapted.size() == 1);
  CHECK(loaded.agent().target_network().weights() == loaded.agent().q_network().weights());
  CHECK(loaded.probe_actions(60) != fresh.probe_actions(60));

  nn::save_weights(cfg.output_dir / "q.weights", loaded.agent().q_network().weights());
  Session direct(cfg);
  CHECK(direct.load_initial_weights(cfg.output_dir / "q.weights").direct);
  CHECK(direct.probe_actions(60) == loaded.probe_actions(60));

  nn::Network<float> other({nn::LayerSpec::flatten(), nn::LayerSpec::dense(3)}, {4});
  nn::save_weights(cfg.output_dir / "bad.weights", other.weights());
  CHECK_THROWS_AS(direct.load_initial_weights(cfg.output_dir / "bad.weights"), ConfigError);
}

TEST_CASE("record: one frame and label per tick; centreline driver on a straight road") {
  SessionConfig cfg;
  cfg.mode = Mode::record;
  cfg.map = "straight";
  cfg.sim.jitter = false;
  cfg.driver_offset = 0.0;
  cfg.record_ticks = 1500;
  cfg.demo_dir = temp_dir("record") / "demos";
  const auto r = run_record(cfg);
  CHECK(r.frames == 1500);
  const auto data = pretrain::load_demos(cfg.demo_dir);
  REQUIRE(data.samples.size() == 1500);
  std::size_t nonzero = 0;
  for (const auto& s : data.samples) nonzero += s.label.steering != 0.0;
  CHECK(nonzero == 0);
  CHECK(data.samples[10].label.throttle == cfg.sim.throttle);

  SUBCASE("offsets make steering vary; episodes restart on the intersection") {
    SessionConfig v;
    v.map = "intersection";
    v.record_ticks = 600;
    v.demo_dir = temp_dir("record_var") / "demos";
    const auto rv = run_record(v);
    CHECK(rv.frames == 600);
    const auto d = pretrain::load_demos(v.demo_dir);
    double lo = 0.0, hi = 0.0;
    for (const auto& s : d.samples) {
      lo = std::min(lo, s.label.steering);
      hi = std::max(hi, s.label.steering);
    }
    CHECK(lo < -0.05);
    CHECK(hi > 0.05);
  }
}

TEST_CASE("server: suggestions, pause, resume, and stop over WebSocket") {
  namespace beast = boost::beast;
  namespace ws = beast::websocket;
  using tcp = boost::asio::ip::tcp;

  auto cfg = small_config(Mode::idqn, "server");
  cfg.oracle = false;
  cfg.max_episodes = 1000;
  cfg.sim.step_limit = 100;
  Session s(cfg);
  TelemetryServer server(0, [&s](std::string_view t) { return s.handle_client_message(t); });
  REQUIRE(server.port() != 0);
  s.set_telemetry([&server](const std::string& m) { server.broadcast(m); });
  s.controls().paused = true;
  std::thread trainer([&] { s.run_training(); });

  boost::asio::io_context io;
  tcp::resolver resolver(io);
  ws::stream<tcp::socket> client(io);
  boost::asio::connect(client.next_layer(),
                       resolver.resolve("127.0.0.1", std::to_string(server.port())));
  client.handshake("127.0.0.1", "/");
  // Reads until a reply of the given type arrives, returning it.
  const auto read_until = [&](const std::string& type) {
    for (;;) {
      beast::flat_buffer buf;
      client.read(buf);
      auto j = nlohmann::json::parse(beast::buffers_to_string(buf.data()));
      if (j["type"] == type) return j;
    }
  };
  const auto send = [&](const std::string& text) { client.write(boost::asio::buffer(text)); };

  for (int i = 0; i < 200 && server.client_count() == 0; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  const auto step0 = s.global_step();
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  CHECK(s.global_step() == step0);  // paused

  send(R"({"type":"suggest","action":"LEFT","ts":1})");
  const auto ack = read_until("ack");
  CHECK(ack["accepted"] == true);
  CHECK(s.queue().size() == 1);

  send(R"({"type":"control","command":"start"})");
  read_until("ack");
  for (int i = 0; i < 400 && s.log().suggestions_injected == 0; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  const auto t = read_until("telemetry");
  CHECK(t["counters"]["received"] == 1);

  send(R"({"type":"control","command":"pause"})");
  read_until("ack");
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  const auto frozen = s.global_step();
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  CHECK(s.global_step() == frozen);
  CHECK(frozen > step0);
  CHECK(s.agent().replay().suggested_pushed() == 1);

  send(R"({"type":"bogus"})");
  CHECK(read_until("error")["detail"].get<std::string>().find("bogus") != std::string::npos);

  send(R"({"type":"control","command":"stop"})");
  read_until("ack");
  trainer.join();
  CHECK(s.log().suggestions_injected == 1);
  CHECK(s.log().episodes.size() < cfg.max_episodes);
  beast::error_code ec;
  client.close(ws::close_code::normal, ec);
  server.stop();
}
