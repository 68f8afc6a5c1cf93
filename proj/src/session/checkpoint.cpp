#include <fstream>
#include <map>
#include <sstream>

#include "idqn/errors.hpp"
#include "idqn/nn/weights_io.hpp"
#include "idqn/session/session.hpp"

// Checkpoint directory layout:
//   config.toml  q.weights  target.weights  optimizer.weights
//   replay.bin  rng.txt  state.txt  runlog.csv  inputs.csv
namespace idqn::session {

namespace {

template <typename F>
void write_file(const std::filesystem::path& path, F&& body, std::ios::openmode mode = {}) {
  std::ofstream out(path, std::ios::out | mode);
  if (!out) throw ConfigError("checkpoint: cannot write " + path.string());
  body(out);
  if (!out) throw ConfigError("checkpoint: write failed for " + path.string());
}

std::ifstream open_file(const std::filesystem::path& path, std::ios::openmode mode = {}) {
  std::ifstream in(path, std::ios::in | mode);
  if (!in) throw ConfigError("checkpoint: cannot read " + path.string());
  return in;
}

}  // namespace

void Session::save_checkpoint(const std::filesystem::path& dir) const {
  namespace fs = std::filesystem;
  const fs::path tmp = dir.string() + ".tmp";
  std::error_code ec;
  fs::remove_all(tmp, ec);
  fs::create_directories(tmp, ec);
  if (ec) throw ConfigError("checkpoint: cannot create " + tmp.string() + ": " + ec.message());

  write_file(tmp / "config.toml", [&](std::ostream& o) { o << to_toml(cfg_); });
  nn::save_weights(tmp / "q.weights", agent_->q_network().weights());
  nn::save_weights(tmp / "target.weights", agent_->target_network().weights());
  nn::Weights<float> slots;
  const auto& opt = agent_->optimizer();
  for (std::size_t i = 0; i < opt.slots.size(); ++i) {
    slots.push_back({"slot" + std::to_string(i), opt.slots[i]});
  }
  nn::save_weights(tmp / "optimizer.weights", slots);
  write_file(tmp / "replay.bin", [&](std::ostream& o) { agent_->replay().write(o); },
             std::ios::binary);
  write_file(tmp / "rng.txt", [&](std::ostream& o) { o << agent_->rng() << '\n'; });
  write_file(tmp / "state.txt", [&](std::ostream& o) {
    o << "global_step " << log_.global_step << '\n'
      << "optimizer_steps " << opt.step_count << '\n'
      << "suggestions_received " << queue_.submitted() << '\n'
      << "suggestions_dropped " << queue_.dropped() << '\n'
      << "suggestions_drained " << queue_.drained() << '\n'
      << "suggestions_injected " << log_.suggestions_injected << '\n';
  });
  save_runlog_csv(tmp / "runlog.csv", log_);
  save_input_log(tmp / "inputs.csv", inputs_);

  fs::remove_all(dir, ec);
  fs::rename(tmp, dir, ec);
  if (ec) throw ConfigError("checkpoint: cannot move into " + dir.string() + ": " + ec.message());
}

std::unique_ptr<Session> Session::resume(const std::filesystem::path& dir,
                                         const std::function<void(SessionConfig&)>& overrides) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("checkpoint: not a directory: " + dir.string());
  }
  SessionConfig cfg = load_config(dir / "config.toml");
  if (overrides) overrides(cfg);
  auto session = std::make_unique<Session>(cfg);
  auto& agent = *session->agent_;

  nn::assign_weights(agent.q_network(), nn::load_weights(dir / "q.weights"));
  nn::Network<float> target = agent.q_network();
  nn::assign_weights(target, nn::load_weights(dir / "target.weights"));
  agent.set_target(std::move(target));

  std::map<std::string, std::uint64_t> state;
  {
    auto in = open_file(dir / "state.txt");
    std::string key;
    std::uint64_t value = 0;
    while (in >> key >> value) state[key] = value;
  }
  auto get = [&](const std::string& key) {
    const auto it = state.find(key);
    if (it == state.end()) throw ConfigError("checkpoint: state.txt lacks " + key);
    return it->second;
  };

  auto& opt = agent.optimizer();
  opt.slots.clear();
  for (auto& t : nn::load_weights(dir / "optimizer.weights")) opt.slots.push_back(std::move(t.value));
  opt.step_count = get("optimizer_steps");

  {
    auto in = open_file(dir / "replay.bin", std::ios::binary);
    agent.replay() = agent::ReplayMemory::read(in);
  }
  {
    auto in = open_file(dir / "rng.txt");
    in >> agent.rng();
    if (!in) throw ConfigError("checkpoint: unreadable rng.txt");
  }

  session->log_.episodes = load_runlog_csv(dir / "runlog.csv");
  session->log_.global_step = get("global_step");
  session->log_.suggestions_injected = get("suggestions_injected");
  session->log_.suggestions_received = get("suggestions_received");
  session->log_.suggestions_dropped = get("suggestions_dropped");
  session->queue_.restore_counters(get("suggestions_received"), get("suggestions_dropped"),
                                   get("suggestions_drained"));
  session->inputs_ = load_input_log(dir / "inputs.csv");
  return session;
}

}  // namespace idqn::session
