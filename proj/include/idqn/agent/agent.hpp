#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "idqn/agent/history.hpp"
#include "idqn/agent/replay_memory.hpp"
#include "idqn/nn/loss.hpp"
#include "idqn/nn/network.hpp"
#include "idqn/nn/optimizer.hpp"

namespace idqn::agent {

struct ExplorerSchedule {
  double eps_max = 1.0;
  double eps_min = 0.05;
  std::uint64_t anneal_steps = 5000;
};

// Linear annealing from eps_max to eps_min, then flat.
double eps(const ExplorerSchedule& schedule, std::uint64_t step);

enum class ClipMode { sign, clamp };
std::string to_string(ClipMode mode);
ClipMode parse_clip_mode(const std::string& name);

double clip_reward(double r, ClipMode mode);

// y = r for terminal tuples, else r + gamma * max(next_q).
double q_target(double r, bool done, std::span<const float> next_q, double gamma);

// Squared TD error on the taken action only: mean_b (q[b, a_b] - y_b)^2,
// gradient 2 (q[b, a_b] - y_b) / B at the taken action and 0 elsewhere.
nn::LossResult<float> td_loss(const nn::Tensor& q, std::span<const sim::ActionId> actions,
                              std::span<const double> targets);

// Lowest index wins ties.
sim::ActionId argmax_action(std::span<const float> q);

struct AgentConfig {
  double gamma = 0.99;
  double learning_rate = 0.001;
  double momentum = 0.95;
  double weight_decay = 1e-5;
  std::size_t batch_size = 32;
  std::uint64_t train_start = 200;
  std::uint64_t train_every = 4;
  std::uint64_t target_sync_every = 1000;
  ClipMode clip_mode = ClipMode::clamp;
  std::size_t replay_capacity = 500000;
  std::size_t history_length = 4;
  ExplorerSchedule explorer;

  void validate() const;
};

// Training fires at train_start and every train_every steps after it; target
// syncs at every positive multiple of target_sync_every. `step` counts
// environment steps completed.
bool train_due(const AgentConfig& cfg, std::uint64_t step);
bool sync_due(const AgentConfig& cfg, std::uint64_t step);

struct LearnEvents {
  bool trained = false;
  bool synced = false;
  std::optional<double> loss;
};

// Action model, target model, replay, history, optimizer, and rng.
class Agent {
 public:
  // `q_net` maps an N x H x W stack to 3 Q-values; the target starts as a copy.
  Agent(AgentConfig cfg, nn::Network<float> q_net, std::uint64_t seed);

  const AgentConfig& config() const { return cfg_; }
  nn::Network<float>& q_network() { return q_; }
  const nn::Network<float>& q_network() const { return q_; }
  const nn::Network<float>& target_network() const { return target_; }
  ReplayMemory& replay() { return replay_; }
  const ReplayMemory& replay() const { return replay_; }
  History& history() { return history_; }
  const History& history() const { return history_; }
  nn::OptimizerState& optimizer() { return optimizer_; }
  const nn::OptimizerState& optimizer() const { return optimizer_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

  // Starts an episode: clears the history and seeds it with the first frame.
  void begin_episode(const sim::Frame& first_frame);

  std::array<float, 3> q_values(const History& history) const;
  // eps-greedy over the action model's Q-values.
  sim::ActionId select_action(const History& history, std::uint64_t step);
  // Same with an explicit epsilon.
  sim::ActionId select_action_eps(const History& history, double epsilon);

  // Appends an environment tuple (reward clipped here) to replay and the
  // following frame to the history.
  void observe(sim::Frame image, sim::ActionId action, double raw_reward, bool done,
               const sim::Frame& next_frame);
  // Appends an arbitrary tuple to replay only (used for suggestions).
  void observe_suggested(Transition t);

  // One minibatch update of the action model; nullopt when the replay holds
  // fewer sampleable tuples than a batch.
  std::optional<double> train_step();
  void sync_target();
  // Restores a saved target model; the layers must match the action model.
  void set_target(nn::Network<float> target);
  // Runs train_step/sync_target when due after `step` environment steps.
  LearnEvents learn(std::uint64_t step);

 private:
  AgentConfig cfg_;
  nn::Network<float> q_;
  nn::Network<float> target_;
  nn::OptimizerState optimizer_;
  ReplayMemory replay_;
  History history_;
  Rng rng_;
  bool pending_start_ = true;
};

}  // namespace idqn::agent
