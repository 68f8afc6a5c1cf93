#include "idqn/agent/agent.hpp"

#include <algorithm>
#include <cmath>

#include "idqn/errors.hpp"

namespace idqn::agent {

double eps(const ExplorerSchedule& s, std::uint64_t step) {
  if (step >= s.anneal_steps) return s.eps_min;
  const double fraction = static_cast<double>(step) / static_cast<double>(s.anneal_steps);
  return std::max(s.eps_min, s.eps_max - (s.eps_max - s.eps_min) * fraction);
}

std::string to_string(ClipMode mode) { return mode == ClipMode::sign ? "sign" : "clamp"; }

ClipMode parse_clip_mode(const std::string& name) {
  if (name == "sign") return ClipMode::sign;
  if (name == "clamp") return ClipMode::clamp;
  throw ConfigError("clip_mode must be 'sign' or 'clamp', got '" + name + "'");
}

double clip_reward(double r, ClipMode mode) {
  if (mode == ClipMode::sign) return r > 0.0 ? 1.0 : r < 0.0 ? -1.0 : 0.0;
  return std::clamp(r, -1.0, 1.0);
}

double q_target(double r, bool done, std::span<const float> next_q, double gamma) {
  if (done) return r;
  const float best = *std::max_element(next_q.begin(), next_q.end());
  return r + gamma * static_cast<double>(best);
}

nn::LossResult<float> td_loss(const nn::Tensor& q, std::span<const sim::ActionId> actions,
                              std::span<const double> targets) {
  const std::size_t batch = q.dim(0);
  const std::size_t width = q.dim(1);
  if (actions.size() != batch || targets.size() != batch) {
    throw UsageError("td_loss: batch size mismatch");
  }
  nn::LossResult<float> out;
  out.gradient = nn::Tensor(q.shape());
  double sum = 0.0;
  for (std::size_t b = 0; b < batch; ++b) {
    const auto a = static_cast<std::size_t>(actions[b]);
    const double diff = static_cast<double>(q[b * width + a]) - targets[b];
    sum += diff * diff;
    out.gradient[b * width + a] = static_cast<float>(2.0 * diff / static_cast<double>(batch));
  }
  out.value = sum / static_cast<double>(batch);
  return out;
}

sim::ActionId argmax_action(std::span<const float> q) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < q.size(); ++i) {
    if (q[i] > q[best]) best = i;
  }
  return static_cast<sim::ActionId>(best);
}

void AgentConfig::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("agent config: ") + what);
  };
  require(gamma > 0.0 && gamma <= 1.0, "gamma must be in (0, 1]");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0, 1)");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(batch_size >= 1 && train_every >= 1 && target_sync_every >= 1,
          "batch_size, train_every, target_sync_every must be >= 1");
  require(replay_capacity >= batch_size, "replay_capacity must hold at least one batch");
  require(history_length >= 1, "history_length must be >= 1");
  require(explorer.eps_min >= 0.0 && explorer.eps_min <= explorer.eps_max &&
              explorer.eps_max <= 1.0,
          "need 0 <= eps_min <= eps_max <= 1");
  require(explorer.anneal_steps >= 1, "anneal_steps must be >= 1");
}

bool train_due(const AgentConfig& cfg, std::uint64_t step) {
  return step >= cfg.train_start && (step - cfg.train_start) % cfg.train_every == 0;
}

bool sync_due(const AgentConfig& cfg, std::uint64_t step) {
  return step > 0 && step % cfg.target_sync_every == 0;
}

Agent::Agent(AgentConfig cfg, nn::Network<float> q_net, std::uint64_t seed)
    : cfg_(cfg),
      q_(std::move(q_net)),
      target_(q_),
      optimizer_(nn::OptimizerState::sgd_momentum(cfg.learning_rate, cfg.momentum,
                                                  cfg.weight_decay)),
      replay_(cfg.replay_capacity, cfg.history_length),
      history_(cfg.history_length),
      rng_(seed) {
  cfg_.validate();
  const auto& in = q_.input_shape();
  if (in.size() != 3 || in[0] != cfg_.history_length) {
    throw ConfigError("Q-network input must be [history_length, H, W], got " +
                      nn::shape_string(in));
  }
  if (q_.output_shape() != nn::Shape{sim::kNumActions}) {
    throw ConfigError("Q-network output must be [3], got " + nn::shape_string(q_.output_shape()));
  }
}

void Agent::begin_episode(const sim::Frame& first_frame) {
  history_.clear();
  history_.push(first_frame);
  pending_start_ = true;
}

std::array<float, 3> Agent::q_values(const History& history) const {
  nn::Shape shape{1};
  for (auto d : q_.input_shape()) shape.push_back(d);
  nn::Tensor input(shape);
  if (input.size() != history.length() * history.frames().back().pixels.size()) {
    throw UsageError("history frames do not match the Q-network input shape");
  }
  history.stack_into(input.raw());
  const nn::Tensor q = q_.predict(input);
  return {q[0], q[1], q[2]};
}

sim::ActionId Agent::select_action(const History& history, std::uint64_t step) {
  return select_action_eps(history, eps(cfg_.explorer, step));
}

sim::ActionId Agent::select_action_eps(const History& history, double epsilon) {
  if (history.empty()) throw UsageError("select_action needs a non-empty history");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng_) < epsilon) {
    std::uniform_int_distribution<int> pick(0, static_cast<int>(sim::kNumActions) - 1);
    return static_cast<sim::ActionId>(pick(rng_));
  }
  const auto q = q_values(history);
  return argmax_action(q);
}

void Agent::observe(sim::Frame image, sim::ActionId action, double raw_reward, bool done,
                    const sim::Frame& next_frame) {
  Transition t;
  t.image = std::move(image);
  t.action = action;
  t.reward = clip_reward(raw_reward, cfg_.clip_mode);
  t.done = done;
  t.episode_start = pending_start_;
  pending_start_ = false;
  replay_.push(std::move(t));
  history_.push(next_frame);
}

void Agent::observe_suggested(Transition t) {
  t.suggested = true;
  t.episode_start = false;
  replay_.push(std::move(t));
}

std::optional<double> Agent::train_step() {
  const std::size_t batch = cfg_.batch_size;
  if (replay_.sampleable_count() < batch) return std::nullopt;
  const auto ids = replay_.sample(batch, rng_);

  nn::Shape shape{batch};
  for (auto d : q_.input_shape()) shape.push_back(d);
  nn::Tensor states(shape);
  nn::Tensor next_states(shape);
  const std::size_t per = nn::shape_size(q_.input_shape());
  if (replay_.state_size() != per) {
    throw UsageError("replay frames do not match the Q-network input shape");
  }
  std::vector<bool> has_next(batch);
  std::vector<sim::ActionId> actions(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    replay_.state(ids[b], states.raw() + b * per);
    has_next[b] = replay_.next_state(ids[b], next_states.raw() + b * per);
    actions[b] = replay_.at(ids[b]).action;
  }

  const nn::Tensor next_q = target_.predict(next_states);
  std::vector<double> targets(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::span<const float> row(next_q.raw() + b * sim::kNumActions, sim::kNumActions);
    targets[b] = q_target(replay_.at(ids[b]).reward, !has_next[b], row, cfg_.gamma);
  }

  const auto pass = q_.forward(states, true, &rng_);
  const auto loss = td_loss(pass.output, actions, targets);
  const auto grads = q_.backward(pass, loss.gradient);
  nn::optimizer_step(optimizer_, q_.weights(), grads.params);
  return loss.value;
}

void Agent::sync_target() { target_ = q_; }

void Agent::set_target(nn::Network<float> target) {
  if (target.layers() != q_.layers() || target.input_shape() != q_.input_shape()) {
    throw ConfigError("target network does not match the action model");
  }
  target_ = std::move(target);
}

LearnEvents Agent::learn(std::uint64_t step) {
  LearnEvents events;
  if (train_due(cfg_, step)) {
    events.loss = train_step();
    events.trained = events.loss.has_value();
  }
  if (sync_due(cfg_, step)) {
    sync_target();
    events.synced = true;
  }
  return events;
}

}  // namespace idqn::agent
