#include "idqn/suggest/inject.hpp"

#include <cmath>

#include "idqn/errors.hpp"

namespace idqn::suggest {

void SuggestConfig::validate() const {
  if (!(reward_value >= -1.0 && reward_value <= 1.0)) {
    throw ConfigError("suggest reward_value must be in [-1, 1]");
  }
  if (repeat < 1) throw ConfigError("suggest repeat must be >= 1");
}

agent::Transition suggested_transition(const sim::Frame& last_state, sim::ActionId action,
                                       const SuggestConfig& cfg) {
  agent::Transition t;
  t.image = last_state;
  t.action = action;
  t.reward = cfg.reward_value;
  t.done = false;
  t.suggested = true;
  t.episode_start = false;
  return t;
}

std::size_t apply_suggestions(const std::vector<Suggestion>& suggestions,
                              const sim::Frame& last_state, agent::ReplayMemory& replay,
                              const SuggestConfig& cfg) {
  std::size_t injected = 0;
  for (const auto& s : suggestions) {
    for (std::size_t r = 0; r < cfg.repeat; ++r) {
      replay.push(suggested_transition(last_state, s.action, cfg));
      ++injected;
    }
  }
  return injected;
}

std::size_t apply_suggestions(SuggestionQueue& queue, const sim::Frame* last_state,
                              agent::ReplayMemory& replay, const SuggestConfig& cfg) {
  if (last_state == nullptr || last_state->empty()) return 0;
  return apply_suggestions(queue.drain(), *last_state, replay, cfg);
}

}  // namespace idqn::suggest
