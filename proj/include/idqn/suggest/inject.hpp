#pragma once

#include <cstddef>
#include <vector>

#include "idqn/agent/replay_memory.hpp"
#include "idqn/sim/frame.hpp"
#include "idqn/suggest/queue.hpp"

namespace idqn::suggest {

struct SuggestConfig {
  double reward_value = 1.0;  // in the clipped reward range
  std::size_t repeat = 1;     // copies per suggestion

  void validate() const;
};

// The injected tuple: the given state with the suggested action, the
// configured reward, not terminal.
agent::Transition suggested_transition(const sim::Frame& last_state, sim::ActionId action,
                                       const SuggestConfig& cfg);

// Drains the queue into replay, `repeat` copies per suggestion. With no
// state yet (nullptr) nothing is drained and the suggestions wait. The
// state is the N-channel stack the agent last acted on; History is not an
// argument and is never touched. Returns the number of tuples pushed.
std::size_t apply_suggestions(const std::vector<Suggestion>& suggestions,
                              const sim::Frame& last_state, agent::ReplayMemory& replay,
                              const SuggestConfig& cfg);
std::size_t apply_suggestions(SuggestionQueue& queue, const sim::Frame* last_state,
                              agent::ReplayMemory& replay, const SuggestConfig& cfg);

}  // namespace idqn::suggest
