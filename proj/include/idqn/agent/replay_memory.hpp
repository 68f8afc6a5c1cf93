#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <vector>

#include "idqn/sim/frame.hpp"
#include "idqn/sim/simulator.hpp"

namespace idqn::agent {

using Rng = std::mt19937_64;

// Replay tuple [image, action, reward, done].
// Environment tuples hold the single newest frame of the state they were
// taken in; the state is rebuilt from the preceding environment tuples of
// the same episode, and the next state from the following one.
// Suggested tuples hold the complete N-channel state and bootstrap from that
// same state (s' = s).
struct Transition {
  sim::Frame image;
  sim::ActionId action = sim::ActionId::forward;
  double reward = 0.0;  // clipped
  bool done = false;
  bool suggested = false;
  bool episode_start = false;  // first environment tuple of an episode

  friend bool operator==(const Transition&, const Transition&) = default;
};

// Fixed-capacity FIFO ring.
class ReplayMemory {
 public:
  ReplayMemory(std::size_t capacity, std::size_t history_length);

  std::size_t capacity() const { return capacity_; }
  std::size_t history_length() const { return history_length_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::uint64_t total_pushed() const { return pushed_; }
  std::uint64_t evicted() const { return evicted_; }
  std::uint64_t suggested_pushed() const { return suggested_pushed_; }
  std::uint64_t suggested_evicted() const { return suggested_evicted_; }
  // Suggested tuples currently stored.
  std::size_t suggested_count() const {
    return static_cast<std::size_t>(suggested_pushed_ - suggested_evicted_);
  }

  void push(Transition t);
  // i = 0 is the oldest stored tuple.
  const Transition& at(std::size_t i) const;

  // Whether tuple i has a well-defined (s, a, r, s') sample: every tuple
  // except the newest environment tuple of a still-running episode.
  bool sampleable(std::size_t i) const;
  std::size_t sampleable_count() const;
  // k distinct sampleable indices, uniform without replacement.
  std::vector<std::size_t> sample(std::size_t k, Rng& rng) const;

  // Planar N x H x W input of the state of tuple i.
  void state(std::size_t i, float* out) const;
  // Planar next state; false when the tuple is terminal.
  bool next_state(std::size_t i, float* out) const;
  // Floats per state.
  std::size_t state_size() const;

  void write(std::ostream& out) const;
  static ReplayMemory read(std::istream& in);

  // Same capacity, counters, and logical tuple sequence.
  friend bool operator==(const ReplayMemory& a, const ReplayMemory& b);

 private:
  std::size_t physical(std::size_t i) const { return (head_ + i) % entries_.size(); }
  std::optional<std::size_t> next_environment(std::size_t i) const;
  std::optional<std::size_t> newest_open_environment() const;

  std::size_t capacity_;
  std::size_t history_length_;
  std::vector<Transition> entries_;
  std::size_t head_ = 0;  // physical index of the oldest tuple once full
  std::uint64_t pushed_ = 0;
  std::uint64_t evicted_ = 0;
  std::uint64_t suggested_pushed_ = 0;
  std::uint64_t suggested_evicted_ = 0;
};

}  // namespace idqn::agent
