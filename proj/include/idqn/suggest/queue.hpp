#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "idqn/sim/simulator.hpp"

namespace idqn::suggest {

enum class Source { keyboard, ui_button, scripted_oracle };

std::string to_string(Source source);
Source parse_source(std::string_view text);

struct Suggestion {
  sim::ActionId action = sim::ActionId::forward;
  std::int64_t wall_time_ms = 0;
  Source source = Source::ui_button;
  friend bool operator==(const Suggestion&, const Suggestion&) = default;
};

// Milliseconds since the Unix epoch.
std::int64_t now_ms();

// UP/LEFT/RIGHT (also ArrowUp/ArrowLeft/ArrowRight, any case).
std::optional<sim::ActionId> action_for_key(std::string_view key);

// Bounded FIFO shared by any number of producers and one consumer.
class SuggestionQueue {
 public:
  static constexpr std::size_t kDefaultCapacity = 64;

  explicit SuggestionQueue(std::size_t capacity = kDefaultCapacity);

  // Never blocks on a full queue: the oldest entry is dropped and counted.
  // Returns false when that happened.
  bool submit(const Suggestion& s);
  // Everything queued, in arrival order.
  std::vector<Suggestion> drain();

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const;
  std::uint64_t submitted() const;
  std::uint64_t dropped() const;
  std::uint64_t drained() const;
  // Resumes counting from saved totals.
  void restore_counters(std::uint64_t submitted, std::uint64_t dropped, std::uint64_t drained);

 private:
  const std::size_t capacity_;
  mutable std::mutex mutex_;
  std::deque<Suggestion> items_;
  std::uint64_t submitted_ = 0;
  std::uint64_t dropped_ = 0;
  std::uint64_t drained_ = 0;
};

}  // namespace idqn::suggest
