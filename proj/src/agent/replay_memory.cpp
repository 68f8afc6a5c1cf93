#include "idqn/agent/replay_memory.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <ostream>

#include "idqn/agent/history.hpp"
#include "idqn/errors.hpp"

namespace idqn::agent {

namespace {

constexpr char kReplayMagic[] = "IDQNR1";

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ConfigError("replay file truncated");
  return value;
}

}  // namespace

ReplayMemory::ReplayMemory(std::size_t capacity, std::size_t history_length)
    : capacity_(capacity), history_length_(history_length) {
  if (capacity == 0) throw ConfigError("replay capacity must be >= 1");
  if (history_length == 0) throw ConfigError("history length must be >= 1");
}

void ReplayMemory::push(Transition t) {
  ++pushed_;
  if (t.suggested) ++suggested_pushed_;
  if (entries_.size() < capacity_) {
    entries_.push_back(std::move(t));
    return;
  }
  ++evicted_;
  if (entries_[head_].suggested) ++suggested_evicted_;
  entries_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayMemory::at(std::size_t i) const {
  if (i >= entries_.size()) throw UsageError("replay index out of range");
  return entries_[physical(i)];
}

std::optional<std::size_t> ReplayMemory::next_environment(std::size_t i) const {
  for (std::size_t j = i + 1; j < entries_.size(); ++j) {
    if (!at(j).suggested) return j;
  }
  return std::nullopt;
}

std::optional<std::size_t> ReplayMemory::newest_open_environment() const {
  for (std::size_t j = entries_.size(); j-- > 0;) {
    const auto& t = at(j);
    if (t.suggested) continue;
    if (t.done) return std::nullopt;
    return j;
  }
  return std::nullopt;
}

bool ReplayMemory::sampleable(std::size_t i) const {
  if (i >= entries_.size()) return false;
  return newest_open_environment() != i;
}

std::size_t ReplayMemory::sampleable_count() const {
  return entries_.size() - (newest_open_environment() ? 1 : 0);
}

std::vector<std::size_t> ReplayMemory::sample(std::size_t k, Rng& rng) const {
  const auto excluded = newest_open_environment();
  const std::size_t m = entries_.size() - (excluded ? 1 : 0);
  if (k > m) throw UsageError("sample larger than the sampleable replay");
  // Floyd's algorithm: k distinct values from [0, m).
  std::vector<std::size_t> picks;
  picks.reserve(k);
  for (std::size_t j = m - k; j < m; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j);
    const std::size_t t = pick(rng);
    if (std::find(picks.begin(), picks.end(), t) == picks.end()) {
      picks.push_back(t);
    } else {
      picks.push_back(j);
    }
  }
  if (excluded) {
    for (auto& p : picks) {
      if (p >= *excluded) ++p;
    }
  }
  return picks;
}

std::size_t ReplayMemory::state_size() const {
  if (entries_.empty()) return 0;
  const auto& t = entries_.front();
  const std::size_t plane = t.image.width * t.image.height;
  return plane * history_length_;
}

void ReplayMemory::state(std::size_t i, float* out) const {
  const Transition& t = at(i);
  if (t.suggested) {
    if (t.image.channels != history_length_) {
      throw UsageError("suggested tuple does not hold a full state stack");
    }
    planar_from_stack(t.image, out);
    return;
  }
  std::vector<const sim::Frame*> frames;  // newest first
  for (std::size_t j = i + 1; j-- > 0 && frames.size() < history_length_;) {
    const Transition& e = at(j);
    if (e.suggested) continue;
    frames.push_back(&e.image);
    if (e.episode_start) break;
  }
  std::reverse(frames.begin(), frames.end());
  stack_frames(frames, history_length_, out);
}

bool ReplayMemory::next_state(std::size_t i, float* out) const {
  const Transition& t = at(i);
  if (t.done) return false;
  if (t.suggested) {
    state(i, out);
    return true;
  }
  const auto j = next_environment(i);
  if (!j || at(*j).episode_start) return false;
  state(*j, out);
  return true;
}

void ReplayMemory::write(std::ostream& out) const {
  out.write(kReplayMagic, 6);
  put<std::uint64_t>(out, capacity_);
  put<std::uint64_t>(out, history_length_);
  put<std::uint64_t>(out, pushed_);
  put<std::uint64_t>(out, evicted_);
  put<std::uint64_t>(out, suggested_pushed_);
  put<std::uint64_t>(out, suggested_evicted_);
  put<std::uint64_t>(out, entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const Transition& t = at(i);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.image.width));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.image.height));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.image.channels));
    out.write(reinterpret_cast<const char*>(t.image.pixels.data()),
              static_cast<std::streamsize>(t.image.pixels.size()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.action));
    put<double>(out, t.reward);
    put<std::uint8_t>(out, static_cast<std::uint8_t>((t.done ? 1 : 0) | (t.suggested ? 2 : 0) |
                                                     (t.episode_start ? 4 : 0)));
  }
  if (!out) throw ConfigError("replay write failed");
}

ReplayMemory ReplayMemory::read(std::istream& in) {
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, kReplayMagic, 6) != 0) throw ConfigError("not a replay file");
  const auto capacity = get<std::uint64_t>(in);
  const auto history = get<std::uint64_t>(in);
  ReplayMemory m(capacity, history);
  m.pushed_ = get<std::uint64_t>(in);
  m.evicted_ = get<std::uint64_t>(in);
  m.suggested_pushed_ = get<std::uint64_t>(in);
  m.suggested_evicted_ = get<std::uint64_t>(in);
  const auto count = get<std::uint64_t>(in);
  if (count > capacity) throw ConfigError("replay file holds more tuples than its capacity");
  m.entries_.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Transition t;
    const auto w = get<std::uint32_t>(in);
    const auto h = get<std::uint32_t>(in);
    const auto c = get<std::uint32_t>(in);
    t.image = sim::Frame(w, h, c);
    in.read(reinterpret_cast<char*>(t.image.pixels.data()),
            static_cast<std::streamsize>(t.image.pixels.size()));
    if (!in) throw ConfigError("replay file truncated");
    const auto action = get<std::uint8_t>(in);
    if (action >= sim::kNumActions) throw ConfigError("replay file: bad action id");
    t.action = static_cast<sim::ActionId>(action);
    t.reward = get<double>(in);
    const auto flags = get<std::uint8_t>(in);
    t.done = flags & 1;
    t.suggested = flags & 2;
    t.episode_start = flags & 4;
    m.entries_.push_back(std::move(t));
  }
  return m;
}

bool operator==(const ReplayMemory& a, const ReplayMemory& b) {
  if (a.capacity_ != b.capacity_ || a.history_length_ != b.history_length_ ||
      a.pushed_ != b.pushed_ || a.evicted_ != b.evicted_ ||
      a.suggested_pushed_ != b.suggested_pushed_ ||
      a.suggested_evicted_ != b.suggested_evicted_ || a.size() != b.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a.at(i) == b.at(i))) return false;
  }
  return true;
}

}  // namespace idqn::agent
