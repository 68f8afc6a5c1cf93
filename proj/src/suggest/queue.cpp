#include "idqn/suggest/queue.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>

#include "idqn/errors.hpp"

namespace idqn::suggest {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string to_string(Source source) {
  switch (source) {
    case Source::keyboard: return "keyboard";
    case Source::ui_button: return "ui_button";
    case Source::scripted_oracle: return "scripted_oracle";
  }
  return "?";
}

Source parse_source(std::string_view text) {
  const auto s = lower(text);
  if (s == "keyboard") return Source::keyboard;
  if (s == "ui_button") return Source::ui_button;
  if (s == "scripted_oracle") return Source::scripted_oracle;
  throw ConfigError("unknown suggestion source '" + std::string(text) + "'");
}

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::optional<sim::ActionId> action_for_key(std::string_view key) {
  auto k = lower(key);
  if (k.rfind("arrow", 0) == 0) k = k.substr(5);
  if (k == "up") return sim::ActionId::forward;
  if (k == "left") return sim::ActionId::left;
  if (k == "right") return sim::ActionId::right;
  return std::nullopt;
}

SuggestionQueue::SuggestionQueue(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("suggestion queue capacity must be > 0");
}

bool SuggestionQueue::submit(const Suggestion& s) {
  std::lock_guard lock(mutex_);
  ++submitted_;
  bool room = true;
  if (items_.size() == capacity_) {
    items_.pop_front();
    ++dropped_;
    room = false;
  }
  items_.push_back(s);
  return room;
}

std::vector<Suggestion> SuggestionQueue::drain() {
  std::lock_guard lock(mutex_);
  std::vector<Suggestion> out(items_.begin(), items_.end());
  items_.clear();
  drained_ += out.size();
  return out;
}

std::size_t SuggestionQueue::size() const {
  std::lock_guard lock(mutex_);
  return items_.size();
}

std::uint64_t SuggestionQueue::submitted() const {
  std::lock_guard lock(mutex_);
  return submitted_;
}

std::uint64_t SuggestionQueue::dropped() const {
  std::lock_guard lock(mutex_);
  return dropped_;
}

std::uint64_t SuggestionQueue::drained() const {
  std::lock_guard lock(mutex_);
  return drained_;
}

void SuggestionQueue::restore_counters(std::uint64_t submitted, std::uint64_t dropped,
                                       std::uint64_t drained) {
  std::lock_guard lock(mutex_);
  submitted_ = submitted;
  dropped_ = dropped;
  drained_ = drained;
}

}  // namespace idqn::suggest
