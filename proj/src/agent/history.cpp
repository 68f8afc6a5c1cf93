#include "idqn/agent/history.hpp"

#include <vector>

#include "idqn/errors.hpp"

namespace idqn::agent {

void stack_frames(std::span<const sim::Frame* const> oldest_first, std::size_t n, float* out) {
  if (oldest_first.empty()) throw UsageError("stack_frames: no frames");
  const std::size_t pad = n > oldest_first.size() ? n - oldest_first.size() : 0;
  const std::size_t skip = oldest_first.size() > n ? oldest_first.size() - n : 0;
  const std::size_t plane = oldest_first.front()->pixels.size();
  for (std::size_t c = 0; c < n; ++c) {
    const sim::Frame* f = c < pad ? oldest_first[skip] : oldest_first[skip + c - pad];
    if (f->channels != 1 || f->pixels.size() != plane) {
      throw UsageError("stack_frames: frames must be single-channel and equally sized");
    }
    float* dst = out + c * plane;
    for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<float>(f->pixels[i]);
  }
}

void planar_from_stack(const sim::Frame& stacked, float* out) {
  const std::size_t plane = stacked.width * stacked.height;
  const std::size_t n = stacked.channels;
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < n; ++c) {
      out[c * plane + i] = static_cast<float>(stacked.pixels[i * n + c]);
    }
  }
}

History::History(std::size_t length) : length_(length) {
  if (length == 0) throw ConfigError("history length must be >= 1");
}

void History::push(const sim::Frame& frame) {
  frames_.push_back(frame);
  while (frames_.size() > length_) frames_.pop_front();
}

void History::stack_into(float* out) const {
  std::vector<const sim::Frame*> ptrs;
  for (const auto& f : frames_) ptrs.push_back(&f);
  stack_frames(ptrs, length_, out);
}

sim::Frame History::snapshot() const {
  if (frames_.empty()) throw UsageError("snapshot of an empty history");
  const auto& ref = frames_.back();
  std::vector<float> planar(length_ * ref.pixels.size());
  stack_into(planar.data());
  sim::Frame out(ref.width, ref.height, length_);
  const std::size_t plane = ref.pixels.size();
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < length_; ++c) {
      out.pixels[i * length_ + c] = static_cast<std::uint8_t>(planar[c * plane + i]);
    }
  }
  return out;
}

}  // namespace idqn::agent
