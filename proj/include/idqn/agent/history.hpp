#pragma once

#include <cstddef>
#include <deque>
#include <span>

#include "idqn/sim/frame.hpp"

namespace idqn::agent {

// Writes frames (oldest first, each single-channel H x W) as N stacked
// network channels, repeating the oldest frame when fewer than N are given.
void stack_frames(std::span<const sim::Frame* const> oldest_first, std::size_t n,
                  float* out);

// Copies an N-channel interleaved frame into planar N x H x W floats.
void planar_from_stack(const sim::Frame& stacked, float* out);

// The N most recent environment frames; inference input only.
class History {
 public:
  explicit History(std::size_t length = 4);

  std::size_t length() const { return length_; }
  std::size_t size() const { return frames_.size(); }
  bool empty() const { return frames_.empty(); }
  const std::deque<sim::Frame>& frames() const { return frames_; }

  void push(const sim::Frame& frame);
  void clear() { frames_.clear(); }

  // N x H x W planar floats.
  void stack_into(float* out) const;
  // The same stack as one N-channel frame.
  sim::Frame snapshot() const;

  friend bool operator==(const History&, const History&) = default;

 private:
  std::size_t length_;
  std::deque<sim::Frame> frames_;
};

}  // namespace idqn::agent
