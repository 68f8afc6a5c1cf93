#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "idqn/errors.hpp"
#include "idqn/sim/frame.hpp"

// Demonstration log: a directory holding frames/%06d.ppm (or .pgm) and
// labels.csv with header index,throttle,steering,brake,action_id.
namespace idqn::pretrain {

struct DemoLabel {
  double throttle = 0.0;  // [0, 1]
  double steering = 0.0;  // [-1, 1]
  double brake = 0.0;     // [0, 1]
  friend bool operator==(const DemoLabel&, const DemoLabel&) = default;
};

struct DemoSample {
  sim::Frame frame;  // 64 x 64 x 3
  DemoLabel label;
  int action_id = -1;  // discrete action when driven by one, else -1
  friend bool operator==(const DemoSample&, const DemoSample&) = default;
};

struct DemoDataset {
  std::vector<DemoSample> samples;
  std::vector<std::size_t> train;       // indices into samples
  std::vector<std::size_t> validation;  // disjoint from train
};

// All problems found while loading, one item each.
class DemoLoadError : public ConfigError {
 public:
  explicit DemoLoadError(std::vector<std::string> items);
  const std::vector<std::string>& items() const { return items_; }

 private:
  std::vector<std::string> items_;
};

std::string frame_filename(std::size_t index, std::size_t channels = 3);

DemoDataset load_demos(const std::filesystem::path& dir);
// Writes samples with indices 0..n-1; creates the directory.
void write_demos(const std::filesystem::path& dir, const std::vector<DemoSample>& samples);

// Seeded shuffle into validation (round(fraction * n)) and train.
void assign_split(DemoDataset& dataset, double validation_fraction, std::uint64_t seed);

}  // namespace idqn::pretrain
