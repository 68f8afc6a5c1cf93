#pragma once

#include <random>

#include "idqn/pretrain/demo_dataset.hpp"
#include "idqn/sim/frame.hpp"

namespace idqn::pretrain {

struct AugmentConfig {
  double crop_fraction = 0.5;     // keep this lower fraction of the rows
  double shift_sigma = 8.0;       // pixels
  double rot_sigma = 4.0;         // degrees
  double steer_correction = 0.01; // steering units per pixel of shift

  void validate() const;
};

// One perturbation. A positive shift moves image content left, which is what
// the camera sees after the car moved right of where it was; the label is
// corrected toward the left (steering decreases).
struct AugmentDraw {
  double shift_px = 0.0;
  double rotation_deg = 0.0;
};

AugmentDraw draw_augment(const AugmentConfig& cfg, std::mt19937_64& rng);

// Lower-region crop rescaled to 64 x 64.
sim::Frame preprocess(const sim::Frame& frame, const AugmentConfig& cfg);

// Shift then rotate about the image centre (bilinear, edge replicated).
sim::Frame warp(const sim::Frame& frame, const AugmentDraw& draw);

DemoSample apply_augment(const DemoSample& sample, const AugmentConfig& cfg,
                         const AugmentDraw& draw);
DemoSample augment(const DemoSample& sample, const AugmentConfig& cfg, std::mt19937_64& rng);

}  // namespace idqn::pretrain
