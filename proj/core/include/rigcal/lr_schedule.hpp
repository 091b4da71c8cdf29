#pragma once

#include "rigcal/rig.hpp"

namespace rigcal {

// Base learning rates per parameter family; the per-group rate is
// base * preconditioner multiplier * cosine restart factor.
struct LRSchedule {
  double base_extrinsic = 5e-3;  // phi and rho groups
  double base_intrinsic = 8e-4;  // fx, fy, cx, cy deltas
};

double base_lr_for_group(const LRSchedule& schedule, ParamGroupId id);

// Cosine decay with restarts at 0, max_iter/6 and max_iter/2. Each segment
// starts at factor 1 and decays to 0.01 at its end.
double cosine_restart_factor(int iter, int max_iter);

}  // namespace rigcal
