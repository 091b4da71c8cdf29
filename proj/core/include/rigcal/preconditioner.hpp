#pragma once

#include <array>
#include <utility>
#include <vector>

#include "rigcal/rig.hpp"

namespace rigcal {

// Per-group learning-rate multipliers from projection sensitivities.
struct PreconditionedRates {
  std::array<double, kNumParamGroups> multiplier{1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};

  double operator[](ParamGroupId id) const { return multiplier[static_cast<int>(id)]; }
};

// (frame_index, camera_index) pair a sample point is observed from.
using SampleView = std::pair<int, int>;

// Averages the 2x12 pose-delta Jacobian over all visible (point, view)
// samples, takes diag(J^T J) per scalar, means it per pose group, and assigns
// multipliers proportional to d^{-1/2}, median-normalized to 1 across the four
// pose groups. Intrinsic groups keep multiplier 1 (they carry their own base
// rate). Throws InsufficientSamples below 10 visible samples.
PreconditionedRates compute_preconditioner(const DeviceTrajectory& traj, const RigModel& rig,
                                           const std::vector<Vec3>& sample_points,
                                           const std::vector<SampleView>& sample_views);

}  // namespace rigcal
