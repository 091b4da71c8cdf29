#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rigcal/loss.hpp"
#include "rigcal/lr_schedule.hpp"
#include "rigcal/preconditioner.hpp"

namespace rigcal {

struct RefineOptions {
  LossWeights weights;
  BarrierSpec bounds = default_bounds();
  LRSchedule lr;
  LossToggles toggles;
  bool precondition = true;
  double t_start = 1.0;
  double t_end = 1e4;
  double momentum = 0.9;
  int max_iter = 5000;
  // Match-sampling budget per iteration, in equivalent full sets: every set
  // contributes every iteration through a random subsample of
  // batch_size/num_sets of its matches. 0 = all matches.
  int batch_size = 32;
  int log_every = 50;
  int threads = 1;  // 1 is the deterministic acceptance configuration
  std::uint64_t seed = 0;
};

struct IterationRecord {
  int iter = 0;
  double loss = 0.0;      // full weighted objective at this state
  double epipolar = 0.0;  // unweighted sums, as in TotalLoss
  double reproj = 0.0;
  double barrier = 0.0;
  double ep_e = 0.0;
  double rp_e = 0.0;
  double temperature = 0.0;
  double lr_factor = 0.0;
  // max over the group's scalars of |x - midpoint| / half_range; < 1 inside.
  std::array<double, kNumParamGroups> bound_utilization{};
};

struct RefineResult {
  DeviceTrajectory traj;
  RigModel rig;
  std::vector<IterationRecord> history;
  PreconditionedRates rates;
  // Per group, the worst bound utilization seen at any iteration of the run.
  std::array<double, kNumParamGroups> max_utilization{};
  int iterations = 0;
};

// Momentum gradient descent over all learnable deltas with sensitivity
// preconditioning, cosine restarts, log-barrier temperature schedule, and
// seeded per-set match subsampling. Throws Diverged on non-finite loss.
RefineResult run_refinement(DeviceTrajectory traj, RigModel rig,
                            const std::vector<MatchSet>& matches,
                            const RefineOptions& options);

struct AdaptOptions {
  int iterations = 500;
  double lr = 5e-4;
  double momentum = 0.9;
  LossWeights weights;  // only the geometric weights are used
  int min_matches = 8;
};

// Test-time adaptation: optimizes one new frame's phi against frozen refined
// parameters. The new frame is addressed as frame index == traj.frames.size()
// in the match sets. Throws InsufficientMatches below min_matches total.
SE3Pose test_time_adapt(const DeviceTrajectory& refined_traj, const RigModel& refined_rig,
                        const SE3Pose& new_frame_pose,
                        const std::vector<MatchSet>& matches_to_refined,
                        const AdaptOptions& options = {});

}  // namespace rigcal
