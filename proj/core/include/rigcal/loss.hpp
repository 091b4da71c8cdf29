#pragma once

#include <vector>

#include "rigcal/barrier.hpp"
#include "rigcal/epipolar.hpp"
#include "rigcal/matches.hpp"
#include "rigcal/reprojection.hpp"
#include "rigcal/rig.hpp"

namespace rigcal {

struct LossWeights {
  double lambda_barrier = 0.1;
  double lambda_epi = 1e-3;
  double lambda_reproj = 5e-4;
};

struct LossToggles {
  bool epipolar = true;
  bool reproj = true;
  bool barrier = true;
  bool intrinsics_learnable = true;
};

// Index arithmetic for the flatten_params ordering: frame phi blocks, then
// camera rho blocks, then per-camera intrinsic deltas.
struct ParamLayout {
  int num_frames = 0;
  int num_cameras = 0;
  bool intrinsics = false;

  ParamLayout() = default;
  ParamLayout(const DeviceTrajectory& traj, const RigModel& rig, bool intrinsics_learnable)
      : num_frames(static_cast<int>(traj.frames.size())),
        num_cameras(static_cast<int>(rig.cameras.size())),
        intrinsics(intrinsics_learnable) {}

  int phi_offset(int frame) const { return 6 * frame; }
  int rho_offset(int cam) const { return 6 * num_frames + 6 * cam; }
  int intrinsic_offset(int cam) const { return 6 * num_frames + 6 * num_cameras + 4 * cam; }
  int size() const {
    return 6 * num_frames + 6 * num_cameras + (intrinsics ? 4 * num_cameras : 0);
  }
};

// Geometric terms of one match set at explicit camera poses.
struct SetGeometry {
  double sampson = 0.0;  // per-set mean, px^2
  double reproj = 0.0;   // per-set mean, px (sum of both directions)
};

SetGeometry eval_set_geometry(const MatchSet& set, const SE3Pose& pose_i,
                              const SE3Pose& pose_j, const Intrinsics& k_i,
                              const Intrinsics& k_j, const LossToggles& toggles);

// Adds d(lambda_epi * sampson + lambda_reproj * reproj)/d(params) of one set
// into grad. Pose-delta entries come from central finite differences local to
// the set's two frames / cameras; intrinsic entries are analytic.
void accumulate_set_gradient(const DeviceTrajectory& traj, const RigModel& rig,
                             const MatchSet& set, const LossWeights& weights,
                             const LossToggles& toggles, const ParamLayout& layout,
                             double scale, VecX& grad);

// Barrier term summed over every learnable scalar; optionally accumulates
// lambda_barrier-weighted gradients. Throws OutOfBounds on infeasible state.
double barrier_loss(const DeviceTrajectory& traj, const RigModel& rig,
                    const BarrierSpec& bounds, double temperature,
                    const LossWeights& weights, const ParamLayout& layout, VecX* grad);

struct TotalLoss {
  double value = 0.0;
  double epipolar = 0.0;  // unweighted mean over match sets of per-set means
  double reproj = 0.0;    // unweighted mean over match sets
  double barrier = 0.0;   // unweighted sum over bounded scalars
  VecX gradient;          // empty when not requested
};

// Eq.-(10)-style weighted objective over every match set plus the barrier.
// Geometric terms are means across sets so the objective scale (and with it
// the default learning rates) does not depend on the dataset size.
TotalLoss total_loss(const DeviceTrajectory& traj, const RigModel& rig,
                     const std::vector<MatchSet>& matches, const LossWeights& weights,
                     const BarrierSpec& bounds, double temperature,
                     const LossToggles& toggles, bool with_gradient);

// Evaluation metrics shared by the refinement history and the benchmark
// report: mean-of-set-means Ep-e (px) and per-direction RP-e (px). Sets whose
// matches are all gated out (or with degenerate baselines) are skipped.
struct GeometricMetrics {
  double ep_e = 0.0;
  double rp_e = 0.0;
  int sets_evaluated = 0;
  int sets_skipped = 0;
};

GeometricMetrics geometric_metrics(const DeviceTrajectory& traj, const RigModel& rig,
                                   const std::vector<MatchSet>& matches);

}  // namespace rigcal
