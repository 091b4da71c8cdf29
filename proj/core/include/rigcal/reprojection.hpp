#pragma once

#include <vector>

#include "rigcal/camera.hpp"
#include "rigcal/matches.hpp"
#include "rigcal/se3.hpp"
#include "rigcal/triangulation.hpp"

namespace rigcal {

struct ReprojectionResult {
  double loss = 0.0;    // optimization objective: mean smoothed residual, px
  double metric = 0.0;  // reporting metric: mean plain-norm residual, px
  std::vector<double> residuals;            // per match, plain norms; rejected hold 0
  std::vector<TriangulationStatus> status;  // triangulation gate per match
  int accepted = 0;
  int rejected = 0;
};

// Width (pixels) of the C2 smoothing applied to each residual norm in the
// optimization objective: sqrt(n^2 + w^2) - w with w = kResidualSmoothing. A
// raw L2 norm has a kink at zero: its gradient keeps constant magnitude
// however small the residual, so an exact optimum would be a limit cycle
// rather than a fixed point under momentum descent. The smoothed core has
// curvature J^2/w along a residual with sensitivity J; the width is chosen so
// that stays inside the heavy-ball stability region at the default learning
// rates even for near-parallel match sets whose triangulation amplifies J to
// a few thousand px/rad. The value deviation from the plain norm is bounded
// by w^2/(2n) — under 1% of any residual beyond 0.7 px — and the reported
// metric keeps plain norms, so the smoothing only shapes gradients near the
// optimum.
inline constexpr double kResidualSmoothing = 0.1;

// Depth-aware symmetric reprojection loss. Per match, depths come from the
// closest-approach point on each ray; the point on ray i is pushed through
// camera j (and vice versa) and compared against the observed pixel. `loss`
// smooths each direction's residual norm at the origin (kResidualSmoothing);
// `metric` keeps the plain norms. Matches gated out by triangulation (or
// landing behind a camera) contribute zero and are counted. Throws
// NoAcceptedMatches when nothing survives the gates.
ReprojectionResult reprojection_loss(const MatchSet& matches,
                                     const SE3Pose& pose_i_c2w, const SE3Pose& pose_j_c2w,
                                     const Intrinsics& k_i, const Intrinsics& k_j);

}  // namespace rigcal
