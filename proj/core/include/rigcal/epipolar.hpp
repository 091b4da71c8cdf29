#pragma once

#include "rigcal/camera.hpp"
#include "rigcal/matches.hpp"
#include "rigcal/se3.hpp"

namespace rigcal {

struct FundamentalMatrix {
  Mat3 matrix = Mat3::Zero();

  FundamentalMatrix transposed() const { return {matrix.transpose()}; }
};

// F = K_i^{-T} [t]_x R_ij K_j^{-1} with (R_ij, t_ij) the camera-j -> camera-i
// relative transform, so exact correspondences satisfy x_i^T F x_j = 0.
// Throws DegenerateBaseline when the relative translation vanishes.
FundamentalMatrix fundamental_from_poses(const SE3Pose& pose_i_c2w,
                                         const SE3Pose& pose_j_c2w,
                                         const Intrinsics& k_i, const Intrinsics& k_j);

struct SampsonStats {
  double loss = 0.0;  // mean over evaluated matches
  int evaluated = 0;
  int skipped = 0;  // matches whose four line coefficients all vanished
};

// Mean Sampson distance (px^2). The supplied F must satisfy x_j^T F x_i = 0
// for exact data, i.e. the transpose of fundamental_from_poses(pose_i, pose_j)
// or equivalently fundamental_from_poses(pose_j, pose_i) directly.
SampsonStats sampson_loss(const MatchSet& matches, const FundamentalMatrix& f);

// Mean perpendicular distance (px) from x_j to its epipolar line F x_i.
// Same F convention as sampson_loss. Evaluation metric, not a training loss.
double epipolar_line_error(const MatchSet& matches, const FundamentalMatrix& f);

}  // namespace rigcal
