#pragma once

#include "rigcal/types.hpp"

namespace rigcal {

// Learnable 6-dof correction. Rotation is an axis-angle vector, translation a
// plain offset; the two halves are decoupled on purpose so that bounds and
// learning rates can act on each group independently.
struct TangentDelta {
  Vec3 rot = Vec3::Zero();    // radians
  Vec3 trans = Vec3::Zero();  // meters

  static TangentDelta zero() { return {}; }
  bool is_zero() const { return rot.isZero(0.0) && trans.isZero(0.0); }
};

// Rigid transform. R maps source-frame directions into the target frame,
// t is the source origin expressed in the target frame.
struct SE3Pose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  static SE3Pose identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return R * p + t; }
  SE3Pose inverse() const;
  Mat4 matrix() const;
};

Mat3 skew(const Vec3& v);

// Rodrigues exponential with a Taylor fallback below 1e-8 rad.
Mat3 rotation_exp(const Vec3& axis_angle);

// Inverse of rotation_exp for angles in [0, pi].
Vec3 rotation_log(const Mat3& rotation);

// Geodesic angle between a rotation and the identity, radians.
double rotation_angle(const Mat3& rotation);

// Nearest orthonormal matrix (polar factor); bounds drift from long
// composition chains.
Mat3 orthonormalized(const Mat3& m);

bool is_orthonormal(const Mat3& m, double tol = 1e-10);

// Decoupled exponential: rotation via Rodrigues, translation taken verbatim.
SE3Pose exp_map(const TangentDelta& delta);

// a then b in the usual matrix sense: result maps b-source into a-target.
SE3Pose compose(const SE3Pose& a, const SE3Pose& b);

inline SE3Pose operator*(const SE3Pose& a, const SE3Pose& b) { return compose(a, b); }

// pose * exp(delta). A pure-rotation delta pivots the frame about its own
// center, so the stored translation is untouched.
SE3Pose apply_right_delta(const SE3Pose& pose, const TangentDelta& delta);

// exp(delta) * pose. Rotations pivot about the world origin instead; kept for
// the refinement-scheme comparison, not used by the rig model.
SE3Pose apply_left_delta(const SE3Pose& pose, const TangentDelta& delta);

}  // namespace rigcal
