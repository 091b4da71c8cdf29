#include "rigcal/camera.hpp"

#include <fmt/core.h>

#include "rigcal/errors.hpp"

namespace rigcal {

namespace {

constexpr double kMinDepth = 1e-9;
constexpr double kFdStep = 1e-6;

void check_depth(double z) {
  if (z <= kMinDepth) {
    throw BehindCameraError(fmt::format("point at or behind camera: z = {}", z));
  }
}

}  // namespace

Mat3 Intrinsics::matrix() const {
  Mat3 k = Mat3::Identity();
  k(0, 0) = fx;
  k(1, 1) = fy;
  k(0, 2) = cx;
  k(1, 2) = cy;
  return k;
}

Mat3 Intrinsics::inverse_matrix() const {
  Mat3 k = Mat3::Identity();
  k(0, 0) = 1.0 / fx;
  k(1, 1) = 1.0 / fy;
  k(0, 2) = -cx / fx;
  k(1, 2) = -cy / fy;
  return k;
}

PixelCoord project_camera_point(const CameraPoint& p_cam, const Intrinsics& k) {
  check_depth(p_cam.z);
  return {k.fx * p_cam.x / p_cam.z + k.cx, k.fy * p_cam.y / p_cam.z + k.cy};
}

PixelCoord project(const Vec3& point_world, const SE3Pose& pose_c2w, const Intrinsics& k) {
  const Vec3 p = pose_c2w.inverse().apply(point_world);
  return project_camera_point({p.x(), p.y(), p.z()}, k);
}

Eigen::Matrix<double, 2, 4> intrinsic_jacobian(const CameraPoint& p_cam) {
  check_depth(p_cam.z);
  Eigen::Matrix<double, 2, 4> j = Eigen::Matrix<double, 2, 4>::Zero();
  j(0, 0) = p_cam.x / p_cam.z;
  j(0, 2) = 1.0;
  j(1, 1) = p_cam.y / p_cam.z;
  j(1, 3) = 1.0;
  return j;
}

Eigen::Matrix<double, 2, 3> point_jacobian(const CameraPoint& p_cam, const Intrinsics& k) {
  check_depth(p_cam.z);
  const double inv_z = 1.0 / p_cam.z;
  Eigen::Matrix<double, 2, 3> j;
  j << k.fx * inv_z, 0.0, -k.fx * p_cam.x * inv_z * inv_z,
       0.0, k.fy * inv_z, -k.fy * p_cam.y * inv_z * inv_z;
  return j;
}

Eigen::Matrix<double, 2, 12> pose_delta_jacobian(const Vec3& point_world,
                                                 const SE3Pose& trajectory_pose,
                                                 const SE3Pose& rig_extrinsic,
                                                 const Intrinsics& k) {
  const auto eval = [&](const TangentDelta& phi, const TangentDelta& rho) {
    const SE3Pose cam = compose(apply_right_delta(trajectory_pose, phi),
                                apply_right_delta(rig_extrinsic, rho));
    return project(point_world, cam, k);
  };
  // Base-point consistency: a behind-camera point at zero delta should throw
  // the same way project() does before any probing.
  (void)eval({}, {});

  Eigen::Matrix<double, 2, 12> j;
  for (int i = 0; i < 12; ++i) {
    TangentDelta phi, rho;
    double* slot = nullptr;
    if (i < 3) slot = &phi.rot[i];
    else if (i < 6) slot = &phi.trans[i - 3];
    else if (i < 9) slot = &rho.rot[i - 6];
    else slot = &rho.trans[i - 9];

    *slot = kFdStep;
    const PixelCoord plus = eval(phi, rho);
    *slot = -kFdStep;
    const PixelCoord minus = eval(phi, rho);
    j(0, i) = (plus.u - minus.u) / (2.0 * kFdStep);
    j(1, i) = (plus.v - minus.v) / (2.0 * kFdStep);
  }
  return j;
}

Vec3 ray_direction(const PixelCoord& px, const Intrinsics& k, const SE3Pose& pose_c2w) {
  const Vec3 canonical((px.u - k.cx) / k.fx, (px.v - k.cy) / k.fy, 1.0);
  return (pose_c2w.R * canonical).normalized();
}

}  // namespace rigcal
