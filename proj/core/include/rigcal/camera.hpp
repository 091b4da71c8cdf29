#pragma once

#include "rigcal/se3.hpp"
#include "rigcal/types.hpp"

namespace rigcal {

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  Mat3 matrix() const;
  Mat3 inverse_matrix() const;
};

// Pinhole projection. pose_c2w conditions the camera, so the point is first
// pulled into the camera frame with its inverse.
PixelCoord project(const Vec3& point_world, const SE3Pose& pose_c2w, const Intrinsics& k);

// Projection of a point already expressed in the camera frame.
PixelCoord project_camera_point(const CameraPoint& p_cam, const Intrinsics& k);

// d(u,v)/d(fx,fy,cx,cy): rows [x/z, 0, 1, 0] and [0, y/z, 0, 1].
Eigen::Matrix<double, 2, 4> intrinsic_jacobian(const CameraPoint& p_cam);

// d(u,v)/d(x,y,z) of the pinhole map at a camera-frame point.
Eigen::Matrix<double, 2, 3> point_jacobian(const CameraPoint& p_cam, const Intrinsics& k);

// d(u,v)/d(phi_rot, phi_trans, rho_rot, rho_trans) at zero deltas, where the
// effective camera pose is right_delta(trajectory, phi) * right_delta(extrinsic, rho).
// Central finite differences, step 1e-6; feeds the sensitivity preconditioner.
Eigen::Matrix<double, 2, 12> pose_delta_jacobian(const Vec3& point_world,
                                                 const SE3Pose& trajectory_pose,
                                                 const SE3Pose& rig_extrinsic,
                                                 const Intrinsics& k);

// Unit bearing in the world frame through a pixel.
Vec3 ray_direction(const PixelCoord& px, const Intrinsics& k, const SE3Pose& pose_c2w);

}  // namespace rigcal
