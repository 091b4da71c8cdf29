#pragma once

#include <Eigen/Core>

namespace rigcal {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using VecX = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using MatX = Eigen::MatrixXd;

// Pixel position in image coordinates, origin at the top-left corner.
struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

// Point in a camera frame (z along the optical axis).
struct CameraPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

}  // namespace rigcal
