#include "rigcal/se3.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>

namespace rigcal {

namespace {
constexpr double kSmallAngle = 1e-8;
}

SE3Pose SE3Pose::inverse() const {
  SE3Pose out;
  out.R = R.transpose();
  out.t = -(out.R * t);
  return out;
}

Mat4 SE3Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = R;
  m.topRightCorner<3, 1>() = t;
  return m;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat3 rotation_exp(const Vec3& axis_angle) {
  const double theta = axis_angle.norm();
  const Mat3 k = skew(axis_angle);
  if (theta < kSmallAngle) {
    // First-order Taylor; the quadratic term is below double precision here.
    return Mat3::Identity() + k;
  }
  const double a = std::sin(theta) / theta;
  const double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Mat3::Identity() + a * k + b * (k * k);
}

Vec3 rotation_log(const Mat3& rotation) {
  const double cos_theta = std::clamp((rotation.trace() - 1.0) / 2.0, -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  const Vec3 vee(rotation(2, 1) - rotation(1, 2),
                 rotation(0, 2) - rotation(2, 0),
                 rotation(1, 0) - rotation(0, 1));
  if (theta < kSmallAngle) {
    return 0.5 * vee;
  }
  if (theta > M_PI - 1e-6) {
    // Near pi the vee part vanishes; recover the axis from the symmetric part.
    const Mat3 s = 0.5 * (rotation + Mat3::Identity());
    Vec3 axis(std::sqrt(std::max(0.0, s(0, 0))),
              std::sqrt(std::max(0.0, s(1, 1))),
              std::sqrt(std::max(0.0, s(2, 2))));
    int k = 0;
    s.diagonal().maxCoeff(&k);
    if (axis[k] > 0.0) {
      for (int i = 0; i < 3; ++i) {
        if (i != k && s(k, i) < 0.0) axis[i] = -axis[i];
      }
    }
    axis.normalize();
    // Pick the sign consistent with the (possibly tiny) antisymmetric part.
    if (vee.dot(axis) < 0.0) axis = -axis;
    return theta * axis;
  }
  return (theta / (2.0 * std::sin(theta))) * vee;
}

double rotation_angle(const Mat3& rotation) {
  const double cos_theta = std::clamp((rotation.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(cos_theta);
}

Mat3 orthonormalized(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Mat3 d = Mat3::Identity();
    d(2, 2) = -1.0;
    r = svd.matrixU() * d * svd.matrixV().transpose();
  }
  return r;
}

bool is_orthonormal(const Mat3& m, double tol) {
  return (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         m.determinant() > 0.0;
}

SE3Pose exp_map(const TangentDelta& delta) {
  SE3Pose out;
  out.R = rotation_exp(delta.rot);
  out.t = delta.trans;
  return out;
}

SE3Pose compose(const SE3Pose& a, const SE3Pose& b) {
  SE3Pose out;
  out.R = a.R * b.R;
  out.t = a.R * b.t + a.t;
  return out;
}

SE3Pose apply_right_delta(const SE3Pose& pose, const TangentDelta& delta) {
  return compose(pose, exp_map(delta));
}

SE3Pose apply_left_delta(const SE3Pose& pose, const TangentDelta& delta) {
  return compose(exp_map(delta), pose);
}

}  // namespace rigcal
