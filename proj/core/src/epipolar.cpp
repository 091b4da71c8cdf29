#include "rigcal/epipolar.hpp"

#include <fmt/core.h>

#include <cmath>

#include "rigcal/errors.hpp"

namespace rigcal {

namespace {
constexpr double kMinBaseline = 1e-9;
}

FundamentalMatrix fundamental_from_poses(const SE3Pose& pose_i_c2w,
                                         const SE3Pose& pose_j_c2w,
                                         const Intrinsics& k_i, const Intrinsics& k_j) {
  // Camera-j coordinates into camera-i coordinates.
  const SE3Pose rel = compose(pose_i_c2w.inverse(), pose_j_c2w);
  if (rel.t.norm() <= kMinBaseline) {
    throw DegenerateBaselineError(
        fmt::format("relative translation {} below {}", rel.t.norm(), kMinBaseline));
  }
  FundamentalMatrix f;
  f.matrix = k_i.inverse_matrix().transpose() * skew(rel.t) * rel.R * k_j.inverse_matrix();
  return f;
}

SampsonStats sampson_loss(const MatchSet& matches, const FundamentalMatrix& f) {
  SampsonStats stats;
  double sum = 0.0;
  for (Eigen::Index m = 0; m < matches.size(); ++m) {
    const Vec3 xi(matches.pixels_i(m, 0), matches.pixels_i(m, 1), 1.0);
    const Vec3 xj(matches.pixels_j(m, 0), matches.pixels_j(m, 1), 1.0);
    const Vec3 line_j = f.matrix * xi;             // epipolar line of x_i in image j
    const Vec3 line_i = f.matrix.transpose() * xj; // epipolar line of x_j in image i
    const double denom = line_j[0] * line_j[0] + line_j[1] * line_j[1] +
                         line_i[0] * line_i[0] + line_i[1] * line_i[1];
    if (denom == 0.0) {
      ++stats.skipped;
      continue;
    }
    const double e = xj.dot(line_j);
    sum += e * e / denom;
    ++stats.evaluated;
  }
  stats.loss = stats.evaluated > 0 ? sum / stats.evaluated : 0.0;
  return stats;
}

double epipolar_line_error(const MatchSet& matches, const FundamentalMatrix& f) {
  double sum = 0.0;
  Eigen::Index counted = 0;
  for (Eigen::Index m = 0; m < matches.size(); ++m) {
    const Vec3 xi(matches.pixels_i(m, 0), matches.pixels_i(m, 1), 1.0);
    const Vec3 xj(matches.pixels_j(m, 0), matches.pixels_j(m, 1), 1.0);
    const Vec3 line = f.matrix * xi;
    const double norm = std::hypot(line[0], line[1]);
    if (norm == 0.0) continue;
    sum += std::abs(xj.dot(line)) / norm;
    ++counted;
  }
  return counted > 0 ? sum / counted : 0.0;
}

}  // namespace rigcal
