#include "rigcal/preconditioner.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>

#include "rigcal/errors.hpp"

namespace rigcal {

PreconditionedRates compute_preconditioner(const DeviceTrajectory& traj, const RigModel& rig,
                                           const std::vector<Vec3>& sample_points,
                                           const std::vector<SampleView>& sample_views) {
  Eigen::Matrix<double, 2, 12> j_mean = Eigen::Matrix<double, 2, 12>::Zero();
  int visible = 0;

  for (const SampleView& view : sample_views) {
    const TrajectoryFrame& frame = traj.frame(view.first);
    if (view.second < 0 || view.second >= static_cast<int>(rig.cameras.size())) {
      throw UnknownCameraError(fmt::format("camera index {} out of range", view.second));
    }
    const RigCamera& cam = rig.cameras[view.second];
    const SE3Pose traj_pose = apply_right_delta(frame.pose_hat, frame.phi);
    const SE3Pose extrinsic = apply_right_delta(cam.extrinsic, cam.rho);
    const Intrinsics k = cam.effective_intrinsics();
    for (const Vec3& point : sample_points) {
      try {
        const PixelCoord px = project(point, compose(traj_pose, extrinsic), k);
        if (px.u < 0.0 || px.u > k.width || px.v < 0.0 || px.v > k.height) continue;
        j_mean += pose_delta_jacobian(point, traj_pose, extrinsic, k);
        ++visible;
      } catch (const BehindCameraError&) {
        continue;
      }
    }
  }

  if (visible < 10) {
    throw InsufficientSamplesError(
        fmt::format("only {} visible point-view samples, need at least 10", visible));
  }
  j_mean /= static_cast<double>(visible);

  // diag(J^T J) per scalar = squared column norms of the averaged Jacobian.
  const Eigen::Matrix<double, 12, 1> diag = j_mean.colwise().squaredNorm().transpose();
  std::array<double, 4> group_diag{};
  for (int g = 0; g < 4; ++g) {
    group_diag[g] = diag.segment<3>(3 * g).mean();
  }

  std::array<double, 4> raw{};
  for (int g = 0; g < 4; ++g) {
    raw[g] = 1.0 / std::sqrt(std::max(group_diag[g], 1e-300));
  }
  std::array<double, 4> sorted = raw;
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[1] + sorted[2]);

  PreconditionedRates rates;
  for (int g = 0; g < 4; ++g) {
    rates.multiplier[g] = raw[g] / median;
  }
  return rates;
}

}  // namespace rigcal
