#include "rigcal/reprojection.hpp"

#include <cmath>

#include "rigcal/errors.hpp"

namespace rigcal {

namespace {

struct ViewRay {
  Vec3 canonical;  // K^{-1} x~, z = 1, camera frame
  double norm = 0.0;
  Vec3 dir_world;  // unit bearing
};

ViewRay make_ray(double u, double v, const Intrinsics& k, const SE3Pose& pose_c2w) {
  ViewRay r;
  r.canonical = Vec3((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
  r.norm = r.canonical.norm();
  r.dir_world = (pose_c2w.R * r.canonical) / r.norm;
  return r;
}

// C2 smoothing of the residual norm at the origin: sqrt(n^2 + d^2) - d,
// exactly 0 at n = 0. See kResidualSmoothing for the width rationale.
double smooth_norm(double n) {
  return std::sqrt(n * n + kResidualSmoothing * kResidualSmoothing) - kResidualSmoothing;
}

}  // namespace

ReprojectionResult reprojection_loss(const MatchSet& matches,
                                     const SE3Pose& pose_i_c2w, const SE3Pose& pose_j_c2w,
                                     const Intrinsics& k_i, const Intrinsics& k_j) {
  ReprojectionResult out;
  const Eigen::Index m_count = matches.size();
  out.residuals.assign(static_cast<size_t>(m_count), 0.0);
  out.status.assign(static_cast<size_t>(m_count), TriangulationStatus::kAccepted);

  const SE3Pose i_to_j = compose(pose_j_c2w.inverse(), pose_i_c2w);
  const SE3Pose j_to_i = i_to_j.inverse();
  double smoothed_sum = 0.0;
  double plain_sum = 0.0;

  for (Eigen::Index m = 0; m < m_count; ++m) {
    const ViewRay ray_i = make_ray(matches.pixels_i(m, 0), matches.pixels_i(m, 1), k_i, pose_i_c2w);
    const ViewRay ray_j = make_ray(matches.pixels_j(m, 0), matches.pixels_j(m, 1), k_j, pose_j_c2w);
    const TriangulationResult tri =
        triangulate_line_intersection(pose_i_c2w.t, ray_i.dir_world, pose_j_c2w.t, ray_j.dir_world);
    out.status[m] = tri.status;
    if (!tri.accepted()) {
      ++out.rejected;
      continue;
    }
    // z-depth of the closest-approach point on each ray: the unit ray's z
    // component in the camera frame is 1/|K^{-1}x~|.
    const double depth_i = tri.t / ray_i.norm;
    const double depth_j = tri.s / ray_j.norm;
    const Vec3 p_cam_i = depth_i * ray_i.canonical;  // point on ray i, camera-i frame
    const Vec3 p_cam_j = depth_j * ray_j.canonical;
    try {
      const Vec3 in_j = i_to_j.apply(p_cam_i);
      const Vec3 in_i = j_to_i.apply(p_cam_j);
      const PixelCoord px_j = project_camera_point({in_j.x(), in_j.y(), in_j.z()}, k_j);
      const PixelCoord px_i = project_camera_point({in_i.x(), in_i.y(), in_i.z()}, k_i);
      const double r_ij =
          std::hypot(px_j.u - matches.pixels_j(m, 0), px_j.v - matches.pixels_j(m, 1));
      const double r_ji =
          std::hypot(px_i.u - matches.pixels_i(m, 0), px_i.v - matches.pixels_i(m, 1));
      out.residuals[static_cast<size_t>(m)] = r_ij + r_ji;
      plain_sum += r_ij + r_ji;
      smoothed_sum += smooth_norm(r_ij) + smooth_norm(r_ji);
      ++out.accepted;
    } catch (const BehindCameraError&) {
      out.status[m] = TriangulationStatus::kBehindCamera;
      out.residuals[static_cast<size_t>(m)] = 0.0;
      ++out.rejected;
    }
  }

  if (out.accepted == 0) {
    throw NoAcceptedMatchesError("every match was gated out of the reprojection loss");
  }
  out.loss = smoothed_sum / out.accepted;
  out.metric = plain_sum / out.accepted;
  return out;
}

}  // namespace rigcal
