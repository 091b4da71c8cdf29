#include "rigcal/synthetic.hpp"

#include <fmt/core.h>

#include <Eigen/Geometry>

#include <cmath>
#include <random>

#include "rigcal/errors.hpp"

namespace rigcal {

namespace {

constexpr double kDeg = M_PI / 180.0;

double truncated_normal(std::mt19937_64& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  std::normal_distribution<double> dist(0.0, sigma);
  for (;;) {
    const double v = dist(rng);
    if (std::abs(v) <= 3.0 * sigma) return v;
  }
}

Vec3 truncated_normal3(std::mt19937_64& rng, double sigma) {
  return {truncated_normal(rng, sigma), truncated_normal(rng, sigma),
          truncated_normal(rng, sigma)};
}

// Device frame on the circle: z outward radial, x along the tangent.
SE3Pose device_pose(double radius, double theta) {
  const Vec3 outward(std::cos(theta), std::sin(theta), 0.0);
  const Vec3 up(0.0, 0.0, 1.0);
  const Vec3 tangent = up.cross(outward).normalized();
  SE3Pose pose;
  pose.R.col(0) = tangent;
  pose.R.col(1) = outward.cross(tangent);
  pose.R.col(2) = outward;
  pose.t = Vec3(radius * std::cos(theta), radius * std::sin(theta),
                1.0 + 0.05 * std::sin(2.0 * theta));
  return pose;
}

bool visible(const Vec3& point, const SE3Pose& cam_pose, const Intrinsics& k) {
  try {
    const PixelCoord px = project(point, cam_pose, k);
    return px.u >= 0.0 && px.u <= k.width && px.v >= 0.0 && px.v <= k.height;
  } catch (const BehindCameraError&) {
    return false;
  }
}

}  // namespace

SyntheticScene generate_scene(const SceneConfig& config) {
  if (config.num_frames < 2 || config.num_cameras < 1 || config.num_landmarks < 8) {
    throw Error(fmt::format("scene config too small: {} frames, {} cameras, {} landmarks",
                            config.num_frames, config.num_cameras, config.num_landmarks));
  }
  SyntheticScene scene;
  scene.seed = config.seed;

  for (int f = 0; f < config.num_frames; ++f) {
    TrajectoryFrame frame;
    frame.timestamp = f * config.frame_dt;
    frame.pose_hat = device_pose(config.radius, f * config.arc_step_deg * kDeg);
    scene.trajectory.frames.push_back(frame);
  }

  const Intrinsics k{config.fx, config.fy, config.cx, config.cy, config.width, config.height};
  for (int c = 0; c < config.num_cameras; ++c) {
    RigCamera cam;
    cam.camera_id = fmt::format("cam{}", c);
    const double centered = c - 0.5 * (config.num_cameras - 1);
    const double yaw = centered * config.camera_spacing_deg * kDeg;
    cam.extrinsic.R = rotation_exp(Vec3(0.0, yaw, 0.0));
    cam.extrinsic.t = Vec3(centered * config.camera_baseline, 0.0, 0.0);
    cam.intrinsics = k;
    scene.rig.cameras.push_back(cam);
  }

  // Cache effective camera poses (deltas are zero by construction).
  std::vector<SE3Pose> cam_poses;
  cam_poses.reserve(static_cast<size_t>(config.num_frames * config.num_cameras));
  for (int f = 0; f < config.num_frames; ++f) {
    for (int c = 0; c < config.num_cameras; ++c) {
      cam_poses.push_back(effective_pose(scene.trajectory, scene.rig, f, c));
    }
  }

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> gap_dist(config.min_gap, config.max_gap);
  std::uniform_real_distribution<double> height_dist(0.2, 1.8);

  scene.landmarks.reserve(static_cast<size_t>(config.num_landmarks));
  for (int i = 0; i < config.num_landmarks; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double alpha = angle_dist(rng);
      const double r = config.radius + gap_dist(rng);
      const Vec3 candidate(r * std::cos(alpha), r * std::sin(alpha), height_dist(rng));
      int seen_frames = 0;
      for (int f = 0; f < config.num_frames && seen_frames < 2; ++f) {
        for (int c = 0; c < config.num_cameras; ++c) {
          if (visible(candidate, cam_poses[static_cast<size_t>(f * config.num_cameras + c)], k)) {
            ++seen_frames;
            break;
          }
        }
      }
      if (seen_frames >= 2) {
        scene.landmarks.push_back(candidate);
        placed = true;
        break;
      }
    }
    if (!placed) {
      throw InfeasibleVisibilityError(
          fmt::format("landmark {} not visible from 2 frames after 100 attempts", i));
    }
  }
  return scene;
}

PerturbedState perturb(const SyntheticScene& scene, const NoiseSpec& noise) {
  PerturbedState out;
  out.trajectory = scene.trajectory;
  out.rig = scene.rig;
  out.landmarks = scene.landmarks;
  std::mt19937_64 rng(noise.seed);

  for (TrajectoryFrame& frame : out.trajectory.frames) {
    TangentDelta eps;
    eps.rot = truncated_normal3(rng, noise.device_rot_sigma_deg * kDeg);
    eps.trans = truncated_normal3(rng, noise.device_trans_sigma_m);
    frame.pose_hat = apply_right_delta(frame.pose_hat, eps);
  }
  for (RigCamera& cam : out.rig.cameras) {
    TangentDelta eps;
    eps.rot = truncated_normal3(rng, noise.rig_rot_sigma_deg * kDeg);
    cam.extrinsic = apply_right_delta(cam.extrinsic, eps);
  }
  for (Vec3& point : out.landmarks) {
    point += truncated_normal3(rng, noise.point_sigma_m);
  }
  return out;
}

std::vector<MatchSet> synthesize_matches(const SyntheticScene& scene,
                                         const std::vector<int>& n_offsets,
                                         double pixel_sigma, std::uint64_t seed,
                                         int max_per_set) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> px_noise(0.0, pixel_sigma);
  const auto noisy = [&](double v) { return pixel_sigma > 0.0 ? v + px_noise(rng) : v; };

  std::vector<MatchSet> sets;
  const int frames = static_cast<int>(scene.trajectory.frames.size());
  for (int c = 0; c < static_cast<int>(scene.rig.cameras.size()); ++c) {
    const Intrinsics k = scene.rig.cameras[c].intrinsics;
    std::vector<SE3Pose> poses;
    poses.reserve(static_cast<size_t>(frames));
    for (int f = 0; f < frames; ++f) {
      poses.push_back(effective_pose(scene.trajectory, scene.rig, f, c));
    }
    for (int n : n_offsets) {
      for (int i = 0; i + n < frames; ++i) {
        std::vector<std::pair<PixelCoord, PixelCoord>> pairs;
        for (const Vec3& point : scene.landmarks) {
          if (!visible(point, poses[static_cast<size_t>(i)], k) ||
              !visible(point, poses[static_cast<size_t>(i + n)], k)) {
            continue;
          }
          pairs.emplace_back(project(point, poses[static_cast<size_t>(i)], k),
                             project(point, poses[static_cast<size_t>(i + n)], k));
        }
        if (static_cast<int>(pairs.size()) < 8) continue;

        // Keep an evenly spread subset when co-visibility exceeds the cap.
        MatchSet set;
        set.frame_i = i;
        set.frame_j = i + n;
        set.camera_i = scene.rig.cameras[static_cast<size_t>(c)].camera_id;
        set.camera_j = set.camera_i;
        const int kept = std::min<int>(max_per_set, static_cast<int>(pairs.size()));
        set.pixels_i.resize(kept, 2);
        set.pixels_j.resize(kept, 2);
        for (int m = 0; m < kept; ++m) {
          const size_t src = pairs.size() * static_cast<size_t>(m) / static_cast<size_t>(kept);
          set.pixels_i(m, 0) = noisy(pairs[src].first.u);
          set.pixels_i(m, 1) = noisy(pairs[src].first.v);
          set.pixels_j(m, 0) = noisy(pairs[src].second.u);
          set.pixels_j(m, 1) = noisy(pairs[src].second.v);
        }
        sets.push_back(std::move(set));
      }
    }
  }
  return sets;
}

EvalReport evaluate(const DeviceTrajectory& refined_traj, const RigModel& refined_rig,
                    const DeviceTrajectory& gt_traj, const RigModel& gt_rig,
                    const std::vector<MatchSet>& matches, const BarrierSpec& bounds) {
  if (refined_traj.frames.size() != gt_traj.frames.size()) {
    throw IndexMismatchError(fmt::format("frame count mismatch: {} vs {}",
                                         refined_traj.frames.size(), gt_traj.frames.size()));
  }
  if (refined_rig.cameras.size() != gt_rig.cameras.size()) {
    throw IndexMismatchError(fmt::format("camera count mismatch: {} vs {}",
                                         refined_rig.cameras.size(), gt_rig.cameras.size()));
  }
  for (size_t c = 0; c < gt_rig.cameras.size(); ++c) {
    if (refined_rig.cameras[c].camera_id != gt_rig.cameras[c].camera_id) {
      throw IndexMismatchError(fmt::format("camera id mismatch at {}: '{}' vs '{}'", c,
                                           refined_rig.cameras[c].camera_id,
                                           gt_rig.cameras[c].camera_id));
    }
  }

  EvalReport report;
  double rot_sum = 0.0;
  double trans_sum = 0.0;
  int count = 0;
  for (int f = 0; f < static_cast<int>(gt_traj.frames.size()); ++f) {
    for (int c = 0; c < static_cast<int>(gt_rig.cameras.size()); ++c) {
      const SE3Pose a = effective_pose(refined_traj, refined_rig, f, c);
      const SE3Pose b = effective_pose(gt_traj, gt_rig, f, c);
      const double rot = rotation_angle(a.R.transpose() * b.R) / kDeg;
      const double trans = (a.t - b.t).norm();
      rot_sum += rot;
      trans_sum += trans;
      report.max_rot_deg = std::max(report.max_rot_deg, rot);
      report.max_trans_m = std::max(report.max_trans_m, trans);
      ++count;
    }
  }
  report.mean_rot_deg = rot_sum / count;
  report.mean_trans_m = trans_sum / count;

  if (!matches.empty()) {
    const GeometricMetrics metrics = geometric_metrics(refined_traj, refined_rig, matches);
    report.ep_e = metrics.ep_e;
    report.rp_e = metrics.rp_e;
    report.sets_evaluated = metrics.sets_evaluated;
    report.sets_skipped = metrics.sets_skipped;
  }

  const auto note = [&](ParamGroupId g, double x, const Interval& iv) {
    auto& slot = report.delta_utilization[static_cast<int>(g)];
    slot = std::max(slot, std::abs(x - iv.midpoint()) / (0.5 * iv.range()));
  };
  for (const TrajectoryFrame& frame : refined_traj.frames) {
    for (int i = 0; i < 3; ++i) {
      note(ParamGroupId::kPhiRot, frame.phi.rot[i], bounds.phi_rot);
      note(ParamGroupId::kPhiTrans, frame.phi.trans[i], bounds.phi_trans);
    }
  }
  for (const RigCamera& cam : refined_rig.cameras) {
    for (int i = 0; i < 3; ++i) {
      note(ParamGroupId::kRhoRot, cam.rho.rot[i], bounds.rho_rot);
      note(ParamGroupId::kRhoTrans, cam.rho.trans[i], bounds.rho_trans);
    }
    const double initial[4] = {cam.intrinsics.fx, cam.intrinsics.fy, cam.intrinsics.cx,
                               cam.intrinsics.cy};
    constexpr ParamGroupId kGroups[4] = {ParamGroupId::kFx, ParamGroupId::kFy,
                                         ParamGroupId::kCx, ParamGroupId::kCy};
    for (int p = 0; p < 4; ++p) {
      note(kGroups[p], cam.intrinsic_delta[p], bounds.intrinsic_interval(initial[p]));
    }
  }
  return report;
}

}  // namespace rigcal
