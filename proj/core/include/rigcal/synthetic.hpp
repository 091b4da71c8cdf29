#pragma once

#include <cstdint>
#include <vector>

#include "rigcal/barrier.hpp"
#include "rigcal/loss.hpp"
#include "rigcal/matches.hpp"
#include "rigcal/rig.hpp"

namespace rigcal {

// Desk-scale stand-in for a captured sequence: a device circling at ~3 m
// radius with outward-looking cameras and landmarks in an annulus around it.
struct SceneConfig {
  int num_frames = 50;
  int num_cameras = 2;
  int num_landmarks = 500;
  double radius = 3.0;            // trajectory radius, m
  double arc_step_deg = 6.0;      // device yaw advance per frame
  double frame_dt = 0.1;          // 10 Hz timestamps
  double min_gap = 1.5;           // landmark distance beyond the circle, m
  double max_gap = 8.0;
  double camera_spacing_deg = 15.0;  // yaw between adjacent rig cameras
  double camera_baseline = 0.1;      // lateral offset between rig cameras, m
  double fx = 600.0;
  double fy = 600.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;
  std::uint64_t seed = 0;
};

struct SyntheticScene {
  std::vector<Vec3> landmarks;
  DeviceTrajectory trajectory;  // ground truth, zero deltas
  RigModel rig;                 // ground truth, zero deltas
  std::uint64_t seed = 0;
};

struct NoiseSpec {
  double device_rot_sigma_deg = 0.0;
  double device_trans_sigma_m = 0.0;
  double rig_rot_sigma_deg = 0.0;
  double point_sigma_m = 0.0;
  double pixel_sigma_px = 0.0;
  std::uint64_t seed = 0;
};

struct PerturbedState {
  DeviceTrajectory trajectory;
  RigModel rig;
  std::vector<Vec3> landmarks;
};

// Deterministic per seed. Every landmark is resampled until it is visible
// from at least two frames; throws InfeasibleVisibility after 100 attempts.
SyntheticScene generate_scene(const SceneConfig& config);

// Right-composes truncated (3 sigma) Gaussian tangent noise onto device poses
// and rig extrinsics (rotation only for the rig) and jitters landmarks.
PerturbedState perturb(const SyntheticScene& scene, const NoiseSpec& noise);

// Same-camera temporal correspondences for each frame offset in n_offsets,
// built from ground-truth geometry plus Gaussian pixel noise. Sets with fewer
// than 8 co-visible landmarks are dropped; at most max_per_set matches kept.
std::vector<MatchSet> synthesize_matches(const SyntheticScene& scene,
                                         const std::vector<int>& n_offsets,
                                         double pixel_sigma, std::uint64_t seed,
                                         int max_per_set = 40);

struct EvalReport {
  double mean_rot_deg = 0.0;
  double max_rot_deg = 0.0;
  double mean_trans_m = 0.0;
  double max_trans_m = 0.0;
  double ep_e = 0.0;
  double rp_e = 0.0;
  int sets_evaluated = 0;
  int sets_skipped = 0;
  // max |delta| / half-bound per group under `bounds`, 0 when group absent
  std::array<double, kNumParamGroups> delta_utilization{};
};

// Geodesic pose errors of every effective camera pose against ground truth,
// plus Ep-e / RP-e over `matches` through the same code path as the losses.
// Throws IndexMismatch when frame counts or camera ids disagree.
EvalReport evaluate(const DeviceTrajectory& refined_traj, const RigModel& refined_rig,
                    const DeviceTrajectory& gt_traj, const RigModel& gt_rig,
                    const std::vector<MatchSet>& matches, const BarrierSpec& bounds);

}  // namespace rigcal
