// Microbenchmarks for loss assembly: Sampson and reprojection terms on one
// match set, the barrier, and the full objective with and without gradients.

#include <benchmark/benchmark.h>

#include "rigcal/loss.hpp"
#include "rigcal/optimizer.hpp"
#include "rigcal/synthetic.hpp"

namespace {

using namespace rigcal;

struct Fixture {
  SyntheticScene scene;
  std::vector<MatchSet> matches;
  DeviceTrajectory traj;
  RigModel rig;
  BarrierSpec bounds = default_bounds();
  LossWeights weights;
  LossToggles toggles;

  Fixture() {
    SceneConfig config;
    config.num_frames = 10;
    config.num_cameras = 2;
    config.num_landmarks = 200;
    config.seed = 7;
    scene = generate_scene(config);
    matches = synthesize_matches(scene, {1, 2}, 0.3, 99);
    NoiseSpec noise;
    noise.device_rot_sigma_deg = 0.3;
    noise.seed = 5;
    const PerturbedState state = perturb(scene, noise);
    traj = state.trajectory;
    rig = state.rig;
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_SampsonLoss(benchmark::State& state) {
  const Fixture& f = fixture();
  const MatchSet& set = f.matches.front();
  const int cam_i = f.rig.camera_index(set.camera_i);
  const int cam_j = f.rig.camera_index(set.camera_j);
  const SE3Pose pose_i = effective_pose(f.traj, f.rig, set.frame_i, cam_i);
  const SE3Pose pose_j = effective_pose(f.traj, f.rig, set.frame_j, cam_j);
  const FundamentalMatrix fm = fundamental_from_poses(
      pose_j, pose_i, f.rig.cameras[cam_j].intrinsics, f.rig.cameras[cam_i].intrinsics);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sampson_loss(set, fm));
  }
  state.SetItemsProcessed(state.iterations() * set.size());
}
BENCHMARK(BM_SampsonLoss);

void BM_ReprojectionLoss(benchmark::State& state) {
  const Fixture& f = fixture();
  const MatchSet& set = f.matches.front();
  const int cam_i = f.rig.camera_index(set.camera_i);
  const int cam_j = f.rig.camera_index(set.camera_j);
  const SE3Pose pose_i = effective_pose(f.traj, f.rig, set.frame_i, cam_i);
  const SE3Pose pose_j = effective_pose(f.traj, f.rig, set.frame_j, cam_j);
  for (auto _ : state) {
    benchmark::DoNotOptimize(reprojection_loss(set, pose_i, pose_j,
                                               f.rig.cameras[cam_i].intrinsics,
                                               f.rig.cameras[cam_j].intrinsics));
  }
  state.SetItemsProcessed(state.iterations() * set.size());
}
BENCHMARK(BM_ReprojectionLoss);

void BM_TotalLossValue(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(total_loss(f.traj, f.rig, f.matches, f.weights, f.bounds,
                                        1.0, f.toggles, /*with_gradient=*/false));
  }
}
BENCHMARK(BM_TotalLossValue);

void BM_TotalLossGradient(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(total_loss(f.traj, f.rig, f.matches, f.weights, f.bounds,
                                        1.0, f.toggles, /*with_gradient=*/true));
  }
}
BENCHMARK(BM_TotalLossGradient);

void BM_GeometricMetrics(benchmark::State& state) {
  const Fixture& f = fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(geometric_metrics(f.traj, f.rig, f.matches));
  }
}
BENCHMARK(BM_GeometricMetrics);

}  // namespace

BENCHMARK_MAIN();
