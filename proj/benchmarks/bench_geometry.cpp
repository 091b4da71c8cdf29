// Microbenchmarks for the geometric primitives: SE(3) operations, pinhole
// projection, fundamental-matrix assembly, and two-ray triangulation.

#include <benchmark/benchmark.h>

#include <random>

#include "rigcal/camera.hpp"
#include "rigcal/epipolar.hpp"
#include "rigcal/se3.hpp"
#include "rigcal/triangulation.hpp"

namespace {

using namespace rigcal;

std::mt19937_64 rng(12345);

Vec3 random_vec(double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Vec3(u(rng), u(rng), u(rng));
}

SE3Pose random_pose() {
  SE3Pose p;
  p.R = rotation_exp(random_vec(1.0));
  p.t = random_vec(2.0);
  return p;
}

Intrinsics test_intrinsics() {
  Intrinsics k;
  k.fx = 600.0;
  k.fy = 600.0;
  k.cx = 320.0;
  k.cy = 240.0;
  k.width = 640;
  k.height = 480;
  return k;
}

void BM_RotationExp(benchmark::State& state) {
  const Vec3 w = random_vec(1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rotation_exp(w));
  }
}
BENCHMARK(BM_RotationExp);

void BM_Compose(benchmark::State& state) {
  const SE3Pose a = random_pose();
  const SE3Pose b = random_pose();
  for (auto _ : state) {
    benchmark::DoNotOptimize(compose(a, b));
  }
}
BENCHMARK(BM_Compose);

void BM_ApplyRightDelta(benchmark::State& state) {
  const SE3Pose p = random_pose();
  TangentDelta d;
  d.rot = Vec3(0.01, -0.02, 0.005);
  d.trans = Vec3(0.05, 0.0, -0.03);
  for (auto _ : state) {
    benchmark::DoNotOptimize(apply_right_delta(p, d));
  }
}
BENCHMARK(BM_ApplyRightDelta);

void BM_Project(benchmark::State& state) {
  const Intrinsics k = test_intrinsics();
  const SE3Pose pose = random_pose();
  const Vec3 point = pose.apply(Vec3(0.2, -0.1, 4.0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(project(point, pose, k));
  }
}
BENCHMARK(BM_Project);

void BM_PoseDeltaJacobian(benchmark::State& state) {
  const Intrinsics k = test_intrinsics();
  const SE3Pose traj = random_pose();
  SE3Pose extrinsic;
  extrinsic.t = Vec3(0.05, 0.0, 0.0);
  const Vec3 point = compose(traj, extrinsic).apply(Vec3(0.1, 0.1, 5.0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(pose_delta_jacobian(point, traj, extrinsic, k));
  }
}
BENCHMARK(BM_PoseDeltaJacobian);

void BM_FundamentalFromPoses(benchmark::State& state) {
  const Intrinsics k = test_intrinsics();
  const SE3Pose pose_i = random_pose();
  SE3Pose pose_j = pose_i;
  pose_j.t += Vec3(0.3, 0.0, 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fundamental_from_poses(pose_i, pose_j, k, k));
  }
}
BENCHMARK(BM_FundamentalFromPoses);

void BM_Triangulate(benchmark::State& state) {
  const Vec3 o1(0.0, 0.0, 0.0);
  const Vec3 o2(0.4, 0.0, 0.0);
  const Vec3 target(0.5, 0.7, 5.0);
  const Vec3 d1 = (target - o1).normalized();
  const Vec3 d2 = (target - o2).normalized();
  for (auto _ : state) {
    benchmark::DoNotOptimize(triangulate_line_intersection(o1, d1, o2, d2));
  }
}
BENCHMARK(BM_Triangulate);

}  // namespace

BENCHMARK_MAIN();
