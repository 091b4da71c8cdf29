#include <random>

#include "doctest.h"
#include "rigcal/errors.hpp"
#include "rigcal/reprojection.hpp"
#include "test_util.hpp"

using namespace rigcal;

namespace {

struct TwoView {
  SE3Pose pose_i;
  SE3Pose pose_j;
  Intrinsics k;
};

TwoView convergent_views(std::mt19937_64& rng) {
  TwoView v;
  v.pose_i = testutil::random_pose(rng, 0.2, 0.5);
  v.pose_j = v.pose_i;
  v.pose_j.t += Vec3(0.6, 0.05, 0.0);
  v.pose_j.R = v.pose_j.R * rotation_exp(Vec3(0.0, -0.05, 0.0));
  v.k = testutil::default_intrinsics();
  return v;
}

MatchSet project_points(std::mt19937_64& rng, const TwoView& v, int count) {
  MatchSet set;
  set.pixels_i.resize(count, 2);
  set.pixels_j.resize(count, 2);
  int got = 0;
  while (got < count) {
    const Vec3 cam_pt(std::uniform_real_distribution<double>(-1.2, 1.2)(rng),
                      std::uniform_real_distribution<double>(-0.9, 0.9)(rng),
                      std::uniform_real_distribution<double>(3.0, 7.0)(rng));
    const Vec3 world = v.pose_i.apply(cam_pt);
    try {
      const PixelCoord pi = project(world, v.pose_i, v.k);
      const PixelCoord pj = project(world, v.pose_j, v.k);
      set.pixels_i.row(got) << pi.u, pi.v;
      set.pixels_j.row(got) << pj.u, pj.v;
      ++got;
    } catch (const BehindCameraError&) {
      continue;
    }
  }
  return set;
}

// Independent re-derivation: solve the closest-approach normal equations with
// a linear solve, push each ray point through the opposite camera, and
// average plain / smoothed residual norms.
struct OracleResult {
  double metric = 0.0;
  double loss = 0.0;
  int accepted = 0;
};

OracleResult oracle(const MatchSet& set, const SE3Pose& pose_i, const SE3Pose& pose_j,
                    const Intrinsics& k_i, const Intrinsics& k_j) {
  OracleResult out;
  double plain = 0.0, smoothed = 0.0;
  for (int m = 0; m < set.size(); ++m) {
    const Vec3 o1 = pose_i.t;
    const Vec3 o2 = pose_j.t;
    const Vec3 d1 = ray_direction({set.pixels_i(m, 0), set.pixels_i(m, 1)}, k_i, pose_i);
    const Vec3 d2 = ray_direction({set.pixels_j(m, 0), set.pixels_j(m, 1)}, k_j, pose_j);
    // Minimize |o1 + t d1 - o2 - s d2|^2 over (t, s) via the normal equations.
    Eigen::Matrix2d a;
    a << d1.dot(d1), -d1.dot(d2), -d1.dot(d2), d2.dot(d2);
    Eigen::Vector2d b;
    b << (o2 - o1).dot(d1), -(o2 - o1).dot(d2);
    const Eigen::Vector2d ts = a.colPivHouseholderQr().solve(b);
    const double cos_angle = std::abs(d1.dot(d2)) / (d1.norm() * d2.norm());
    if (cos_angle >= std::cos(2.0 * 3.14159265358979323846 / 180.0)) continue;
    if (ts[0] <= 0.0 || ts[1] <= 0.0) continue;
    const Vec3 on_i = o1 + ts[0] * d1;
    const Vec3 on_j = o2 + ts[1] * d2;
    double r_j, r_i;
    try {
      const PixelCoord pj = project(on_i, pose_j, k_j);
      const PixelCoord pi = project(on_j, pose_i, k_i);
      r_j = std::hypot(pj.u - set.pixels_j(m, 0), pj.v - set.pixels_j(m, 1));
      r_i = std::hypot(pi.u - set.pixels_i(m, 0), pi.v - set.pixels_i(m, 1));
    } catch (const BehindCameraError&) {
      continue;
    }
    const double w = kResidualSmoothing;
    plain += r_i + r_j;
    smoothed += std::sqrt(r_i * r_i + w * w) - w + std::sqrt(r_j * r_j + w * w) - w;
    ++out.accepted;
  }
  if (out.accepted > 0) {
    out.metric = plain / out.accepted;
    out.loss = smoothed / out.accepted;
  }
  return out;
}

}  // namespace

TEST_CASE("exact correspondences give zero loss") {
  std::mt19937_64 rng(61);
  const TwoView v = convergent_views(rng);
  const MatchSet set = project_points(rng, v, 25);
  const ReprojectionResult r = reprojection_loss(set, v.pose_i, v.pose_j, v.k, v.k);
  CHECK(r.accepted == 25);
  CHECK(r.rejected == 0);
  CHECK(r.metric < 1e-8);
  // The smoothed objective is quadratic near zero, so it lands far below.
  CHECK(r.loss < 1e-12);
  for (double res : r.residuals) CHECK(res < 1e-8);
}

TEST_CASE("swapping the two views leaves the loss unchanged") {
  std::mt19937_64 rng(62);
  const TwoView v = convergent_views(rng);
  MatchSet set = project_points(rng, v, 20);
  std::normal_distribution<double> noise(0.0, 0.8);
  for (int m = 0; m < set.size(); ++m) {
    set.pixels_j(m, 0) += noise(rng);
    set.pixels_j(m, 1) += noise(rng);
  }
  MatchSet swapped = set;
  std::swap(swapped.pixels_i, swapped.pixels_j);
  std::swap(swapped.frame_i, swapped.frame_j);
  std::swap(swapped.camera_i, swapped.camera_j);

  const ReprojectionResult a = reprojection_loss(set, v.pose_i, v.pose_j, v.k, v.k);
  const ReprojectionResult b = reprojection_loss(swapped, v.pose_j, v.pose_i, v.k, v.k);
  CHECK(a.accepted == b.accepted);
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-10));
  CHECK(a.metric == doctest::Approx(b.metric).epsilon(1e-10));
}

TEST_CASE("loss matches an independent re-implementation") {
  std::mt19937_64 rng(63);
  for (int trial = 0; trial < 25; ++trial) {
    const TwoView v = convergent_views(rng);
    MatchSet set = project_points(rng, v, 15);
    // One-centimeter-scale geometry error expressed as pixel offsets.
    std::normal_distribution<double> noise(0.0, 1.2);
    for (int m = 0; m < set.size(); ++m) {
      set.pixels_i(m, 0) += noise(rng);
      set.pixels_j(m, 1) += noise(rng);
    }
    const ReprojectionResult got = reprojection_loss(set, v.pose_i, v.pose_j, v.k, v.k);
    const OracleResult want = oracle(set, v.pose_i, v.pose_j, v.k, v.k);
    REQUIRE(got.accepted == want.accepted);
    CHECK(got.metric == doctest::Approx(want.metric).epsilon(1e-9));
    CHECK(got.loss == doctest::Approx(want.loss).epsilon(1e-9));
  }
}

TEST_CASE("smoothed objective sits just below the plain mean") {
  std::mt19937_64 rng(64);
  const TwoView v = convergent_views(rng);
  MatchSet set = project_points(rng, v, 30);
  std::normal_distribution<double> noise(0.0, 2.0);
  for (int m = 0; m < set.size(); ++m) {
    set.pixels_j(m, 0) += noise(rng);
    set.pixels_j(m, 1) += noise(rng);
  }
  const ReprojectionResult r = reprojection_loss(set, v.pose_i, v.pose_j, v.k, v.k);
  CHECK(r.loss > 0.0);
  CHECK(r.loss < r.metric);
  // Each direction deviates by at most w from its plain norm, and far less
  // away from the origin (bounded by w^2 / 2n).
  CHECK(r.metric - r.loss <= 2.0 * kResidualSmoothing + 1e-12);
}

TEST_CASE("matches behind the cameras are gated and counted") {
  std::mt19937_64 rng(65);
  const TwoView v = convergent_views(rng);
  MatchSet set = project_points(rng, v, 10);
  // Send one observation to a pixel whose rays diverge: mirror it far across
  // the principal point so the back-projected rays no longer converge.
  set.pixels_i(0, 0) = -4000.0;
  set.pixels_j(0, 0) = 4000.0;
  const ReprojectionResult r = reprojection_loss(set, v.pose_i, v.pose_j, v.k, v.k);
  CHECK(r.accepted + r.rejected == 10);
  CHECK(r.rejected >= 1);
  CHECK(r.residuals[0] == 0.0);
  CHECK(r.status[0] != TriangulationStatus::kAccepted);
}

TEST_CASE("a fully gated set raises NoAcceptedMatches") {
  std::mt19937_64 rng(66);
  TwoView v = convergent_views(rng);
  // Identical camera centers give parallel back-projected rays for every
  // exact correspondence of a pure-rotation pair.
  SE3Pose pose_j = v.pose_i;
  pose_j.R = v.pose_i.R * rotation_exp(Vec3(0.0, 0.02, 0.0));
  MatchSet set;
  set.pixels_i.resize(4, 2);
  set.pixels_j.resize(4, 2);
  int got = 0;
  while (got < 4) {
    const Vec3 cam_pt(std::uniform_real_distribution<double>(-0.5, 0.5)(rng),
                      std::uniform_real_distribution<double>(-0.5, 0.5)(rng), 5.0);
    const Vec3 world = v.pose_i.apply(cam_pt);
    try {
      const PixelCoord pi = project(world, v.pose_i, v.k);
      const PixelCoord pj = project(world, pose_j, v.k);
      set.pixels_i.row(got) << pi.u, pi.v;
      set.pixels_j.row(got) << pj.u, pj.v;
      ++got;
    } catch (const BehindCameraError&) {
      continue;
    }
  }
  CHECK_THROWS_AS(reprojection_loss(set, v.pose_i, pose_j, v.k, v.k),
                  NoAcceptedMatchesError);
}
