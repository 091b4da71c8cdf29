#include <cmath>

#include "doctest.h"
#include "rigcal/barrier.hpp"
#include "test_util.hpp"

using namespace rigcal;

TEST_CASE("hand-checked barrier value") {
  // -(log(x - lo) + log(hi - x)) + 2 log(half range), all over T:
  // x = 0.5 in [-1, 1], T = 1 -> -(log 1.5 + log 0.5) + 2 log 1 = 0.2876820724...
  CHECK(barrier_value(0.5, -1.0, 1.0, 1.0) ==
        doctest::Approx(0.28768207245178085).epsilon(1e-12));
  // Doubling the temperature halves the penalty.
  CHECK(barrier_value(0.5, -1.0, 1.0, 2.0) ==
        doctest::Approx(0.5 * 0.28768207245178085).epsilon(1e-12));
}

TEST_CASE("barrier is zero at the midpoint and symmetric") {
  CHECK(barrier_value(0.0, -1.0, 1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(barrier_value(2.5, 2.0, 3.0, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
  for (double x : {0.1, 0.4, 0.73, 0.9}) {
    CHECK(barrier_value(x, -1.0, 1.0, 1.0) ==
          doctest::Approx(barrier_value(-x, -1.0, 1.0, 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("barrier diverges toward the boundary") {
  double prev = barrier_value(0.5, -1.0, 1.0, 1.0);
  for (double x : {0.9, 0.99, 0.999, 0.9999999}) {
    const double v = barrier_value(x, -1.0, 1.0, 1.0);
    CHECK(v > prev);
    prev = v;
  }
  CHECK(prev > 10.0);
}

TEST_CASE("barrier gradient matches finite differences") {
  const double h = 1e-7;
  for (double t : {1.0, 10.0, 123.0}) {
    for (double x : {-0.8, -0.3, 0.0, 0.2, 0.7, 0.95}) {
      const double fd =
          (barrier_value(x + h, -1.0, 1.0, t) - barrier_value(x - h, -1.0, 1.0, t)) /
          (2 * h);
      const double g = barrier_gradient(x, -1.0, 1.0, t);
      CHECK(std::abs(g - fd) < 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
  // Gradient points away from the nearer boundary (uphill toward it).
  CHECK(barrier_gradient(0.9, -1.0, 1.0, 1.0) > 0.0);
  CHECK(barrier_gradient(-0.9, -1.0, 1.0, 1.0) < 0.0);
  CHECK(barrier_gradient(0.0, -1.0, 1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("default bounds carry the pinned constants") {
  const BarrierSpec b = default_bounds();
  const double deg = 3.14159265358979323846 / 180.0;
  CHECK(b.phi_rot.upper == doctest::Approx(0.625 * deg).epsilon(1e-12));
  CHECK(b.phi_rot.lower == doctest::Approx(-0.625 * deg).epsilon(1e-12));
  CHECK(b.rho_rot.upper == doctest::Approx(2.5 * deg).epsilon(1e-12));
  CHECK(b.phi_trans.upper == 0.125);
  CHECK(b.rho_trans.upper == 0.5);
  CHECK(b.intrinsic_rel == 0.02);

  // +/-2% of a 600 px focal length -> a symmetric delta window of +/-12 px.
  const Interval fx = b.intrinsic_interval(600.0);
  CHECK(fx.lower == doctest::Approx(-12.0).epsilon(1e-12));
  CHECK(fx.upper == doctest::Approx(12.0).epsilon(1e-12));
  const Interval cx = b.intrinsic_interval(320.0);
  CHECK(cx.range() == doctest::Approx(12.8).epsilon(1e-12));

  CHECK(b.pose_interval(ParamGroupId::kPhiRot).upper == b.phi_rot.upper);
  CHECK(b.pose_interval(ParamGroupId::kRhoTrans).upper == b.rho_trans.upper);
  CHECK(b.interval_for(ParamGroupId::kFx, 600.0).upper ==
        doctest::Approx(12.0).epsilon(1e-12));
  CHECK(b.interval_for(ParamGroupId::kPhiTrans).upper == 0.125);
}

TEST_CASE("interval helpers") {
  const Interval i{-2.0, 6.0};
  CHECK(i.midpoint() == 2.0);
  CHECK(i.range() == 8.0);
  CHECK(i.contains(0.0));
  CHECK(!i.contains(-2.0));  // open at the ends
  CHECK(!i.contains(6.0));
  CHECK(!i.contains(7.0));
}

TEST_CASE("temperature schedule is geometric") {
  TemperatureSchedule s;
  s.t_start = 1.0;
  s.t_end = 1e4;
  s.total_iters = 5000;
  CHECK(temperature(s, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(temperature(s, 5000) == doctest::Approx(1e4).epsilon(1e-12));
  // Geometric interpolation passes through 100 at the halfway point.
  CHECK(temperature(s, 2500) == doctest::Approx(100.0).epsilon(1e-12));
  // Monotone non-decreasing along the run.
  double prev = temperature(s, 0);
  for (int it = 1; it <= 5000; it += 97) {
    const double cur = temperature(s, it);
    CHECK(cur >= prev);
    prev = cur;
  }
}

TEST_CASE("flat temperature schedule") {
  TemperatureSchedule s;
  s.t_start = 7.0;
  s.t_end = 7.0;
  s.total_iters = 100;
  CHECK(temperature(s, 0) == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(temperature(s, 50) == doctest::Approx(7.0).epsilon(1e-12));
  CHECK(temperature(s, 100) == doctest::Approx(7.0).epsilon(1e-12));
}
