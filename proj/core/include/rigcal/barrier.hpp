#pragma once

#include <array>

#include "rigcal/rig.hpp"

namespace rigcal {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;

  double midpoint() const { return 0.5 * (lower + upper); }
  double range() const { return upper - lower; }
  bool contains(double x) const { return x > lower && x < upper; }
};

// Box bounds per parameter group. Pose-delta bounds are absolute (rad / m);
// intrinsic bounds are relative, a fraction of each camera's initial value,
// and resolved per camera at use time.
struct BarrierSpec {
  Interval phi_rot;
  Interval phi_trans;
  Interval rho_rot;
  Interval rho_trans;
  double intrinsic_rel = 0.0;  // e.g. 0.02 for +/-2%

  const Interval& pose_interval(ParamGroupId id) const;
  // Interval for one intrinsic delta given that scalar's initial value.
  Interval intrinsic_interval(double initial_value) const;
  // Interval for any group; intrinsic groups need the initial scalar value.
  Interval interval_for(ParamGroupId id, double initial_value = 0.0) const;
};

// Pose deltas ±0.625°/±2.5° rot, ±0.125/±0.5 m trans; intrinsics ±2%.
BarrierSpec default_bounds();

struct TemperatureSchedule {
  double t_start = 1.0;
  double t_end = 1e4;
  int total_iters = 1;
};

// Geometric interpolation t_start * (t_end/t_start)^(iter/total).
double temperature(const TemperatureSchedule& schedule, int iter);

// -(1/T) [log(x-lo) + log(hi-x)], offset so the midpoint scores 0.
double barrier_value(double x, double lower, double upper, double temp);

// (1/T) [1/(hi-x) - 1/(x-lo)]; derivative of barrier_value.
double barrier_gradient(double x, double lower, double upper, double temp);

}  // namespace rigcal
