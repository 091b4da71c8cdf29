#include "rigcal/barrier.hpp"

#include <fmt/core.h>

#include <cmath>

#include "rigcal/errors.hpp"

namespace rigcal {

namespace {

void check_interior(double x, double lower, double upper) {
  if (x <= lower || x >= upper) {
    throw OutOfBoundsError(
        fmt::format("parameter {} outside feasible interval ({}, {})", x, lower, upper));
  }
}

}  // namespace

const Interval& BarrierSpec::pose_interval(ParamGroupId id) const {
  switch (id) {
    case ParamGroupId::kPhiRot: return phi_rot;
    case ParamGroupId::kPhiTrans: return phi_trans;
    case ParamGroupId::kRhoRot: return rho_rot;
    case ParamGroupId::kRhoTrans: return rho_trans;
    default:
      throw Error("pose_interval called with intrinsic group");
  }
}

Interval BarrierSpec::intrinsic_interval(double initial_value) const {
  const double half = intrinsic_rel * std::abs(initial_value);
  return {-half, half};
}

Interval BarrierSpec::interval_for(ParamGroupId id, double initial_value) const {
  switch (id) {
    case ParamGroupId::kPhiRot:
    case ParamGroupId::kPhiTrans:
    case ParamGroupId::kRhoRot:
    case ParamGroupId::kRhoTrans:
      return pose_interval(id);
    default:
      return intrinsic_interval(initial_value);
  }
}

BarrierSpec default_bounds() {
  constexpr double kDeg = M_PI / 180.0;
  BarrierSpec spec;
  spec.phi_rot = {-0.625 * kDeg, 0.625 * kDeg};
  spec.rho_rot = {-2.5 * kDeg, 2.5 * kDeg};
  spec.phi_trans = {-0.125, 0.125};
  spec.rho_trans = {-0.5, 0.5};
  spec.intrinsic_rel = 0.02;
  return spec;
}

double temperature(const TemperatureSchedule& schedule, int iter) {
  if (schedule.total_iters <= 0) return schedule.t_end;
  const double frac = static_cast<double>(iter) / schedule.total_iters;
  return schedule.t_start * std::pow(schedule.t_end / schedule.t_start, frac);
}

double barrier_value(double x, double lower, double upper, double temp) {
  check_interior(x, lower, upper);
  const double half_range = 0.5 * (upper - lower);
  // Offset = value at midpoint, so the initial parameter contributes zero.
  const double offset = -2.0 * std::log(half_range);
  return (-(std::log(x - lower) + std::log(upper - x)) - offset) / temp;
}

double barrier_gradient(double x, double lower, double upper, double temp) {
  check_interior(x, lower, upper);
  return (1.0 / (upper - x) - 1.0 / (x - lower)) / temp;
}

}  // namespace rigcal
