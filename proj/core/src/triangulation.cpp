#include "rigcal/triangulation.hpp"

#include <cmath>

namespace rigcal {

namespace {
// cos(2 deg); |d1.d2| above this means the rays are too close to parallel.
const double kParallelCos = std::cos(2.0 * M_PI / 180.0);
}

TriangulationResult triangulate_line_intersection(const Vec3& o1, const Vec3& d1,
                                                  const Vec3& o2, const Vec3& d2) {
  TriangulationResult res;
  const double a = d1.dot(d1);
  const double b = d1.dot(d2);
  const double c = d2.dot(d2);
  const Vec3 x21 = o2 - o1;
  const double p = x21.dot(d1);
  const double q = x21.dot(d2);
  const double denom = a * c - b * b;

  const double cos_angle = std::abs(b) / std::sqrt(a * c);
  if (cos_angle >= kParallelCos) {
    res.status = TriangulationStatus::kNearParallel;
    return res;
  }

  res.t = (c * p - b * q) / denom;
  res.s = (b * p - a * q) / denom;
  const Vec3 p1 = o1 + res.t * d1;
  const Vec3 p2 = o2 + res.s * d2;
  res.midpoint = 0.5 * (p1 + p2);
  res.gap = (p2 - p1).norm();
  res.depth_i = res.t * std::sqrt(a);
  res.depth_j = res.s * std::sqrt(c);

  if (res.t <= 0.0 || res.s <= 0.0) {
    res.status = TriangulationStatus::kBehindCamera;
  }
  return res;
}

}  // namespace rigcal
