#pragma once

#include "rigcal/types.hpp"

namespace rigcal {

enum class TriangulationStatus { kAccepted, kBehindCamera, kNearParallel };

struct TriangulationResult {
  double t = 0.0;               // parameter along ray 1; equals range for unit d1
  double s = 0.0;               // parameter along ray 2
  Vec3 midpoint = Vec3::Zero(); // half-way point of the closest-approach segment
  double depth_i = 0.0;         // distance from o1 along ray 1 (= t for unit d1)
  double depth_j = 0.0;         // distance from o2 along ray 2
  double gap = 0.0;             // closest-approach distance between the lines
  TriangulationStatus status = TriangulationStatus::kAccepted;

  bool accepted() const { return status == TriangulationStatus::kAccepted; }
};

// Closest-approach parameters of two 3-D lines o + t*d. The connecting
// segment must be perpendicular to both directions, which gives
//   t = (c p - b q) / (a c - b^2),  s = (b p - a q) / (a c - b^2)
// with a = d1.d1, b = d1.d2, c = d2.d2, p = (o2-o1).d1, q = (o2-o1).d2.
// Rejections: near_parallel when the ray angle is under 2 degrees,
// behind_camera when t or s is non-positive.
TriangulationResult triangulate_line_intersection(const Vec3& o1, const Vec3& d1,
                                                  const Vec3& o2, const Vec3& d2);

}  // namespace rigcal
