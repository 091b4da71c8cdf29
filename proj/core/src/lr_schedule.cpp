#include "rigcal/lr_schedule.hpp"

#include <algorithm>
#include <cmath>

namespace rigcal {

namespace {
constexpr double kFloor = 0.01;  // fraction of the segment peak kept at its end
}

double base_lr_for_group(const LRSchedule& schedule, ParamGroupId id) {
  switch (id) {
    case ParamGroupId::kPhiRot:
    case ParamGroupId::kPhiTrans:
    case ParamGroupId::kRhoRot:
    case ParamGroupId::kRhoTrans:
      return schedule.base_extrinsic;
    default:
      return schedule.base_intrinsic;
  }
}

double cosine_restart_factor(int iter, int max_iter) {
  if (max_iter <= 0) return 1.0;
  iter = std::clamp(iter, 0, max_iter);
  const int r1 = max_iter / 6;
  const int r2 = max_iter / 2;
  int seg_start = 0;
  int seg_end = r1;
  if (iter >= r2) {
    seg_start = r2;
    seg_end = max_iter;
  } else if (iter >= r1) {
    seg_start = r1;
    seg_end = r2;
  }
  const double len = std::max(1, seg_end - seg_start);
  const double phase = (iter - seg_start) / len;
  return kFloor + (1.0 - kFloor) * 0.5 * (1.0 + std::cos(M_PI * phase));
}

}  // namespace rigcal
