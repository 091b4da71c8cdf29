#pragma once

#include <string>

#include "rigcal/types.hpp"

namespace rigcal {

// Pixel correspondences between two views: camera_i at frame_i matched
// against camera_j at frame_j = frame_i + n, 1 <= n <= 3.
struct MatchSet {
  int frame_i = 0;
  int frame_j = 0;
  std::string camera_i;
  std::string camera_j;
  Eigen::Matrix<double, Eigen::Dynamic, 2> pixels_i;
  Eigen::Matrix<double, Eigen::Dynamic, 2> pixels_j;

  Eigen::Index size() const { return pixels_i.rows(); }
};

}  // namespace rigcal
