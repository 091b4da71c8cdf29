#pragma once

#include "rigcal/image.hpp"
#include "rigcal/types.hpp"

namespace rigcal {

struct YCbCrImage {
  int width = 0;
  int height = 0;
  MatX y;   // luminance, [0,1] for in-range RGB
  MatX cb;  // chroma, 0.5-centered
  MatX cr;
};

// ITU-R BT.601 full-range conversion; exact inverse pair.
YCbCrImage rgb_to_ycbcr(const ImageRGB& image);
ImageRGB ycbcr_to_rgb(const YCbCrImage& image);

// Two-level learnable exposure offset: gain = up(8x8) + up(16x16), bias
// likewise, both bilinearly upsampled and smoothed with a 51x51 Gaussian
// (sigma = 51/6, replicate padding). Identity: gain0 == 1, everything else 0.
struct OffsetGrid {
  static constexpr int kBase = 8;
  static constexpr int kLevel1 = 16;
  static constexpr int kKernel = 51;

  MatX gain0{MatX::Ones(kBase, kBase)};
  MatX gain1{MatX::Zero(kLevel1, kLevel1)};
  MatX bias0{MatX::Zero(kBase, kBase)};
  MatX bias1{MatX::Zero(kLevel1, kLevel1)};
  int target_width = 0;
  int target_height = 0;

  static OffsetGrid identity(int width, int height);
};

struct OffsetMaps {
  MatX gain;
  MatX bias;
};

// Full-resolution gain/bias maps. Throws ImageTooSmall below 51x51.
OffsetMaps render_offset(const OffsetGrid& grid, int width, int height);

// Y' = clamp(gain * Y + bias, 0, 1); chroma untouched. Throws SizeMismatch.
ImageRGB apply_compensation(const ImageRGB& image, const OffsetGrid& grid);

struct FitResult {
  OffsetGrid grid;
  double initial_residual = 0.0;  // ||Y_src - Y_tgt||^2 at the identity grid
  double final_residual = 0.0;
};

// Least-squares fit of the (linear, unclamped) offset model to the luminance
// difference via steepest descent with exact line search.
FitResult fit_offset(const ImageRGB& source, const ImageRGB& target, int iterations = 200);

}  // namespace rigcal
