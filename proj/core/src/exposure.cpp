#include "rigcal/exposure.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>

#include "rigcal/errors.hpp"

namespace rigcal {

namespace {

// BT.601 luma weights; chroma scales derived so the pair inverts exactly.
constexpr double kKr = 0.299;
constexpr double kKg = 0.587;
constexpr double kKb = 0.114;

double lerp(double a, double b, double t) { return a + t * (b - a); }

// Bilinear upsample of an n x n grid to w x h, exact on constant grids.
void upsample_add(const MatX& grid, MatX& out) {
  const int n = static_cast<int>(grid.rows());
  const int w = static_cast<int>(out.cols());
  const int h = static_cast<int>(out.rows());
  for (int y = 0; y < h; ++y) {
    const double gy = std::clamp((y + 0.5) * n / h - 0.5, 0.0, n - 1.0);
    const int y0 = static_cast<int>(gy);
    const int y1 = std::min(y0 + 1, n - 1);
    const double fy = gy - y0;
    for (int x = 0; x < w; ++x) {
      const double gx = std::clamp((x + 0.5) * n / w - 0.5, 0.0, n - 1.0);
      const int x0 = static_cast<int>(gx);
      const int x1 = std::min(x0 + 1, n - 1);
      const double fx = gx - x0;
      const double v0 = lerp(grid(y0, x0), grid(y0, x1), fx);
      const double v1 = lerp(grid(y1, x0), grid(y1, x1), fx);
      out(y, x) += lerp(v0, v1, fy);
    }
  }
}

// Adjoint of upsample_add: scatter the field back into grid cells.
void upsample_adjoint_add(const MatX& field, MatX& grid) {
  const int n = static_cast<int>(grid.rows());
  const int w = static_cast<int>(field.cols());
  const int h = static_cast<int>(field.rows());
  for (int y = 0; y < h; ++y) {
    const double gy = std::clamp((y + 0.5) * n / h - 0.5, 0.0, n - 1.0);
    const int y0 = static_cast<int>(gy);
    const int y1 = std::min(y0 + 1, n - 1);
    const double fy = gy - y0;
    for (int x = 0; x < w; ++x) {
      const double gx = std::clamp((x + 0.5) * n / w - 0.5, 0.0, n - 1.0);
      const int x0 = static_cast<int>(gx);
      const int x1 = std::min(x0 + 1, n - 1);
      const double fx = gx - x0;
      const double v = field(y, x);
      grid(y0, x0) += (1.0 - fx) * (1.0 - fy) * v;
      grid(y0, x1) += fx * (1.0 - fy) * v;
      grid(y1, x0) += (1.0 - fx) * fy * v;
      grid(y1, x1) += fx * fy * v;
    }
  }
}

struct Kernel {
  std::array<double, OffsetGrid::kKernel> w{};
  double sum = 0.0;

  Kernel() {
    const double sigma = OffsetGrid::kKernel / 6.0;
    const int c = OffsetGrid::kKernel / 2;
    for (int k = 0; k < OffsetGrid::kKernel; ++k) {
      w[static_cast<size_t>(k)] = std::exp(-0.5 * (k - c) * (k - c) / (sigma * sigma));
    }
    for (double v : w) sum += v;
  }
};

const Kernel& kernel() {
  static const Kernel k;
  return k;
}

// Separable Gaussian with replicate padding. Dividing the accumulated sum by
// the kernel sum (same accumulation order) keeps constants bit-exact.
MatX blur(const MatX& in) {
  const Kernel& k = kernel();
  const int c = OffsetGrid::kKernel / 2;
  const int h = static_cast<int>(in.rows());
  const int w = static_cast<int>(in.cols());
  MatX mid(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = 0; t < OffsetGrid::kKernel; ++t) {
        acc += k.w[static_cast<size_t>(t)] * in(y, std::clamp(x + t - c, 0, w - 1));
      }
      mid(y, x) = acc / k.sum;
    }
  }
  MatX out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int t = 0; t < OffsetGrid::kKernel; ++t) {
        acc += k.w[static_cast<size_t>(t)] * mid(std::clamp(y + t - c, 0, h - 1), x);
      }
      out(y, x) = acc / k.sum;
    }
  }
  return out;
}

// Exact adjoint of blur: vertical scatter first, then horizontal.
MatX blur_adjoint(const MatX& in) {
  const Kernel& k = kernel();
  const int c = OffsetGrid::kKernel / 2;
  const int h = static_cast<int>(in.rows());
  const int w = static_cast<int>(in.cols());
  MatX mid = MatX::Zero(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = in(y, x) / k.sum;
      for (int t = 0; t < OffsetGrid::kKernel; ++t) {
        mid(std::clamp(y + t - c, 0, h - 1), x) += k.w[static_cast<size_t>(t)] * v;
      }
    }
  }
  MatX out = MatX::Zero(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = mid(y, x) / k.sum;
      for (int t = 0; t < OffsetGrid::kKernel; ++t) {
        out(y, std::clamp(x + t - c, 0, w - 1)) += k.w[static_cast<size_t>(t)] * v;
      }
    }
  }
  return out;
}

void check_size(int width, int height) {
  if (width < OffsetGrid::kKernel || height < OffsetGrid::kKernel) {
    throw ImageTooSmallError(fmt::format("offset rendering needs at least {}x{}, got {}x{}",
                                         OffsetGrid::kKernel, OffsetGrid::kKernel, width,
                                         height));
  }
}

}  // namespace

YCbCrImage rgb_to_ycbcr(const ImageRGB& image) {
  YCbCrImage out;
  out.width = image.width;
  out.height = image.height;
  out.y.resize(image.height, image.width);
  out.cb.resize(image.height, image.width);
  out.cr.resize(image.height, image.width);
  for (int yy = 0; yy < image.height; ++yy) {
    for (int x = 0; x < image.width; ++x) {
      const double r = image.at(x, yy, 0);
      const double g = image.at(x, yy, 1);
      const double b = image.at(x, yy, 2);
      const double luma = kKr * r + kKg * g + kKb * b;
      out.y(yy, x) = luma;
      out.cb(yy, x) = 0.5 + 0.5 * (b - luma) / (1.0 - kKb);
      out.cr(yy, x) = 0.5 + 0.5 * (r - luma) / (1.0 - kKr);
    }
  }
  return out;
}

ImageRGB ycbcr_to_rgb(const YCbCrImage& image) {
  ImageRGB out;
  out.width = image.width;
  out.height = image.height;
  out.pixels.resize(3 * static_cast<size_t>(image.width) * image.height);
  for (int yy = 0; yy < image.height; ++yy) {
    for (int x = 0; x < image.width; ++x) {
      const double luma = image.y(yy, x);
      const double r = luma + 2.0 * (1.0 - kKr) * (image.cr(yy, x) - 0.5);
      const double b = luma + 2.0 * (1.0 - kKb) * (image.cb(yy, x) - 0.5);
      const double g = (luma - kKr * r - kKb * b) / kKg;
      out.at(x, yy, 0) = r;
      out.at(x, yy, 1) = g;
      out.at(x, yy, 2) = b;
    }
  }
  return out;
}

OffsetGrid OffsetGrid::identity(int width, int height) {
  OffsetGrid grid;
  grid.target_width = width;
  grid.target_height = height;
  return grid;
}

OffsetMaps render_offset(const OffsetGrid& grid, int width, int height) {
  check_size(width, height);
  MatX gain = MatX::Zero(height, width);
  MatX bias = MatX::Zero(height, width);
  upsample_add(grid.gain0, gain);
  upsample_add(grid.gain1, gain);
  upsample_add(grid.bias0, bias);
  upsample_add(grid.bias1, bias);
  return {blur(gain), blur(bias)};
}

ImageRGB apply_compensation(const ImageRGB& image, const OffsetGrid& grid) {
  if (grid.target_width != image.width || grid.target_height != image.height) {
    throw SizeMismatchError(fmt::format("grid targets {}x{} but image is {}x{}",
                                        grid.target_width, grid.target_height, image.width,
                                        image.height));
  }
  const OffsetMaps maps = render_offset(grid, image.width, image.height);
  YCbCrImage ycbcr = rgb_to_ycbcr(image);
  for (int yy = 0; yy < image.height; ++yy) {
    for (int x = 0; x < image.width; ++x) {
      ycbcr.y(yy, x) =
          std::clamp(maps.gain(yy, x) * ycbcr.y(yy, x) + maps.bias(yy, x), 0.0, 1.0);
    }
  }
  return ycbcr_to_rgb(ycbcr);
}

FitResult fit_offset(const ImageRGB& source, const ImageRGB& target, int iterations) {
  if (source.width != target.width || source.height != target.height) {
    throw SizeMismatchError(fmt::format("source is {}x{} but target is {}x{}", source.width,
                                        source.height, target.width, target.height));
  }
  check_size(source.width, source.height);
  const MatX y_src = rgb_to_ycbcr(source).y;
  const MatX y_tgt = rgb_to_ycbcr(target).y;

  FitResult result;
  result.grid = OffsetGrid::identity(source.width, source.height);
  result.initial_residual = (y_src - y_tgt).squaredNorm();

  // Linear model r(theta) = blur(up(gains)) .* Y_src + blur(up(biases)) - Y_tgt.
  const auto forward = [&](const OffsetGrid& g) {
    const OffsetMaps maps = render_offset(g, source.width, source.height);
    return (maps.gain.array() * y_src.array() + maps.bias.array()).matrix().eval();
  };
  const auto adjoint = [&](const MatX& field, OffsetGrid& g) {
    const MatX gain_part = blur_adjoint((field.array() * y_src.array()).matrix());
    const MatX bias_part = blur_adjoint(field);
    g.gain0.setZero();
    g.gain1.setZero();
    g.bias0.setZero();
    g.bias1.setZero();
    upsample_adjoint_add(gain_part, g.gain0);
    upsample_adjoint_add(gain_part, g.gain1);
    upsample_adjoint_add(bias_part, g.bias0);
    upsample_adjoint_add(bias_part, g.bias1);
  };

  MatX residual = forward(result.grid) - y_tgt;
  OffsetGrid direction = OffsetGrid::identity(source.width, source.height);
  for (int it = 0; it < iterations; ++it) {
    adjoint(residual, direction);
    const double num = direction.gain0.squaredNorm() + direction.gain1.squaredNorm() +
                       direction.bias0.squaredNorm() + direction.bias1.squaredNorm();
    const MatX a_dir = forward(direction);
    const double denom = a_dir.squaredNorm();
    if (denom <= 1e-30 || num <= 1e-30) break;
    const double alpha = num / denom;
    result.grid.gain0 -= alpha * direction.gain0;
    result.grid.gain1 -= alpha * direction.gain1;
    result.grid.bias0 -= alpha * direction.bias0;
    result.grid.bias1 -= alpha * direction.bias1;
    residual -= alpha * a_dir;
  }
  result.final_residual = (forward(result.grid) - y_tgt).squaredNorm();
  return result;
}

}  // namespace rigcal
