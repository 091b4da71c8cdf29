#pragma once

// Shared helpers for the test suite: seeded random geometry, scratch
// directories, and a small radix-2 FFT used by the exposure spectrum checks.

#include <complex>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "rigcal/camera.hpp"
#include "rigcal/se3.hpp"
#include "rigcal/types.hpp"

namespace testutil {

inline rigcal::Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return rigcal::Vec3(u(rng), u(rng), u(rng));
}

inline rigcal::Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  rigcal::Vec3 v(n(rng), n(rng), n(rng));
  while (v.norm() < 1e-6) v = rigcal::Vec3(n(rng), n(rng), n(rng));
  return v.normalized();
}

inline rigcal::SE3Pose random_pose(std::mt19937_64& rng, double rot_scale = 1.0,
                                   double trans_scale = 2.0) {
  rigcal::SE3Pose p;
  p.R = rigcal::rotation_exp(random_vec(rng, rot_scale));
  p.t = random_vec(rng, trans_scale);
  return p;
}

inline rigcal::Intrinsics default_intrinsics() {
  rigcal::Intrinsics k;
  k.fx = 600.0;
  k.fy = 600.0;
  k.cx = 320.0;
  k.cy = 240.0;
  k.width = 640;
  k.height = 480;
  return k;
}

// Unique scratch directory, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("rigcal_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

// In-place radix-2 Cooley-Tukey FFT; n must be a power of two.
inline void fft_1d(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * 3.14159265358979323846 / static_cast<double>(len);
    const std::complex<double> wl(std::cos(angle), std::sin(angle));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

// 2-D power spectrum of a real matrix whose dimensions are powers of two.
inline rigcal::MatX power_spectrum(const rigcal::MatX& m) {
  const size_t h = static_cast<size_t>(m.rows());
  const size_t w = static_cast<size_t>(m.cols());
  std::vector<std::vector<std::complex<double>>> rows(
      h, std::vector<std::complex<double>>(w));
  for (size_t y = 0; y < h; ++y) {
    for (size_t x = 0; x < w; ++x) {
      rows[y][x] = m(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x));
    }
    fft_1d(rows[y]);
  }
  rigcal::MatX power(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(w));
  std::vector<std::complex<double>> col(h);
  for (size_t x = 0; x < w; ++x) {
    for (size_t y = 0; y < h; ++y) col[y] = rows[y][x];
    fft_1d(col);
    for (size_t y = 0; y < h; ++y) {
      power(static_cast<Eigen::Index>(y), static_cast<Eigen::Index>(x)) =
          std::norm(col[y]);
    }
  }
  return power;
}

// Fraction of total spectral energy at frequencies at or below cutoff_num /
// cutoff_den of the Nyquist frequency on both axes (DC included).
inline double low_frequency_energy_fraction(const rigcal::MatX& m, int cutoff_num,
                                            int cutoff_den) {
  const rigcal::MatX power = power_spectrum(m);
  const Eigen::Index h = power.rows();
  const Eigen::Index w = power.cols();
  const double cut_y = static_cast<double>(h / 2) * cutoff_num / cutoff_den;
  const double cut_x = static_cast<double>(w / 2) * cutoff_num / cutoff_den;
  double total = 0.0;
  double low = 0.0;
  for (Eigen::Index y = 0; y < h; ++y) {
    const double fy = std::min<double>(y, h - y);
    for (Eigen::Index x = 0; x < w; ++x) {
      const double fx = std::min<double>(x, w - x);
      total += power(y, x);
      if (fy <= cut_y && fx <= cut_x) low += power(y, x);
    }
  }
  return total > 0.0 ? low / total : 1.0;
}

}  // namespace testutil
