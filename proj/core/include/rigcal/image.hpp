#pragma once

#include <string>
#include <vector>

namespace rigcal {

// Interleaved RGB with double channels in [0,1].
struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // 3 * width * height, r g b order

  static ImageRGB constant(int width, int height, double r, double g, double b);

  double& at(int x, int y, int ch) { return pixels[3 * (static_cast<size_t>(y) * width + x) + ch]; }
  double at(int x, int y, int ch) const {
    return pixels[3 * (static_cast<size_t>(y) * width + x) + ch];
  }
};

// Dispatches on extension: .png via libpng, .ppm as binary P6.
ImageRGB read_image(const std::string& path);
void write_image(const std::string& path, const ImageRGB& image);

ImageRGB read_png(const std::string& path);
void write_png(const std::string& path, const ImageRGB& image);
ImageRGB read_ppm(const std::string& path);
void write_ppm(const std::string& path, const ImageRGB& image);

}  // namespace rigcal
