#include "rigcal/image.hpp"

#include <fmt/core.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "rigcal/errors.hpp"

namespace rigcal {

namespace {

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                    [](char a, char b) { return std::tolower(a) == std::tolower(b); });
}

}  // namespace

ImageRGB ImageRGB::constant(int width, int height, double r, double g, double b) {
  ImageRGB img;
  img.width = width;
  img.height = height;
  img.pixels.resize(3 * static_cast<size_t>(width) * height);
  for (size_t i = 0; i < img.pixels.size(); i += 3) {
    img.pixels[i] = r;
    img.pixels[i + 1] = g;
    img.pixels[i + 2] = b;
  }
  return img;
}

ImageRGB read_png(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw ParseError(fmt::format("cannot open '{}'", path));

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError(fmt::format("malformed PNG '{}'", path));
  }
  png_init_io(png, file.get());
  png_read_info(png, info);

  // Normalize every input layout to 8-bit RGB.
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  ImageRGB img;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.pixels.resize(3 * static_cast<size_t>(img.width) * img.height);

  std::vector<unsigned char> row(3 * static_cast<size_t>(img.width));
  for (int y = 0; y < img.height; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < img.width; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        img.at(x, y, ch) = row[3 * static_cast<size_t>(x) + ch] / 255.0;
      }
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const std::string& path, const ImageRGB& image) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(fmt::format("cannot write '{}'", path));

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(fmt::format("PNG write failed for '{}'", path));
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<unsigned char> row(3 * static_cast<size_t>(image.width));
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        row[3 * static_cast<size_t>(x) + ch] = to_byte(image.at(x, y, ch));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageRGB read_ppm(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw ParseError(fmt::format("cannot open '{}'", path));

  char magic[3] = {};
  int width = 0, height = 0, maxval = 0;
  if (std::fscanf(file.get(), "%2s %d %d %d", magic, &width, &height, &maxval) != 4 ||
      std::string(magic) != "P6" || width <= 0 || height <= 0 || maxval != 255) {
    throw ParseError(fmt::format("unsupported PPM header in '{}'", path));
  }
  std::fgetc(file.get());  // single whitespace after maxval

  ImageRGB img;
  img.width = width;
  img.height = height;
  img.pixels.resize(3 * static_cast<size_t>(width) * height);
  std::vector<unsigned char> raw(img.pixels.size());
  if (std::fread(raw.data(), 1, raw.size(), file.get()) != raw.size()) {
    throw ParseError(fmt::format("truncated PPM data in '{}'", path));
  }
  for (size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i] / 255.0;
  return img;
}

void write_ppm(const std::string& path, const ImageRGB& image) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(fmt::format("cannot write '{}'", path));
  const std::string header = fmt::format("P6\n{} {}\n255\n", image.width, image.height);
  std::fwrite(header.data(), 1, header.size(), file.get());
  std::vector<unsigned char> raw(image.pixels.size());
  for (size_t i = 0; i < raw.size(); ++i) raw[i] = to_byte(image.pixels[i]);
  std::fwrite(raw.data(), 1, raw.size(), file.get());
}

ImageRGB read_image(const std::string& path) {
  if (has_suffix(path, ".png")) return read_png(path);
  if (has_suffix(path, ".ppm")) return read_ppm(path);
  throw ParseError(fmt::format("unsupported image extension in '{}'", path));
}

void write_image(const std::string& path, const ImageRGB& image) {
  if (has_suffix(path, ".png")) {
    write_png(path, image);
  } else if (has_suffix(path, ".ppm")) {
    write_ppm(path, image);
  } else {
    throw ParseError(fmt::format("unsupported image extension in '{}'", path));
  }
}

}  // namespace rigcal
