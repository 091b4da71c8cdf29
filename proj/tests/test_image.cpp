// PPM/PNG image I/O: quantization, roundtrips, dispatch, and failure modes.
#include <doctest/doctest.h>

#include <cmath>
#include <fstream>
#include <string>

#include "rigcal/errors.hpp"
#include "rigcal/image.hpp"
#include "test_util.hpp"

using namespace rigcal;

namespace {

// Every channel an exact multiple of 1/255 so 8-bit files roundtrip exactly.
ImageRGB quantized_test_image(int width, int height) {
  ImageRGB img = ImageRGB::constant(width, height, 0.0, 0.0, 0.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int ch = 0; ch < 3; ++ch) {
        img.at(x, y, ch) = ((x * 3 + y * 5 + ch * 7) % 256) / 255.0;
      }
    }
  }
  return img;
}

bool images_equal(const ImageRGB& a, const ImageRGB& b) {
  if (a.width != b.width || a.height != b.height) return false;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    if (a.pixels[i] != b.pixels[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("constant fills every channel and at() indexes interleaved RGB") {
  ImageRGB img = ImageRGB::constant(7, 5, 0.25, 0.5, 0.75);
  CHECK(img.width == 7);
  CHECK(img.height == 5);
  REQUIRE(img.pixels.size() == 3u * 7u * 5u);
  for (size_t i = 0; i < img.pixels.size(); i += 3) {
    CHECK(img.pixels[i] == 0.25);
    CHECK(img.pixels[i + 1] == 0.5);
    CHECK(img.pixels[i + 2] == 0.75);
  }
  img.at(3, 2, 1) = 0.125;
  CHECK(img.pixels[3 * (2 * 7 + 3) + 1] == 0.125);
}

TEST_CASE("PPM roundtrip is exact on 1/255-quantized values") {
  testutil::ScratchDir dir("image_ppm");
  const ImageRGB img = quantized_test_image(16, 12);
  const std::string path = dir.file("img.ppm");
  write_ppm(path, img);
  const ImageRGB back = read_ppm(path);
  CHECK(images_equal(img, back));
}

TEST_CASE("PNG roundtrip is exact on 1/255-quantized values") {
  testutil::ScratchDir dir("image_png");
  const ImageRGB img = quantized_test_image(16, 12);
  const std::string path = dir.file("img.png");
  write_png(path, img);
  const ImageRGB back = read_png(path);
  CHECK(images_equal(img, back));
}

TEST_CASE("unquantized values roundtrip within half a quantization step") {
  testutil::ScratchDir dir("image_quant");
  const ImageRGB img = ImageRGB::constant(4, 4, 0.123456, 0.654321, 0.999);
  const std::string path = dir.file("quant.ppm");
  write_ppm(path, img);
  const ImageRGB back = read_ppm(path);
  REQUIRE(back.pixels.size() == img.pixels.size());
  for (size_t i = 0; i < img.pixels.size(); ++i) {
    CHECK(std::abs(back.pixels[i] - img.pixels[i]) <= 0.5 / 255.0 + 1e-12);
    // Written bytes come from round-to-nearest, so reads are exact 1/255 grid points.
    CHECK(back.pixels[i] == std::lround(img.pixels[i] * 255.0) / 255.0);
  }
}

TEST_CASE("out-of-range values clamp to [0, 1] on write") {
  testutil::ScratchDir dir("image_clamp");
  ImageRGB img = ImageRGB::constant(4, 3, -0.5, 1.5, 0.5);
  const std::string path = dir.file("clamp.ppm");
  write_ppm(path, img);
  const ImageRGB back = read_ppm(path);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 4; ++x) {
      CHECK(back.at(x, y, 0) == 0.0);
      CHECK(back.at(x, y, 1) == 1.0);
      CHECK(back.at(x, y, 2) == doctest::Approx(0.5).epsilon(0.5 / 255.0));
    }
  }
}

TEST_CASE("read_image and write_image dispatch on extension, case-insensitively") {
  testutil::ScratchDir dir("image_dispatch");
  const ImageRGB img = quantized_test_image(8, 6);

  const std::string ppm = dir.file("a.ppm");
  write_image(ppm, img);
  CHECK(images_equal(read_ppm(ppm), img));
  CHECK(images_equal(read_image(ppm), img));

  const std::string png_upper = dir.file("b.PNG");
  write_image(png_upper, img);
  CHECK(images_equal(read_image(png_upper), img));

  CHECK_THROWS_AS(write_image(dir.file("c.jpg"), img), ParseError);
  CHECK_THROWS_AS(read_image(dir.file("c.jpg")), ParseError);
}

TEST_CASE("malformed inputs raise ParseError") {
  testutil::ScratchDir dir("image_errors");

  CHECK_THROWS_AS(read_ppm(dir.file("missing.ppm")), ParseError);
  CHECK_THROWS_AS(read_png(dir.file("missing.png")), ParseError);

  {
    std::ofstream out(dir.file("ascii.ppm"), std::ios::binary);
    out << "P3\n2 2\n255\n0 0 0\n";
  }
  CHECK_THROWS_AS(read_ppm(dir.file("ascii.ppm")), ParseError);

  {
    std::ofstream out(dir.file("short.ppm"), std::ios::binary);
    out << "P6\n4 4\n255\n";
    out << "abc";  // far fewer than 48 payload bytes
  }
  CHECK_THROWS_AS(read_ppm(dir.file("short.ppm")), ParseError);

  {
    std::ofstream out(dir.file("garbage.png"), std::ios::binary);
    out << "not a png at all";
  }
  CHECK_THROWS_AS(read_png(dir.file("garbage.png")), ParseError);
}
