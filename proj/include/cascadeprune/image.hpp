#pragma once

#include <string>
#include <vector>

#include "cascadeprune/errors.hpp"

namespace cascadeprune {

// Grayscale image, row-major pixels in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0);

  double at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
  double& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * width + x];
  }
};

// Throws on dimension/pixel-count mismatch or non-finite pixels.
void validate_image(const GrayImage& img);

// Cumulative sum table: entry(x, y) is the sum of pixels in [0,x) x [0,y).
// The extra zero row/column make rectangle sums a four-corner lookup.
class IntegralImage {
 public:
  IntegralImage() = default;
  int width() const { return width_; }
  int height() const { return height_; }
  double entry(int x, int y) const {
    return sums_[static_cast<std::size_t>(y) * (width_ + 1) + x];
  }

  friend IntegralImage build_integral(const GrayImage& img);

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> sums_;
};

IntegralImage build_integral(const GrayImage& img);

// Exact pixel sum over [x, x+w) x [y, y+h).  Zero-area rectangles return 0.
double rect_sum(const IntegralImage& ii, int x, int y, int w, int h);

// Bilinear resampling; pixel centers at half-integer coordinates, borders
// clamped.  Output stays inside [min, max] of the source.
GrayImage resize_bilinear(const GrayImage& img, int new_width, int new_height);

// PGM (P5 binary / P2 ASCII), 8-bit, values rescaled to [0,1] by /255.
GrayImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& img);

}  // namespace cascadeprune
