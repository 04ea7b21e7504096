#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "cascadeprune/image.hpp"

namespace cascadeprune {

enum class HaarKind {
  TwoRectHorizontal,  // left half positive, right half negative (w even)
  TwoRectVertical,    // top half positive, bottom half negative (h even)
  ThreeRectHorizontal,  // outer thirds positive, middle third negative once (w % 3 == 0)
  ThreeRectVertical,    // same, stacked vertically (h % 3 == 0)
  FourRect,  // 2x2 grid, main-diagonal cells positive (w, h even)
};

const std::string& haar_kind_name(HaarKind kind);
HaarKind haar_kind_from_name(const std::string& name);

// Window-relative rectangle feature.
struct HaarFeature {
  HaarKind kind = HaarKind::TwoRectHorizontal;
  int x = 0, y = 0, w = 0, h = 0;

  bool operator==(const HaarFeature&) const = default;
};

// True when the geometry sits inside the window and the sub-rectangle
// division of its kind comes out even.
bool haar_valid(const HaarFeature& f, int window_w, int window_h);

// Signed sum(positive rects) - sum(negative rects) with the feature placed
// at (origin_x, origin_y) in the integral image.
double haar_response(const IntegralImage& ii, const HaarFeature& f, int origin_x = 0,
                     int origin_y = 0);

// Deterministic uniform sample without replacement from the full grid of
// kinds x positions x sizes, in canonical (kind, y, x, h, w) order.  The
// whole grid is returned when budget covers it.
std::vector<HaarFeature> enumerate_haar(int window_w, int window_h, int budget,
                                        std::uint64_t seed);

// Per-orientation-bin cumulative tables of gradient magnitude.  Gradients
// are centered differences with border replication; orientation is unsigned
// (mod 180 degrees) and hard-assigned to one of 9 equal bins.
class IntegralHistogram {
 public:
  static constexpr int kBins = 9;

  IntegralHistogram() = default;
  int width() const { return width_; }
  int height() const { return height_; }
  double entry(int bin, int x, int y) const {
    return sums_[bin][static_cast<std::size_t>(y) * (width_ + 1) + x];
  }

  friend IntegralHistogram build_integral_histogram(const GrayImage& img);

 private:
  int width_ = 0;
  int height_ = 0;
  std::array<std::vector<double>, kBins> sums_;
};

IntegralHistogram build_integral_histogram(const GrayImage& img);

double hist_rect_sum(const IntegralHistogram& ih, int bin, int x, int y, int w, int h);

inline constexpr int kHogDescriptorLength = 36;  // 2x2 cells x 9 bins

// HOG block: 2x2 cell grid, 9 orientation bins per cell, plus the fitted
// projection turning the 36-vector into a scalar response.
struct HogBlock {
  int x = 0, y = 0, w = 0, h = 0;
  std::array<double, kHogDescriptorLength> projection{};

  bool operator==(const HogBlock&) const = default;
};

// Cell histograms concatenated row-major (tl, tr, bl, br), each cell
// contributing its 9 bin sums, then l1-sqrt normalized:
// v <- sqrt(v / (|v|_1 + 1e-7)).  A flat block yields the zero vector.
std::array<double, kHogDescriptorLength> hog_descriptor(const IntegralHistogram& ih,
                                                        const HogBlock& block,
                                                        int origin_x = 0, int origin_y = 0);

// All blocks with aspect ratio in {1:1, 1:2, 2:1, 1:3, 3:1}, sizes in
// multiples of 4 (so cells stay at least 2 pixels), positions on a stride-4
// grid; canonical (aspect, h, w, y, x) order.
std::vector<HogBlock> enumerate_hog_blocks(int window_w, int window_h);

struct ProjectionFit {
  std::array<double, kHogDescriptorLength> direction{};
  bool degenerate = false;  // identical class means; direction is arbitrary
};

// Two-class Fisher direction over descriptor populations:
// w = (Sigma1 + Sigma2 + lambda I)^-1 (mu1 - mu2), lambda = 1e-6 * trace/36,
// unit length, sign fixed so w . (mu1 - mu2) >= 0.
ProjectionFit fit_projection(const std::vector<std::array<double, kHogDescriptorLength>>& pos,
                             const std::vector<std::array<double, kHogDescriptorLength>>& neg);

// A weak classifier's feature is either a Haar rectangle or a projected HOG
// block.
using FeatureRef = std::variant<HaarFeature, HogBlock>;

// Scalar response of a feature at the given window origin.  HOG features
// need the integral histogram; passing null for one throws.
double feature_scalar(const FeatureRef& feature, const IntegralImage& ii,
                      const IntegralHistogram* ih, int origin_x = 0, int origin_y = 0);

}  // namespace cascadeprune
