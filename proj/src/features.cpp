#include "cascadeprune/features.hpp"

#include "cascadeprune/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cascadeprune/linalg.hpp"

namespace cascadeprune {
namespace {

const std::array<std::string, 5> kKindNames = {
    "two-rect-horizontal", "two-rect-vertical", "three-rect-horizontal",
    "three-rect-vertical", "four-rect"};

// Width/height granularity per kind.
constexpr int kWidthStep[] = {2, 1, 3, 1, 2};
constexpr int kHeightStep[] = {1, 2, 1, 3, 2};

}  // namespace

const std::string& haar_kind_name(HaarKind kind) {
  return kKindNames[static_cast<int>(kind)];
}

HaarKind haar_kind_from_name(const std::string& name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == name) return static_cast<HaarKind>(i);
  throw ConfigError("unknown feature kind: " + name);
}

bool haar_valid(const HaarFeature& f, int window_w, int window_h) {
  if (f.w <= 0 || f.h <= 0 || f.x < 0 || f.y < 0) return false;
  if (f.x + f.w > window_w || f.y + f.h > window_h) return false;
  const int k = static_cast<int>(f.kind);
  return f.w % kWidthStep[k] == 0 && f.h % kHeightStep[k] == 0;
}

double haar_response(const IntegralImage& ii, const HaarFeature& f, int origin_x,
                     int origin_y) {
  const int x = origin_x + f.x;
  const int y = origin_y + f.y;
  switch (f.kind) {
    case HaarKind::TwoRectHorizontal: {
      const int half = f.w / 2;
      return rect_sum(ii, x, y, half, f.h) - rect_sum(ii, x + half, y, half, f.h);
    }
    case HaarKind::TwoRectVertical: {
      const int half = f.h / 2;
      return rect_sum(ii, x, y, f.w, half) - rect_sum(ii, x, y + half, f.w, half);
    }
    case HaarKind::ThreeRectHorizontal: {
      const int third = f.w / 3;
      return rect_sum(ii, x, y, third, f.h) + rect_sum(ii, x + 2 * third, y, third, f.h) -
             rect_sum(ii, x + third, y, third, f.h);
    }
    case HaarKind::ThreeRectVertical: {
      const int third = f.h / 3;
      return rect_sum(ii, x, y, f.w, third) + rect_sum(ii, x, y + 2 * third, f.w, third) -
             rect_sum(ii, x, y + third, f.w, third);
    }
    case HaarKind::FourRect: {
      const int hw = f.w / 2;
      const int hh = f.h / 2;
      return rect_sum(ii, x, y, hw, hh) + rect_sum(ii, x + hw, y + hh, hw, hh) -
             rect_sum(ii, x + hw, y, hw, hh) - rect_sum(ii, x, y + hh, hw, hh);
    }
  }
  throw ConfigError("unhandled feature kind");
}

std::vector<HaarFeature> enumerate_haar(int window_w, int window_h, int budget,
                                        std::uint64_t seed) {
  if (budget <= 0) throw ConfigError("feature budget must be positive, got " + std::to_string(budget));
  if (window_w <= 0 || window_h <= 0) throw DimensionError("window dimensions must be positive");

  std::vector<HaarFeature> all;
  for (int k = 0; k < 5; ++k) {
    const HaarKind kind = static_cast<HaarKind>(k);
    const int ws = kWidthStep[k];
    const int hs = kHeightStep[k];
    for (int y = 0; y < window_h; ++y)
      for (int x = 0; x < window_w; ++x)
        for (int h = hs; y + h <= window_h; h += hs)
          for (int w = ws; x + w <= window_w; w += ws)
            all.push_back({kind, x, y, w, h});
  }
  if (budget >= static_cast<int>(all.size())) return all;

  // Partial Fisher-Yates over the canonical list, then restore canonical
  // order for the chosen subset.
  std::uint64_t state = seed;
  std::vector<int> idx(all.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  for (int i = 0; i < budget; ++i) {
    const std::size_t j = i + splitmix64(state) % (idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(budget);
  std::sort(idx.begin(), idx.end());
  std::vector<HaarFeature> out;
  out.reserve(budget);
  for (int i : idx) out.push_back(all[i]);
  return out;
}

IntegralHistogram build_integral_histogram(const GrayImage& img) {
  validate_image(img);
  IntegralHistogram ih;
  ih.width_ = img.width;
  ih.height_ = img.height;
  const int w1 = img.width + 1;
  for (auto& table : ih.sums_)
    table.assign(static_cast<std::size_t>(w1) * (img.height + 1), 0.0);

  constexpr double kPi = std::numbers::pi;
  const double bin_width = kPi / IntegralHistogram::kBins;
  std::array<double, IntegralHistogram::kBins> row_sums{};
  for (int y = 1; y <= img.height; ++y) {
    row_sums.fill(0.0);
    for (int x = 1; x <= img.width; ++x) {
      const int px = x - 1;
      const int py = y - 1;
      const double gx = img.at(std::min(px + 1, img.width - 1), py) -
                        img.at(std::max(px - 1, 0), py);
      const double gy = img.at(px, std::min(py + 1, img.height - 1)) -
                        img.at(px, std::max(py - 1, 0));
      const double mag = std::hypot(gx, gy);
      int bin = 0;
      if (mag > 0.0) {
        double angle = std::atan2(gy, gx);
        if (angle < 0.0) angle += kPi;  // unsigned orientation
        if (angle >= kPi) angle -= kPi;
        bin = std::min(static_cast<int>(angle / bin_width), IntegralHistogram::kBins - 1);
      }
      row_sums[bin] += mag;
      for (int b = 0; b < IntegralHistogram::kBins; ++b)
        ih.sums_[b][static_cast<std::size_t>(y) * w1 + x] =
            ih.sums_[b][static_cast<std::size_t>(y - 1) * w1 + x] + row_sums[b];
    }
  }
  return ih;
}

double hist_rect_sum(const IntegralHistogram& ih, int bin, int x, int y, int w, int h) {
  if (bin < 0 || bin >= IntegralHistogram::kBins)
    throw BoundsError("orientation bin " + std::to_string(bin) + " out of range");
  if (x < 0 || y < 0 || w < 0 || h < 0 || x + w > ih.width() || y + h > ih.height())
    throw BoundsError("histogram rectangle outside image bounds");
  return ih.entry(bin, x + w, y + h) - ih.entry(bin, x, y + h) - ih.entry(bin, x + w, y) +
         ih.entry(bin, x, y);
}

std::array<double, kHogDescriptorLength> hog_descriptor(const IntegralHistogram& ih,
                                                        const HogBlock& block,
                                                        int origin_x, int origin_y) {
  if (block.w < 2 || block.h < 2 || block.w % 2 != 0 || block.h % 2 != 0)
    throw BoundsError("block size must be even and at least 2x2");
  const int cw = block.w / 2;
  const int ch = block.h / 2;
  std::array<double, kHogDescriptorLength> v{};
  int out = 0;
  for (int cy = 0; cy < 2; ++cy)
    for (int cx = 0; cx < 2; ++cx)
      for (int b = 0; b < IntegralHistogram::kBins; ++b)
        v[out++] = hist_rect_sum(ih, b, origin_x + block.x + cx * cw,
                                 origin_y + block.y + cy * ch, cw, ch);
  // Cumulative-table cancellation can leave tiny negatives on an all-zero
  // bin; clamp before the sqrt.
  for (double& e : v) e = std::max(e, 0.0);
  double norm = 0.0;
  for (double e : v) norm += e;
  const double denom = norm + 1e-7;
  for (double& e : v) e = std::sqrt(e / denom);
  return v;
}

std::vector<HogBlock> enumerate_hog_blocks(int window_w, int window_h) {
  if (window_w <= 0 || window_h <= 0) throw DimensionError("window dimensions must be positive");
  constexpr int kAspects[][2] = {{1, 1}, {1, 2}, {2, 1}, {1, 3}, {3, 1}};
  constexpr int kStride = 4;
  std::vector<HogBlock> out;
  for (const auto& aspect : kAspects) {
    for (int s = 1;; ++s) {
      const int w = 4 * aspect[0] * s;
      const int h = 4 * aspect[1] * s;
      if (w > window_w || h > window_h) break;
      for (int y = 0; y + h <= window_h; y += kStride)
        for (int x = 0; x + w <= window_w; x += kStride) out.push_back({x, y, w, h, {}});
    }
  }
  return out;
}

ProjectionFit fit_projection(const std::vector<std::array<double, kHogDescriptorLength>>& pos,
                             const std::vector<std::array<double, kHogDescriptorLength>>& neg) {
  constexpr int d = kHogDescriptorLength;
  if (pos.size() < 2 || neg.size() < 2)
    throw InsufficientDataError("need at least 2 descriptors per class, got " +
                                std::to_string(pos.size()) + "/" + std::to_string(neg.size()));

  auto mean_of = [](const auto& rows) {
    std::array<double, d> mu{};
    for (const auto& r : rows)
      for (int i = 0; i < d; ++i) mu[i] += r[i];
    for (double& m : mu) m /= static_cast<double>(rows.size());
    return mu;
  };
  const auto mu1 = mean_of(pos);
  const auto mu2 = mean_of(neg);

  // Pooled sum of the two biased class covariances.
  SymMatrix s(d);
  auto accumulate = [&](const auto& rows, const std::array<double, d>& mu) {
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) {
        double acc = 0.0;
        for (const auto& r : rows) acc += (r[i] - mu[i]) * (r[j] - mu[j]);
        s.set(i, j, s(i, j) + acc * inv_n);
      }
  };
  accumulate(pos, mu1);
  accumulate(neg, mu2);

  const double lambda = 1e-6 * s.trace() / d;
  const auto inv = invert_spd(s, lambda > 0.0 ? lambda : 1e-12);

  std::array<double, d> b{};
  double gap = 0.0;
  for (int i = 0; i < d; ++i) {
    b[i] = mu1[i] - mu2[i];
    gap += b[i] * b[i];
  }

  ProjectionFit fit;
  if (gap == 0.0) {
    fit.degenerate = true;
    fit.direction[0] = 1.0;
    return fit;
  }

  double norm = 0.0;
  for (int i = 0; i < d; ++i) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) acc += inv.inverse(i, j) * b[j];
    fit.direction[i] = acc;
    norm += acc * acc;
  }
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    fit.degenerate = true;
    fit.direction.fill(0.0);
    fit.direction[0] = 1.0;
    return fit;
  }
  double align = 0.0;
  for (int i = 0; i < d; ++i) align += fit.direction[i] * b[i];
  const double sign = align < 0.0 ? -1.0 : 1.0;
  for (double& e : fit.direction) e = e * sign / norm;
  return fit;
}

double feature_scalar(const FeatureRef& feature, const IntegralImage& ii,
                      const IntegralHistogram* ih, int origin_x, int origin_y) {
  if (const auto* haar = std::get_if<HaarFeature>(&feature))
    return haar_response(ii, *haar, origin_x, origin_y);
  const auto& block = std::get<HogBlock>(feature);
  if (ih == nullptr) throw ConfigError("HOG feature evaluated without an integral histogram");
  const auto desc = hog_descriptor(*ih, block, origin_x, origin_y);
  double acc = 0.0;
  for (int i = 0; i < kHogDescriptorLength; ++i) acc += block.projection[i] * desc[i];
  return acc;
}

}  // namespace cascadeprune
