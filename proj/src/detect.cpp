#include "cascadeprune/detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "cascadeprune/parallel.hpp"

namespace cascadeprune {
namespace {

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

void check_scan_params(double scale_factor, int stride) {
  if (!(scale_factor > 1.0))
    throw ConfigError("scale factor must exceed 1, got " + std::to_string(scale_factor));
  if (stride < 1) throw ConfigError("stride must be positive, got " + std::to_string(stride));
}

}  // namespace

double overlap_ratio(const Detection& a, const Detection& b) {
  const double ix =
      std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double iy =
      std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni <= 0.0 ? 0.0 : inter / uni;
}

bool pascal_match(const Detection& det, const Detection& truth) {
  return overlap_ratio(det, truth) > 0.5;
}

long window_count(int image_w, int image_h, int window_w, int window_h,
                  double scale_factor, int stride) {
  check_scan_params(scale_factor, stride);
  long total = 0;
  for (int level = 0;; ++level) {
    const double down = std::pow(scale_factor, level);
    const int sw = static_cast<int>(std::lround(image_w / down));
    const int sh = static_cast<int>(std::lround(image_h / down));
    if (sw < window_w || sh < window_h) break;
    total += static_cast<long>((sw - window_w) / stride + 1) *
             ((sh - window_h) / stride + 1);
  }
  return total;
}

std::vector<Detection> scan(const GrayImage& image, const Cascade& cascade,
                            double scale_factor, int stride) {
  check_scan_params(scale_factor, stride);
  validate_image(image);
  if (cascade.window_w <= 0 || cascade.window_h <= 0)
    throw ConfigError("cascade window is unset");

  const bool want_hog = cascade.uses_hog();
  std::vector<Detection> out;
  for (int level = 0;; ++level) {
    const double down = std::pow(scale_factor, level);
    const int sw = static_cast<int>(std::lround(image.width / down));
    const int sh = static_cast<int>(std::lround(image.height / down));
    if (sw < cascade.window_w || sh < cascade.window_h) break;

    const GrayImage scaled = level == 0 ? image : resize_bilinear(image, sw, sh);
    const IntegralImage ii = build_integral(scaled);
    IntegralHistogram ih;
    if (want_hog) ih = build_integral_histogram(scaled);

    // Per-axis ratios undo the lround of the level dimensions exactly.
    const double rx = static_cast<double>(image.width) / sw;
    const double ry = static_cast<double>(image.height) / sh;
    for (int y = 0; y + cascade.window_h <= sh; y += stride)
      for (int x = 0; x + cascade.window_w <= sw; x += stride) {
        const auto outcome =
            classify_window(cascade, ii, want_hog ? &ih : nullptr, x, y);
        if (!outcome.accepted) continue;
        Detection d;
        d.x = x * rx;
        d.y = y * ry;
        d.w = cascade.window_w * rx;
        d.h = cascade.window_h * ry;
        d.score = outcome.confidence;
        out.push_back(d);
      }
  }
  return out;
}

namespace {

// One round of component-mean merging; merge_detections repeats it until
// nothing coalesces, so merged output merges to itself.
std::vector<Detection> merge_pass(std::span<const Detection> detections) {
  const int n = static_cast<int>(detections.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (overlap_ratio(detections[i], detections[j]) >= 0.5) {
        const int ri = find_root(parent, i);
        const int rj = find_root(parent, j);
        // Smaller root survives so components keep first-member order.
        if (ri < rj)
          parent[rj] = ri;
        else if (rj < ri)
          parent[ri] = rj;
      }

  std::vector<Detection> out;
  std::vector<int> slot(n, -1);
  std::vector<int> members;
  for (int i = 0; i < n; ++i) {
    const int r = find_root(parent, i);
    if (slot[r] < 0) {
      slot[r] = static_cast<int>(out.size());
      out.push_back(Detection{});
      members.push_back(0);
    }
    Detection& acc = out[slot[r]];
    acc.x += detections[i].x;
    acc.y += detections[i].y;
    acc.w += detections[i].w;
    acc.h += detections[i].h;
    acc.score += detections[i].score;
    ++members[slot[r]];
  }
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c].x /= members[c];
    out[c].y /= members[c];
    out[c].w /= members[c];
    out[c].h /= members[c];
    out[c].score /= members[c];
  }
  return out;
}

}  // namespace

std::vector<Detection> merge_detections(std::span<const Detection> detections) {
  std::vector<Detection> merged = merge_pass(detections);
  // Component means can land close enough to overlap each other; keep
  // collapsing until the set is stable.  A pass that removes nothing
  // returns its input unchanged, so the size check suffices.
  while (merged.size() > 1) {
    std::vector<Detection> again = merge_pass(merged);
    if (again.size() == merged.size()) break;
    merged = std::move(again);
  }
  return merged;
}

MatchCounts evaluate_detections(std::span<const Detection> detections,
                                std::span<const Detection> truths) {
  MatchCounts counts;
  counts.truth_count = static_cast<int>(truths.size());

  std::vector<int> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return detections[a].score > detections[b].score;
  });

  std::vector<char> taken(truths.size(), 0);
  for (int idx : order) {
    int best = -1;
    double best_overlap = 0.5;  // pascal floor: strictly better required
    for (std::size_t t = 0; t < truths.size(); ++t) {
      if (taken[t]) continue;
      const double o = overlap_ratio(detections[idx], truths[t]);
      if (o > best_overlap) {
        best_overlap = o;
        best = static_cast<int>(t);
      }
    }
    if (best >= 0) {
      taken[best] = 1;
      ++counts.matched;
    } else {
      ++counts.false_positives;
    }
  }
  return counts;
}

std::vector<RocPoint> roc_by_node_removal(const Cascade& cascade,
                                          std::span<const GrayImage> images,
                                          const std::vector<std::vector<Detection>>& truths,
                                          double scale_factor, int stride, int threads) {
  if (cascade.nodes.empty()) throw ConfigError("cascade has no nodes to remove");
  if (truths.size() != images.size())
    throw DimensionError("truth list count " + std::to_string(truths.size()) +
                         " does not match " + std::to_string(images.size()) + " images");
  check_scan_params(scale_factor, stride);

  long total_windows = 0;
  for (const auto& img : images)
    total_windows += window_count(img.width, img.height, cascade.window_w,
                                  cascade.window_h, scale_factor, stride);

  std::vector<RocPoint> curve;
  for (int k = static_cast<int>(cascade.nodes.size()); k >= 1; --k) {
    Cascade prefix;
    prefix.window_w = cascade.window_w;
    prefix.window_h = cascade.window_h;
    prefix.gamma = cascade.gamma;
    prefix.nodes.assign(cascade.nodes.begin(), cascade.nodes.begin() + k);

    std::vector<MatchCounts> per_image(images.size());
    parallel_for(static_cast<int>(images.size()), threads, [&](int begin, int end) {
      for (int i = begin; i < end; ++i) {
        const auto merged =
            merge_detections(scan(images[i], prefix, scale_factor, stride));
        per_image[i] = evaluate_detections(merged, truths[i]);
      }
    });

    RocPoint point;
    point.nodes_used = k;
    long matched = 0, truth_total = 0;
    for (const auto& c : per_image) {
      matched += c.matched;
      truth_total += c.truth_count;
      point.false_positives += c.false_positives;
    }
    point.detection_rate =
        truth_total == 0 ? 1.0 : static_cast<double>(matched) / truth_total;
    point.fp_rate = total_windows == 0
                        ? 0.0
                        : static_cast<double>(point.false_positives) / total_windows;
    curve.push_back(point);
  }
  return curve;
}

std::string detections_csv(std::span<const std::string> image_names,
                           const std::vector<std::vector<Detection>>& detections) {
  if (image_names.size() != detections.size())
    throw DimensionError("name count does not match detection list count");
  std::string out = "image,x,y,w,h,score\n";
  for (std::size_t i = 0; i < detections.size(); ++i)
    for (const Detection& d : detections[i])
      out += image_names[i] + "," + real(d.x) + "," + real(d.y) + "," + real(d.w) +
             "," + real(d.h) + "," + real(d.score) + "\n";
  return out;
}

std::string roc_csv(std::span<const RocPoint> points) {
  std::string out = "nodes,detection_rate,false_positives,fp_rate\n";
  for (const RocPoint& p : points)
    out += std::to_string(p.nodes_used) + "," + real(p.detection_rate) + "," +
           std::to_string(p.false_positives) + "," + real(p.fp_rate) + "\n";
  return out;
}

}  // namespace cascadeprune
