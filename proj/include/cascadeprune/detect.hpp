#pragma once

#include <span>
#include <string>
#include <vector>

#include "cascadeprune/cascade.hpp"

namespace cascadeprune {

// Axis-aligned box in original-image pixel coordinates with a confidence
// score.  Geometry is real-valued: coarse pyramid levels and merging both
// produce fractional positions.
struct Detection {
  double x = 0.0, y = 0.0;
  double w = 0.0, h = 0.0;
  double score = 0.0;

  bool operator==(const Detection&) const = default;
};

// Intersection area over union area; 0 when either box is empty.
double overlap_ratio(const Detection& a, const Detection& b);

// Strict majority overlap.  Symmetric.
bool pascal_match(const Detection& det, const Detection& truth);

// Windows the pyramid scan evaluates for one image: the stride grid summed
// over levels until the scaled image no longer holds the window.
long window_count(int image_w, int image_h, int window_w, int window_h,
                  double scale_factor, int stride);

// Slides the cascade window over the image at every pyramid level (image
// shrunk by scale_factor per level, bilinear), mapping accepted windows
// back to original coordinates.  Output order is (level, row, column).
std::vector<Detection> scan(const GrayImage& image, const Cascade& cascade,
                            double scale_factor = 1.25, int stride = 1);

// Connected components under pairwise overlap >= 0.5; each component
// collapses to its mean geometry and mean score, ordered by first member.
std::vector<Detection> merge_detections(std::span<const Detection> detections);

struct MatchCounts {
  int matched = 0;
  int false_positives = 0;
  int truth_count = 0;

  double detection_rate() const {
    return truth_count == 0 ? 1.0 : static_cast<double>(matched) / truth_count;
  }
};

// Greedy one-to-one assignment by descending score: each detection claims
// the best-overlap unmatched truth it pascal-matches, else counts as a
// false positive.
MatchCounts evaluate_detections(std::span<const Detection> detections,
                                std::span<const Detection> truths);

struct RocPoint {
  int nodes_used = 0;
  double detection_rate = 0.0;
  long false_positives = 0;
  double fp_rate = 0.0;  // false positives per scanned window
};

// Evaluates every prefix of the cascade (full N down to 1 node) end to end
// over the image set: scan, merge, match against the per-image truths.
std::vector<RocPoint> roc_by_node_removal(const Cascade& cascade,
                                          std::span<const GrayImage> images,
                                          const std::vector<std::vector<Detection>>& truths,
                                          double scale_factor = 1.25, int stride = 1,
                                          int threads = 1);

// CSV emission, one row per detection / per curve point.
std::string detections_csv(std::span<const std::string> image_names,
                           const std::vector<std::vector<Detection>>& detections);
std::string roc_csv(std::span<const RocPoint> points);

}  // namespace cascadeprune
