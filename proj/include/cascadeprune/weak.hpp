#pragma once

#include <span>
#include <vector>

#include "cascadeprune/errors.hpp"

namespace cascadeprune {

// Decision stump h(x) = sign(p (x - theta)), sign(0) := +1.
struct Stump {
  int feature_id = -1;  // index into the feature pool; -1 until assigned
  double theta = 0.0;
  int polarity = 1;
  double weighted_error = 0.0;

  bool operator==(const Stump&) const = default;
};

int stump_predict(const Stump& s, double value);

// Optimal (theta, polarity) under sample weights.  Thresholds live at
// midpoints 0.5*(a+b) of adjacent distinct sorted values, or just outside
// the extremes at distance delta = 1e-9 + 1e-6 * range.  Ties in weighted
// error prefer the smaller theta, then polarity +1.  The reported error is
// re-evaluated with a direct pass in sample order, so it agrees exactly
// with a brute-force scan of all slots.  O(N log N).
Stump train_stump(std::span<const double> values, std::span<const int> labels,
                  std::span<const double> weights);

// Same search with the ascending value order precomputed by the caller;
// lets a boosting loop sort each feature column once.
Stump train_stump_sorted(std::span<const int> order, std::span<const double> values,
                         std::span<const int> labels, std::span<const double> weights);

}  // namespace cascadeprune
