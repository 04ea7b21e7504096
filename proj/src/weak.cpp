#include "cascadeprune/weak.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace cascadeprune {
namespace {

// Accumulated roundoff of the running scan; candidates this close to the
// scan minimum are re-evaluated canonically.
double scan_band(std::size_t n) {
  return std::max(1e-10, 64.0 * static_cast<double>(n) * 2.22e-16);
}

// Direct weighted misclassification in sample order: the arithmetic every
// brute-force check uses.
double direct_error(const Stump& s, std::span<const double> values,
                    std::span<const int> labels, std::span<const double> weights) {
  double err = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (stump_predict(s, values[i]) != labels[i]) err += weights[i];
  return err;
}

}  // namespace

int stump_predict(const Stump& s, double value) {
  const double v = s.polarity * (value - s.theta);
  return v >= 0.0 ? 1 : -1;
}

Stump train_stump(std::span<const double> values, std::span<const int> labels,
                  std::span<const double> weights) {
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return values[a] < values[b]; });
  return train_stump_sorted(order, values, labels, weights);
}

Stump train_stump_sorted(std::span<const int> order, std::span<const double> values,
                         std::span<const int> labels, std::span<const double> weights) {
  const std::size_t n = values.size();
  if (n == 0) throw DimensionError("cannot train a stump on zero samples");
  if (labels.size() != n || weights.size() != n || order.size() != n)
    throw DimensionError("values/labels/weights/order lengths disagree");
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 1 && labels[i] != -1)
      throw ConfigError("labels must be +1 or -1, got " + std::to_string(labels[i]));
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
      throw ConfigError("weights must be finite and nonnegative");
    if (!std::isfinite(values[i])) throw ConfigError("feature values must be finite");
  }

  double w_pos = 0.0, w_neg = 0.0;
  for (std::size_t i = 0; i < n; ++i) (labels[i] > 0 ? w_pos : w_neg) += weights[i];
  const double total = w_pos + w_neg;

  const double vmin = values[order[0]];
  const double vmax = values[order[n - 1]];
  const double delta = 1e-9 + 1e-6 * (vmax - vmin);

  // Threshold slots: below the minimum, between each pair of adjacent
  // distinct values, above the maximum.
  std::vector<double> slots;
  slots.push_back(vmin - delta);
  for (std::size_t i = 1; i < n; ++i) {
    const double lo = values[order[i - 1]];
    const double hi = values[order[i]];
    if (hi > lo) slots.push_back(0.5 * (lo + hi));
  }
  slots.push_back(vmax + delta);

  // Scan errors for polarity +1 (h = +1 iff x >= theta); polarity -1 is the
  // exact complement because no sample sits on a threshold.
  std::vector<double> err_pos(slots.size());
  err_pos[0] = w_neg;
  double running = w_neg;
  std::size_t sample = 0;
  for (std::size_t slot = 1; slot < slots.size(); ++slot) {
    // Move every sample below the new threshold to the predicted -1 side.
    while (sample < n && values[order[sample]] < slots[slot]) {
      const int i = order[sample];
      running += labels[i] > 0 ? weights[i] : -weights[i];
      ++sample;
    }
    err_pos[slot] = running;
  }

  double scan_min = err_pos[0];
  for (std::size_t slot = 0; slot < slots.size(); ++slot)
    scan_min = std::min({scan_min, err_pos[slot], total - err_pos[slot]});

  // Candidates inside the roundoff band, visited in (theta, +1 first)
  // order, decided by the canonical direct pass.
  const double band = scan_band(n);
  Stump best;
  double best_err = std::numeric_limits<double>::infinity();
  for (std::size_t slot = 0; slot < slots.size(); ++slot) {
    for (const int pol : {1, -1}) {
      const double scanned = pol > 0 ? err_pos[slot] : total - err_pos[slot];
      if (scanned > scan_min + band) continue;
      Stump candidate{-1, slots[slot], pol, 0.0};
      const double err = direct_error(candidate, values, labels, weights);
      if (err < best_err) {
        best = candidate;
        best_err = err;
      }
    }
  }
  best.weighted_error = best_err;
  return best;
}

}  // namespace cascadeprune
