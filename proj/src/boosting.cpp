#include "cascadeprune/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cascadeprune/parallel.hpp"
#include "cascadeprune/random.hpp"

namespace cascadeprune {
namespace {

constexpr double kEpsClampLo = 1e-10;
constexpr double kEpsClampHi = 1.0 - 1e-10;
constexpr double kEarlyStop = 0.5 - 1e-12;

// Distinct feature ids for one round, ascending.  Seeded by (seed, round)
// so the choice is independent of thread scheduling.
std::vector<int> round_feature_ids(int pool_size, double fraction, std::uint64_t seed,
                                   int round) {
  std::vector<int> ids(pool_size);
  std::iota(ids.begin(), ids.end(), 0);
  if (fraction >= 1.0) return ids;
  const int take =
      std::max(1, static_cast<int>(std::lround(fraction * static_cast<double>(pool_size))));
  std::uint64_t state = seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(round) + 1;
  for (int i = 0; i < take; ++i) {
    const std::size_t j = i + splitmix64(state) % (ids.size() - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(take);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

FeatureMatrix::FeatureMatrix(int samples, int features) {
  if (samples <= 0 || features < 0)
    throw DimensionError("bad feature matrix shape " + std::to_string(samples) + "x" +
                         std::to_string(features));
  samples_ = samples;
  features_ = features;
  data_.assign(static_cast<std::size_t>(samples) * features, 0.0);
}

AdaBoostResult adaboost_train(const FeatureMatrix& pool, std::span<const int> labels,
                              int t1, const AdaBoostConfig& config) {
  const int n = pool.sample_count();
  const int m = pool.feature_count();
  if (m <= 0) throw ConfigError("feature pool is empty");
  if (t1 < 1) throw ConfigError("T1 must be at least 1, got " + std::to_string(t1));
  if (static_cast<int>(labels.size()) != n)
    throw DimensionError("label count " + std::to_string(labels.size()) +
                         " does not match sample count " + std::to_string(n));
  if (config.feature_fraction <= 0.0 || config.feature_fraction > 1.0)
    throw ConfigError("feature fraction must lie in (0, 1]");

  int n_pos = 0, n_neg = 0;
  for (int y : labels) {
    if (y == 1)
      ++n_pos;
    else if (y == -1)
      ++n_neg;
    else
      throw ConfigError("labels must be +1 or -1");
  }
  if (n_pos == 0 || n_neg == 0)
    throw InsufficientDataError("both classes must be present (got " + std::to_string(n_pos) +
                                " positives, " + std::to_string(n_neg) + " negatives)");

  // Each feature column is sorted once; every round rescans under the
  // current weights.
  std::vector<std::vector<int>> orders(m);
  parallel_for(m, config.threads, [&](int begin, int end) {
    for (int f = begin; f < end; ++f) {
      auto& ord = orders[f];
      ord.resize(n);
      std::iota(ord.begin(), ord.end(), 0);
      const auto col = pool.column(f);
      std::sort(ord.begin(), ord.end(), [&](int a, int b) { return col[a] < col[b]; });
    }
  });

  // Class-balanced init: each class's weights sum to 1/2.
  std::vector<double> weights(n);
  for (int i = 0; i < n; ++i)
    weights[i] = labels[i] == 1 ? 0.5 / n_pos : 0.5 / n_neg;

  AdaBoostResult result;
  std::vector<signed char> responses;  // column-major, grows one column per round
  responses.reserve(static_cast<std::size_t>(n) * t1);

  std::vector<Stump> round_best;  // per-candidate results, merged in id order
  for (int round = 0; round < t1; ++round) {
    const auto ids = round_feature_ids(m, config.feature_fraction, config.seed, round);
    round_best.assign(ids.size(), Stump{});
    parallel_for(static_cast<int>(ids.size()), config.threads, [&](int begin, int end) {
      for (int k = begin; k < end; ++k) {
        const int f = ids[k];
        Stump s = train_stump_sorted(orders[f], pool.column(f), labels, weights);
        s.feature_id = f;
        round_best[k] = s;
      }
    });
    // Deterministic reduction: strict error improvement, ids ascend.
    const Stump* best = &round_best[0];
    for (const Stump& s : round_best)
      if (s.weighted_error < best->weighted_error) best = &s;

    const double eps = best->weighted_error;
    if (eps >= kEarlyStop) {
      result.ensemble.short_pool = true;
      break;
    }
    const double clamped = std::clamp(eps, kEpsClampLo, kEpsClampHi);
    const double alpha = 0.5 * std::log((1.0 - clamped) / clamped);

    const auto col = pool.column(best->feature_id);
    const std::size_t base = responses.size();
    responses.resize(base + n);
    double wsum = 0.0;
    for (int i = 0; i < n; ++i) {
      const int h = stump_predict(*best, col[i]);
      responses[base + i] = static_cast<signed char>(h);
      weights[i] *= std::exp(-alpha * labels[i] * h);
      wsum += weights[i];
    }
    for (double& w : weights) w /= wsum;

    result.ensemble.stumps.push_back(*best);
    result.ensemble.alphas.push_back(alpha);
  }

  result.responses.samples = n;
  result.responses.count = result.ensemble.size();
  result.responses.values = std::move(responses);
  return result;
}

double ensemble_margin(const Ensemble& e, std::span<const int> stump_outputs) {
  if (static_cast<int>(stump_outputs.size()) != e.size())
    throw DimensionError("output count " + std::to_string(stump_outputs.size()) +
                         " does not match ensemble size " + std::to_string(e.size()));
  double acc = 0.0;
  for (int t = 0; t < e.size(); ++t) acc += e.alphas[t] * stump_outputs[t];
  return acc - e.threshold;
}

}  // namespace cascadeprune
