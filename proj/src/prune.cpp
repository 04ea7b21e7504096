#include "cascadeprune/prune.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "cascadeprune/parallel.hpp"

namespace cascadeprune {
namespace {

std::vector<double> multiply(const SymMatrix& m, std::span<const double> v) {
  const int n = m.order();
  std::vector<double> out(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto row = m.row(i);
    double acc = 0.0;
    for (int k = 0; k < n; ++k) acc += row[k] * v[k];
    out[i] = acc;
  }
  return out;
}

std::vector<double> gather(std::span<const double> full, const std::vector<int>& indices) {
  std::vector<double> out;
  out.reserve(indices.size());
  for (int idx : indices) out.push_back(full[idx]);
  return out;
}

// Detection rate at the threshold that rejects half the negatives; used
// only by the optional goal check.
double goal_detection_rate(const InverseState& state, std::span<const double> b_full,
                           const ResponseMatrix& responses, std::span<const int> labels) {
  const auto w = multiply(state.inverse, gather(b_full, state.active_indices));
  std::vector<double> pos, neg;
  for (int i = 0; i < responses.samples; ++i) {
    double margin = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k)
      margin += w[k] * responses.at(i, state.active_indices[k]);
    (labels[i] == 1 ? pos : neg).push_back(margin);
  }
  if (pos.empty() || neg.empty()) return 1.0;
  std::sort(neg.begin(), neg.end(), std::greater<>());
  int k = static_cast<int>(neg.size()) / 2;
  while (k > 0 && neg[k - 1] == neg[k]) --k;
  const double threshold = k == 0 ? neg.front() + 1e-9 : 0.5 * (neg[k - 1] + neg[k]);
  int detected = 0;
  for (double m : pos)
    if (m >= threshold) ++detected;
  return static_cast<double>(detected) / pos.size();
}

}  // namespace

ClassStats class_stats(const ResponseMatrix& responses, std::span<const int> labels) {
  const int n = responses.samples;
  const int t = responses.count;
  if (n <= 0 || t <= 0) throw DimensionError("empty response matrix");
  if (static_cast<int>(labels.size()) != n)
    throw DimensionError("label count " + std::to_string(labels.size()) +
                         " does not match sample count " + std::to_string(n));
  int n1 = 0, n2 = 0;
  for (int y : labels) {
    if (y == 1)
      ++n1;
    else if (y == -1)
      ++n2;
    else
      throw ConfigError("labels must be +1 or -1");
  }
  if (n1 < 2 || n2 < 2)
    throw InsufficientDataError("each class needs at least 2 samples, got " +
                                std::to_string(n1) + " positives and " + std::to_string(n2) +
                                " negatives");

  ClassStats out;
  out.n1 = n1;
  out.n2 = n2;
  out.mu1.assign(t, 0.0);
  out.mu2.assign(t, 0.0);
  for (int j = 0; j < t; ++j) {
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i)
      (labels[i] == 1 ? s1 : s2) += responses.at(i, j);
    out.mu1[j] = s1 / n1;
    out.mu2[j] = s2 / n2;
  }

  out.sigma1 = SymMatrix(t);
  out.sigma2 = SymMatrix(t);
  for (int j = 0; j < t; ++j)
    for (int k = j; k < t; ++k) {
      double acc1 = 0.0, acc2 = 0.0;
      for (int i = 0; i < n; ++i) {
        if (labels[i] == 1)
          acc1 += (responses.at(i, j) - out.mu1[j]) * (responses.at(i, k) - out.mu1[k]);
        else
          acc2 += (responses.at(i, j) - out.mu2[j]) * (responses.at(i, k) - out.mu2[k]);
      }
      out.sigma1.set(j, k, acc1 / n1);
      out.sigma2.set(j, k, acc2 / n2);
    }
  return out;
}

SymMatrix mixed_within_cov(const ClassStats& stats, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw ConfigError("gamma must lie in [0, 1], got " + std::to_string(gamma));
  const int t = stats.order();
  if (static_cast<int>(stats.mu2.size()) != t || stats.sigma1.order() != t ||
      stats.sigma2.order() != t)
    throw DimensionError("class statistics orders disagree");
  SymMatrix out(t);
  for (int i = 0; i < t; ++i)
    for (int j = i; j < t; ++j)
      out.set(i, j, gamma * stats.sigma1(i, j) + (1.0 - gamma) * stats.sigma2(i, j));
  return out;
}

std::vector<double> closed_form_weights(const ClassStats& stats, double gamma,
                                        double lambda) {
  const SpdInverse spd = invert_spd(mixed_within_cov(stats, gamma), lambda);
  std::vector<double> diff(stats.order());
  for (int i = 0; i < stats.order(); ++i) diff[i] = stats.mu1[i] - stats.mu2[i];
  return multiply(spd.inverse, diff);
}

PruneResult backward_eliminate(const ClassStats& stats, double gamma, int target_t,
                               const EliminationConfig& config) {
  const int t1 = stats.order();
  if (t1 < 1) throw DimensionError("empty class statistics");
  if (target_t < 1) throw ConfigError("target size must be at least 1, got " +
                                      std::to_string(target_t));
  if (target_t > t1)
    throw ConfigError("target size " + std::to_string(target_t) + " exceeds the pool of " +
                      std::to_string(t1));

  const SpdInverse spd = invert_spd(mixed_within_cov(stats, gamma));

  PruneResult result;
  result.gamma = gamma;
  result.lambda = spd.lambda;

  std::vector<double> b_full(t1);
  for (int i = 0; i < t1; ++i) b_full[i] = stats.mu1[i] - stats.mu2[i];

  std::vector<int> all(t1);
  std::iota(all.begin(), all.end(), 0);
  InverseState state = make_inverse_state(spd.inverse, all);
  result.initial_objective =
      sparse_lda_objective(state.inverse, gather(b_full, state.active_indices));

  std::vector<double> objectives;
  std::vector<char> removable;
  const int rounds = t1 - target_t;
  for (int step = 0; step < rounds; ++step) {
    const int order = state.order();
    objectives.assign(order, 0.0);
    removable.assign(order, 0);
    parallel_for(order, config.threads, [&](int begin, int end) {
      for (int j = begin; j < end; ++j) {
        try {
          const InverseState trial = downdate_inverse(state, j);
          objectives[j] =
              sparse_lda_objective(trial.inverse, gather(b_full, trial.active_indices));
          removable[j] = 1;
        } catch (const DegenerateDowndateError&) {
          removable[j] = 0;
        }
      }
    });

    int best = -1;
    for (int j = 0; j < order; ++j) {
      if (!removable[j]) {
        const int original = state.active_indices[j];
        if (std::find(result.skipped_indices.begin(), result.skipped_indices.end(),
                      original) == result.skipped_indices.end())
          result.skipped_indices.push_back(original);
        continue;
      }
      // Larger original index wins ties; positions ascend with indices.
      if (best < 0 || objectives[j] > objectives[best] ||
          (objectives[j] == objectives[best] &&
           state.active_indices[j] > state.active_indices[best]))
        best = j;
    }
    if (best < 0) break;

    InverseState next = downdate_inverse(state, best);
    if (config.goal_dr > 0.0 && config.responses != nullptr) {
      const double dr =
          goal_detection_rate(next, b_full, *config.responses, config.labels);
      if (dr < config.goal_dr) break;
    }
    const int removed = state.active_indices[best];
    result.removed_indices.push_back(removed);
    result.objective_trace.push_back(objectives[best]);
    std::erase(result.skipped_indices, removed);
    state = std::move(next);
  }

  result.kept_indices = state.active_indices;
  result.coefficients = multiply(state.inverse, gather(b_full, state.active_indices));
  return result;
}

}  // namespace cascadeprune
