#pragma once

#include <span>
#include <vector>

#include "cascadeprune/boosting.hpp"
#include "cascadeprune/linalg.hpp"

namespace cascadeprune {

// Per-class first and second moments of the stump responses.
struct ClassStats {
  std::vector<double> mu1, mu2;  // positive / negative class means
  SymMatrix sigma1, sigma2;      // biased (1/n) covariances
  int n1 = 0, n2 = 0;

  int order() const { return static_cast<int>(mu1.size()); }
};

ClassStats class_stats(const ResponseMatrix& responses, std::span<const int> labels);

// gamma Sigma1 + (1 - gamma) Sigma2.  gamma = 1 keeps only the positive
// class spread (the asymmetric form), gamma = 0.5 the pooled one.
SymMatrix mixed_within_cov(const ClassStats& stats, double gamma);

// w = (gamma Sigma1 + (1 - gamma) Sigma2 + lambda I)^-1 (mu1 - mu2).
// lambda = 0 lets the inversion add its own fallback ridge when needed.
std::vector<double> closed_form_weights(const ClassStats& stats, double gamma,
                                        double lambda = 0.0);

struct PruneResult {
  std::vector<int> kept_indices;     // ascending original stump indices
  std::vector<double> coefficients;  // aligned with kept_indices
  double gamma = 0.0;
  double lambda = 0.0;             // ridge chosen from the full matrix, then fixed
  double initial_objective = 0.0;  // b' S^-1 b before any elimination
  std::vector<double> objective_trace;  // objective after each elimination
  std::vector<int> removed_indices;     // elimination order, original indices
  std::vector<int> skipped_indices;     // degenerate removals, left in place
};

struct EliminationConfig {
  int threads = 1;
  // Detection-rate stop, disabled by default.  When goal_dr > 0 and
  // responses/labels are given, elimination halts before a removal that
  // would push the detection rate at the half-false-positive threshold
  // below goal_dr.
  double goal_dr = 0.0;
  const ResponseMatrix* responses = nullptr;
  std::span<const int> labels;
};

// Greedy backward elimination of stumps.  Starts from the inverse of the
// full mixed covariance (ridge fixed once, from the full matrix) and
// performs T1 - target_t rounds: every active index is scored by the
// objective b' S^-1 b of the model without it (trial downdate), and the
// index whose removal keeps the most objective goes, ties to the larger
// original index.  Coefficients are S^-1 b on the surviving set.
PruneResult backward_eliminate(const ClassStats& stats, double gamma, int target_t,
                               const EliminationConfig& config = {});

}  // namespace cascadeprune
