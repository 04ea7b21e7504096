#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cascadeprune/boosting.hpp"
#include "cascadeprune/features.hpp"
#include "cascadeprune/prune.hpp"

namespace cascadeprune {

enum class Trainer { Pruning, AdaBoost, AdaBoostLda, AdaBoostLac };

const std::string& trainer_name(Trainer t);
Trainer trainer_from_name(const std::string& name);

// One term of a node's linear vote: a feature, the stump cutting its
// scalar, and the coefficient on the stump's +-1 output.
struct NodeTerm {
  FeatureRef feature;
  double theta = 0.0;
  int polarity = 1;
  double coefficient = 0.0;

  bool operator==(const NodeTerm&) const = default;
};

struct NodeStats {
  double detection_rate = 0.0;
  double false_positive_rate = 0.0;
};

struct NodeClassifier {
  std::vector<NodeTerm> terms;
  double threshold = 0.0;
  NodeStats train_stats;  // on the node's own training data; not serialized

  // Serialization identity: statistics are a training byproduct.
  bool operator==(const NodeClassifier& other) const {
    return terms == other.terms && threshold == other.threshold;
  }
};

struct Cascade {
  int window_w = 0, window_h = 0;
  double gamma = 0.5;
  std::vector<NodeClassifier> nodes;
  bool depleted = false;  // negative pool ran dry before the schedule ended

  bool uses_hog() const;
  bool operator==(const Cascade& other) const {
    return window_w == other.window_w && window_h == other.window_h &&
           gamma == other.gamma && nodes == other.nodes;
  }
};

// sum coef_j h_j - b for the window at (origin_x, origin_y).  ih may be
// null when the node holds no hog terms.
double node_margin(const NodeClassifier& node, const IntegralImage& ii,
                   const IntegralHistogram* ih, int origin_x = 0, int origin_y = 0);

struct ClassifyOutcome {
  bool accepted = false;
  double confidence = 0.0;     // margin of the last node evaluated
  int features_evaluated = 0;  // stump count summed over evaluated nodes
};

// Runs the nodes in order, rejecting on the first negative margin.
ClassifyOutcome classify_window(const Cascade& cascade, const IntegralImage& ii,
                                const IntegralHistogram* ih, int origin_x = 0,
                                int origin_y = 0);
ClassifyOutcome cascade_classify(const Cascade& cascade, const GrayImage& patch);

struct RatePair {
  double dr = 0.0;
  double fp = 0.0;
};

// Componentwise products over the node list.
RatePair overall_rates(std::span<const RatePair> node_rates);

// Threshold b with fraction{margin >= b} <= target_fp and maximal, placed
// at the midpoint of the bracketing order statistics; when even the top
// margin must be rejected, b = max + 1e-9.
double place_threshold(std::span<const double> negative_margins, double target_fp);

struct NodeTrainConfig {
  int t1 = 100;  // stumps picked by boosting
  int t = 20;    // stumps surviving elimination
  double gamma = 0.5;
  double target_fp = 0.5;
  Trainer trainer = Trainer::Pruning;
  int threads = 1;
  std::uint64_t seed = 0;
  double feature_fraction = 1.0;  // per-round pool subsampling in boosting
};

// Node trained over an abstract feature-value pool (no image geometry).
struct ValueNodeResult {
  std::vector<int> pool_feature_ids;  // into the FeatureMatrix columns
  std::vector<Stump> stumps;          // aligned with coefficients
  std::vector<double> coefficients;
  double threshold = 0.0;
  NodeStats train_stats;
  bool short_pool = false;

  int size() const { return static_cast<int>(stumps.size()); }
};

// The shared pipeline: boost a pool of T1 stumps, then either keep the
// boosting coefficients (adaboost), refit them in closed form on the full
// pool (adaboost+lda/lac force gamma 0.5/1), or backward-eliminate down to
// T and use the surviving closed-form coefficients (pruning).  Finally the
// threshold lands at target_fp on the training negatives.
ValueNodeResult train_node_values(const FeatureMatrix& pool, std::span<const int> labels,
                                  const NodeTrainConfig& config);

// Margin of a value-domain node on one sample row of the pool it was
// trained against.
double value_node_margin(const ValueNodeResult& node, const FeatureMatrix& pool,
                         int sample);

struct PatchPoolConfig {
  int haar_budget = 2000;
  bool use_hog = true;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Feature pool for a training round: sampled Haar geometries plus hog
// blocks carrying projections fitted on the given samples.
std::vector<FeatureRef> build_patch_pool(std::span<const GrayImage> positives,
                                         std::span<const GrayImage> negatives,
                                         int window_w, int window_h,
                                         const PatchPoolConfig& config);

// Rows are images, columns features, every feature evaluated at the patch
// origin.  All images must match the window size.
FeatureMatrix compute_feature_matrix(std::span<const GrayImage> images,
                                     std::span<const FeatureRef> features, int window_w,
                                     int window_h, int threads = 1);

NodeClassifier train_node(std::span<const GrayImage> positives,
                          std::span<const GrayImage> negatives, int window_w,
                          int window_h, const NodeTrainConfig& config,
                          const PatchPoolConfig& pool_config);

// Raster scan state over a background image list; patches come out in a
// fixed order (image, pyramid level, row, column) regardless of caller
// timing, so refills are reproducible.
struct BootstrapPool {
  std::vector<GrayImage> images;
  int image_index = 0;
  int level = 0;
  int position = 0;
  bool exhausted = false;
};

// Up to `count` window-sized patches that pass every node of the current
// cascade, advancing the pool cursor.  A short return means the pool ran
// out.
std::vector<GrayImage> bootstrap(BootstrapPool& pool, const Cascade& cascade, int count,
                                 int window_w, int window_h);

struct CascadeTrainConfig {
  std::vector<std::pair<int, int>> schedule;  // (t, t1) per node, t <= t1
  double gamma = 0.5;
  double target_fp = 0.5;
  int negative_count = 5000;
  double node_dr_goal = 0.995;  // warning threshold only
  int threads = 1;
  std::uint64_t seed = 0;
  int haar_budget = 2000;
  bool use_hog = true;
  Trainer trainer = Trainer::Pruning;
};

// Trains nodes along the schedule, keeping every positive throughout and
// topping surviving hard negatives back up to negative_count between
// nodes.  Stops early (depleted flag) when the pool dries up.  `log`, when
// given, receives one line per node.
Cascade train_cascade(const CascadeTrainConfig& config,
                      std::span<const GrayImage> positives, BootstrapPool& pool,
                      int window_w, int window_h, std::ostream* log = nullptr);

}  // namespace cascadeprune
