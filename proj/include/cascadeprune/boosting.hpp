#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cascadeprune/weak.hpp"

namespace cascadeprune {

// Cached feature values, column-major: one contiguous column per feature.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(int samples, int features);

  int sample_count() const { return samples_; }
  int feature_count() const { return features_; }
  double at(int sample, int feature) const {
    return data_[static_cast<std::size_t>(feature) * samples_ + sample];
  }
  double& at(int sample, int feature) {
    return data_[static_cast<std::size_t>(feature) * samples_ + sample];
  }
  std::span<const double> column(int feature) const {
    return {data_.data() + static_cast<std::size_t>(feature) * samples_,
            static_cast<std::size_t>(samples_)};
  }

 private:
  int samples_ = 0;
  int features_ = 0;
  std::vector<double> data_;
};

// Weighted stump ensemble F(x) = sum alpha_t h_t(x) - threshold.
struct Ensemble {
  std::vector<Stump> stumps;
  std::vector<double> alphas;
  double threshold = 0.0;
  // Set when a round hit weighted error >= 0.5 - 1e-12 and selection
  // stopped before reaching T1.
  bool short_pool = false;

  int size() const { return static_cast<int>(stumps.size()); }
};

// Outputs (+-1) of the selected stumps on the training samples,
// column-major: column t holds stump t over all samples.
struct ResponseMatrix {
  int samples = 0;
  int count = 0;
  std::vector<signed char> values;

  int at(int sample, int stump) const {
    return values[static_cast<std::size_t>(stump) * samples + sample];
  }
};

struct AdaBoostConfig {
  // Fraction of the pool searched each round (seeded, without replacement);
  // 1.0 searches everything.
  double feature_fraction = 1.0;
  std::uint64_t seed = 0;
  int threads = 1;  // 0 = hardware count
};

struct AdaBoostResult {
  Ensemble ensemble;
  ResponseMatrix responses;
};

// Discrete AdaBoost: class-balanced weight init (each class sums to 1/2),
// per-round argmin of weighted stump error across the pool (ties to the
// lowest feature id), alpha = 0.5 ln((1-eps)/eps) with eps clamped to
// [1e-10, 1-1e-10], update w_i <- w_i exp(-alpha y_i h_i) renormalized.
// Stops early when the best round error reaches 0.5 - 1e-12.
AdaBoostResult adaboost_train(const FeatureMatrix& pool, std::span<const int> labels,
                              int t1, const AdaBoostConfig& config = {});

// sum alpha_t h_t - b for one sample's stump outputs.
double ensemble_margin(const Ensemble& e, std::span<const int> stump_outputs);

}  // namespace cascadeprune
