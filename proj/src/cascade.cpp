#include "cascadeprune/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <string>

#include "cascadeprune/parallel.hpp"

namespace cascadeprune {
namespace {

const std::string kTrainerNames[] = {"pruning", "adaboost", "adaboost+lda",
                                     "adaboost+lac"};

NodeClassifier assemble_node(const ValueNodeResult& vr,
                             std::span<const FeatureRef> features) {
  NodeClassifier node;
  node.threshold = vr.threshold;
  node.train_stats = vr.train_stats;
  node.terms.reserve(vr.size());
  for (int j = 0; j < vr.size(); ++j) {
    NodeTerm term;
    term.feature = features[vr.pool_feature_ids[j]];
    term.theta = vr.stumps[j].theta;
    term.polarity = vr.stumps[j].polarity;
    term.coefficient = vr.coefficients[j];
    node.terms.push_back(term);
  }
  return node;
}

int scaled_dim(int base, double factor, int level) {
  return static_cast<int>(std::lround(base / std::pow(factor, level)));
}

GrayImage crop(const GrayImage& img, int x, int y, int w, int h) {
  GrayImage out(w, h);
  for (int row = 0; row < h; ++row)
    for (int col = 0; col < w; ++col) out.at(col, row) = img.at(x + col, y + row);
  return out;
}

}  // namespace

const std::string& trainer_name(Trainer t) { return kTrainerNames[static_cast<int>(t)]; }

Trainer trainer_from_name(const std::string& name) {
  for (int i = 0; i < 4; ++i)
    if (kTrainerNames[i] == name) return static_cast<Trainer>(i);
  throw ConfigError("unknown trainer '" + name + "'");
}

bool Cascade::uses_hog() const {
  for (const auto& node : nodes)
    for (const auto& term : node.terms)
      if (std::holds_alternative<HogBlock>(term.feature)) return true;
  return false;
}

double node_margin(const NodeClassifier& node, const IntegralImage& ii,
                   const IntegralHistogram* ih, int origin_x, int origin_y) {
  double acc = 0.0;
  for (const NodeTerm& term : node.terms) {
    const double value = feature_scalar(term.feature, ii, ih, origin_x, origin_y);
    Stump s;
    s.theta = term.theta;
    s.polarity = term.polarity;
    acc += term.coefficient * stump_predict(s, value);
  }
  return acc - node.threshold;
}

ClassifyOutcome classify_window(const Cascade& cascade, const IntegralImage& ii,
                                const IntegralHistogram* ih, int origin_x,
                                int origin_y) {
  ClassifyOutcome out;
  out.accepted = true;
  for (const auto& node : cascade.nodes) {
    out.confidence = node_margin(node, ii, ih, origin_x, origin_y);
    out.features_evaluated += static_cast<int>(node.terms.size());
    if (out.confidence < 0.0) {
      out.accepted = false;
      break;
    }
  }
  return out;
}

ClassifyOutcome cascade_classify(const Cascade& cascade, const GrayImage& patch) {
  validate_image(patch);
  if (patch.width != cascade.window_w || patch.height != cascade.window_h)
    throw DimensionError("patch is " + std::to_string(patch.width) + "x" +
                         std::to_string(patch.height) + ", window is " +
                         std::to_string(cascade.window_w) + "x" +
                         std::to_string(cascade.window_h));
  const IntegralImage ii = build_integral(patch);
  if (cascade.uses_hog()) {
    const IntegralHistogram ih = build_integral_histogram(patch);
    return classify_window(cascade, ii, &ih);
  }
  return classify_window(cascade, ii, nullptr);
}

RatePair overall_rates(std::span<const RatePair> node_rates) {
  RatePair out{1.0, 1.0};
  for (const auto& r : node_rates) {
    out.dr *= r.dr;
    out.fp *= r.fp;
  }
  return out;
}

double place_threshold(std::span<const double> negative_margins, double target_fp) {
  if (negative_margins.empty()) throw DimensionError("no negative margins");
  if (!(target_fp > 0.0 && target_fp < 1.0))
    throw ConfigError("target false-positive rate must lie in (0, 1), got " +
                      std::to_string(target_fp));
  std::vector<double> sorted(negative_margins.begin(), negative_margins.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const int n = static_cast<int>(sorted.size());
  int k = 0;
  for (int c = 1; c <= n; ++c)
    if (static_cast<double>(c) / n <= target_fp) k = c;
  // A cut admitting exactly k needs a strict drop at the boundary.
  while (k > 0 && sorted[k - 1] == sorted[k]) --k;
  if (k == 0) return sorted.front() + 1e-9;
  return 0.5 * (sorted[k - 1] + sorted[k]);
}

ValueNodeResult train_node_values(const FeatureMatrix& pool, std::span<const int> labels,
                                  const NodeTrainConfig& config) {
  if (config.t < 1 || config.t1 < config.t)
    throw ConfigError("need 1 <= T <= T1, got T=" + std::to_string(config.t) +
                      " T1=" + std::to_string(config.t1));
  const bool pruning = config.trainer == Trainer::Pruning;

  AdaBoostConfig boost_cfg;
  boost_cfg.threads = config.threads;
  boost_cfg.seed = config.seed;
  boost_cfg.feature_fraction = config.feature_fraction;
  const AdaBoostResult boosted =
      adaboost_train(pool, labels, pruning ? config.t1 : config.t, boost_cfg);

  ValueNodeResult result;
  result.short_pool = boosted.ensemble.short_pool;
  const int pool_size = boosted.ensemble.size();
  if (pool_size == 0) {
    // Nothing beat chance; the empty node rejects every window.
    result.threshold = 1e-9;
    return result;
  }

  double gamma = config.gamma;
  if (config.trainer == Trainer::AdaBoostLda) gamma = 0.5;
  if (config.trainer == Trainer::AdaBoostLac) gamma = 1.0;

  std::vector<int> selected;
  switch (config.trainer) {
    case Trainer::AdaBoost:
      selected.resize(pool_size);
      std::iota(selected.begin(), selected.end(), 0);
      result.coefficients = boosted.ensemble.alphas;
      break;
    case Trainer::AdaBoostLda:
    case Trainer::AdaBoostLac: {
      selected.resize(pool_size);
      std::iota(selected.begin(), selected.end(), 0);
      result.coefficients = closed_form_weights(class_stats(boosted.responses, labels), gamma);
      break;
    }
    case Trainer::Pruning: {
      const auto stats = class_stats(boosted.responses, labels);
      EliminationConfig ecfg;
      ecfg.threads = config.threads;
      auto pruned =
          backward_eliminate(stats, gamma, std::min(config.t, pool_size), ecfg);
      selected = std::move(pruned.kept_indices);
      result.coefficients = std::move(pruned.coefficients);
      break;
    }
  }

  for (int pos : selected) {
    result.stumps.push_back(boosted.ensemble.stumps[pos]);
    result.pool_feature_ids.push_back(boosted.ensemble.stumps[pos].feature_id);
  }

  std::vector<double> pos_margins, neg_margins;
  for (int i = 0; i < pool.sample_count(); ++i) {
    double m = 0.0;
    for (std::size_t k = 0; k < selected.size(); ++k)
      m += result.coefficients[k] * boosted.responses.at(i, selected[k]);
    (labels[i] == 1 ? pos_margins : neg_margins).push_back(m);
  }
  result.threshold = place_threshold(neg_margins, config.target_fp);
  int detected = 0, passed = 0;
  for (double m : pos_margins) detected += m >= result.threshold;
  for (double m : neg_margins) passed += m >= result.threshold;
  result.train_stats.detection_rate = static_cast<double>(detected) / pos_margins.size();
  result.train_stats.false_positive_rate =
      static_cast<double>(passed) / neg_margins.size();
  return result;
}

double value_node_margin(const ValueNodeResult& node, const FeatureMatrix& pool,
                         int sample) {
  double m = 0.0;
  for (std::size_t k = 0; k < node.stumps.size(); ++k)
    m += node.coefficients[k] *
         stump_predict(node.stumps[k], pool.at(sample, node.stumps[k].feature_id));
  return m;
}

std::vector<FeatureRef> build_patch_pool(std::span<const GrayImage> positives,
                                         std::span<const GrayImage> negatives,
                                         int window_w, int window_h,
                                         const PatchPoolConfig& config) {
  std::vector<FeatureRef> features;
  for (const auto& f : enumerate_haar(window_w, window_h, config.haar_budget, config.seed))
    features.emplace_back(f);
  // Projections need two descriptors per class to fit.
  if (!config.use_hog || positives.size() < 2 || negatives.size() < 2) return features;

  const auto blocks = enumerate_hog_blocks(window_w, window_h);
  if (blocks.empty()) return features;

  std::vector<IntegralHistogram> pos_hist(positives.size()), neg_hist(negatives.size());
  parallel_for(static_cast<int>(positives.size()), config.threads, [&](int b, int e) {
    for (int i = b; i < e; ++i) pos_hist[i] = build_integral_histogram(positives[i]);
  });
  parallel_for(static_cast<int>(negatives.size()), config.threads, [&](int b, int e) {
    for (int i = b; i < e; ++i) neg_hist[i] = build_integral_histogram(negatives[i]);
  });

  // One Fisher projection per block, fitted on the current training split.
  std::vector<HogBlock> fitted(blocks.size());
  std::vector<char> keep(blocks.size(), 0);
  parallel_for(static_cast<int>(blocks.size()), config.threads, [&](int b, int e) {
    for (int bi = b; bi < e; ++bi) {
      std::vector<std::array<double, kHogDescriptorLength>> dpos(positives.size()),
          dneg(negatives.size());
      for (std::size_t i = 0; i < positives.size(); ++i)
        dpos[i] = hog_descriptor(pos_hist[i], blocks[bi]);
      for (std::size_t i = 0; i < negatives.size(); ++i)
        dneg[i] = hog_descriptor(neg_hist[i], blocks[bi]);
      const ProjectionFit fit = fit_projection(dpos, dneg);
      if (fit.degenerate) continue;
      fitted[bi] = blocks[bi];
      fitted[bi].projection = fit.direction;
      keep[bi] = 1;
    }
  });
  for (std::size_t bi = 0; bi < blocks.size(); ++bi)
    if (keep[bi]) features.emplace_back(fitted[bi]);
  return features;
}

FeatureMatrix compute_feature_matrix(std::span<const GrayImage> images,
                                     std::span<const FeatureRef> features, int window_w,
                                     int window_h, int threads) {
  if (images.empty() || features.empty())
    throw DimensionError("feature matrix needs images and features");
  bool any_hog = false;
  for (const auto& f : features) any_hog |= std::holds_alternative<HogBlock>(f);
  // Validate up front: parallel_for workers must not throw.
  for (std::size_t i = 0; i < images.size(); ++i)
    if (images[i].width != window_w || images[i].height != window_h)
      throw DimensionError("training patch " + std::to_string(i) + " is " +
                           std::to_string(images[i].width) + "x" +
                           std::to_string(images[i].height) + ", window is " +
                           std::to_string(window_w) + "x" + std::to_string(window_h));

  FeatureMatrix out(static_cast<int>(images.size()), static_cast<int>(features.size()));
  parallel_for(static_cast<int>(images.size()), threads, [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      const GrayImage& img = images[i];
      const IntegralImage ii = build_integral(img);
      if (any_hog) {
        const IntegralHistogram ih = build_integral_histogram(img);
        for (std::size_t f = 0; f < features.size(); ++f)
          out.at(i, static_cast<int>(f)) = feature_scalar(features[f], ii, &ih);
      } else {
        for (std::size_t f = 0; f < features.size(); ++f)
          out.at(i, static_cast<int>(f)) = feature_scalar(features[f], ii, nullptr);
      }
    }
  });
  return out;
}

NodeClassifier train_node(std::span<const GrayImage> positives,
                          std::span<const GrayImage> negatives, int window_w,
                          int window_h, const NodeTrainConfig& config,
                          const PatchPoolConfig& pool_config) {
  const auto features =
      build_patch_pool(positives, negatives, window_w, window_h, pool_config);
  if (features.empty()) throw ConfigError("feature pool came out empty");

  std::vector<GrayImage> all(positives.begin(), positives.end());
  all.insert(all.end(), negatives.begin(), negatives.end());
  std::vector<int> labels(all.size());
  for (std::size_t i = 0; i < all.size(); ++i)
    labels[i] = i < positives.size() ? 1 : -1;

  const auto matrix =
      compute_feature_matrix(all, features, window_w, window_h, config.threads);
  const auto vr = train_node_values(matrix, labels, config);
  return assemble_node(vr, features);
}

std::vector<GrayImage> bootstrap(BootstrapPool& pool, const Cascade& cascade, int count,
                                 int window_w, int window_h) {
  constexpr int kStride = 4;
  constexpr double kScaleStep = 1.25;
  std::vector<GrayImage> out;
  if (pool.exhausted) return out;
  const bool want_hog = cascade.uses_hog();

  while (static_cast<int>(out.size()) < count) {
    if (pool.image_index >= static_cast<int>(pool.images.size())) {
      pool.exhausted = true;
      break;
    }
    const GrayImage& base = pool.images[pool.image_index];
    const int sw = scaled_dim(base.width, kScaleStep, pool.level);
    const int sh = scaled_dim(base.height, kScaleStep, pool.level);
    if (sw < window_w || sh < window_h) {
      ++pool.image_index;
      pool.level = 0;
      pool.position = 0;
      continue;
    }
    const GrayImage scaled =
        pool.level == 0 ? base : resize_bilinear(base, sw, sh);
    const IntegralImage ii = build_integral(scaled);
    IntegralHistogram ih;
    if (want_hog) ih = build_integral_histogram(scaled);

    const int nx = (sw - window_w) / kStride + 1;
    const int ny = (sh - window_h) / kStride + 1;
    const int total = nx * ny;
    while (pool.position < total && static_cast<int>(out.size()) < count) {
      const int x = pool.position % nx * kStride;
      const int y = pool.position / nx * kStride;
      ++pool.position;
      const auto outcome =
          classify_window(cascade, ii, want_hog ? &ih : nullptr, x, y);
      if (outcome.accepted) out.push_back(crop(scaled, x, y, window_w, window_h));
    }
    if (pool.position >= total) {
      pool.position = 0;
      ++pool.level;
    }
  }
  return out;
}

Cascade train_cascade(const CascadeTrainConfig& config,
                      std::span<const GrayImage> positives, BootstrapPool& pool,
                      int window_w, int window_h, std::ostream* log) {
  if (config.schedule.empty()) throw ConfigError("empty node schedule");
  for (const auto& [t, t1] : config.schedule)
    if (t < 1 || t > t1)
      throw ConfigError("schedule entry " + std::to_string(t) + ":" +
                        std::to_string(t1) + " violates 1 <= T <= T1");
  if (positives.empty()) throw ConfigError("no positive samples");

  Cascade cascade;
  cascade.window_w = window_w;
  cascade.window_h = window_h;
  cascade.gamma = config.gamma;

  PatchPoolConfig pool_cfg;
  pool_cfg.haar_budget = config.haar_budget;
  pool_cfg.use_hog = config.use_hog;
  pool_cfg.seed = config.seed;
  pool_cfg.threads = config.threads;

  std::vector<GrayImage> negatives =
      bootstrap(pool, cascade, config.negative_count, window_w, window_h);
  std::vector<char> positive_alive(positives.size(), 1);

  for (std::size_t k = 0; k < config.schedule.size(); ++k) {
    if (static_cast<int>(negatives.size()) < 2) {
      cascade.depleted = true;
      if (log)
        *log << "node " << k << ": negative pool depleted, stopping at "
             << cascade.nodes.size() << " nodes\n";
      break;
    }
    const auto [t, t1] = config.schedule[k];
    const auto features =
        build_patch_pool(positives, negatives, window_w, window_h, pool_cfg);

    std::vector<GrayImage> all(positives.begin(), positives.end());
    all.insert(all.end(), negatives.begin(), negatives.end());
    std::vector<int> labels(all.size());
    for (std::size_t i = 0; i < all.size(); ++i)
      labels[i] = i < positives.size() ? 1 : -1;
    const auto matrix =
        compute_feature_matrix(all, features, window_w, window_h, config.threads);

    NodeTrainConfig node_cfg;
    node_cfg.t1 = t1;
    node_cfg.t = t;
    node_cfg.gamma = config.gamma;
    node_cfg.target_fp = config.target_fp;
    node_cfg.trainer = config.trainer;
    node_cfg.threads = config.threads;
    node_cfg.seed = config.seed + k;
    const auto vr = train_node_values(matrix, labels, node_cfg);
    if (vr.size() == 0)
      throw TrainingCollapseError("no weak classifier beat chance",
                                  static_cast<int>(k));

    cascade.nodes.push_back(assemble_node(vr, features));

    int alive = 0;
    for (std::size_t i = 0; i < positives.size(); ++i) {
      if (positive_alive[i] &&
          value_node_margin(vr, matrix, static_cast<int>(i)) < vr.threshold)
        positive_alive[i] = 0;
      alive += positive_alive[i];
    }
    if (alive == 0)
      throw TrainingCollapseError("every positive rejected", static_cast<int>(k));

    if (log) {
      *log << "node " << k << ": stumps=" << vr.size() << " pool=" << t1
           << " dr=" << vr.train_stats.detection_rate
           << " fp=" << vr.train_stats.false_positive_rate
           << " negatives=" << negatives.size() << " surviving_positives=" << alive
           << "\n";
      if (vr.train_stats.detection_rate < config.node_dr_goal)
        *log << "node " << k << ": detection rate "
             << vr.train_stats.detection_rate << " below goal "
             << config.node_dr_goal << "\n";
    }

    if (k + 1 == config.schedule.size()) break;

    // Hard negatives carry over; the pool tops the set back up.
    std::vector<GrayImage> survivors;
    for (std::size_t i = 0; i < negatives.size(); ++i) {
      const int row = static_cast<int>(positives.size() + i);
      if (value_node_margin(vr, matrix, row) >= vr.threshold)
        survivors.push_back(std::move(negatives[i]));
    }
    negatives = std::move(survivors);
    const int deficit = config.negative_count - static_cast<int>(negatives.size());
    if (deficit > 0) {
      auto refill = bootstrap(pool, cascade, deficit, window_w, window_h);
      for (auto& img : refill) negatives.push_back(std::move(img));
    }
  }
  return cascade;
}

}  // namespace cascadeprune
