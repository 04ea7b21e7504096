#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cascadeprune/boosting.hpp"
#include "cascadeprune/detect.hpp"
#include "cascadeprune/image.hpp"

namespace cascadeprune {

enum class SynthMode { Vectors, Patches };

// Generation is a pure function of (spec, seed): every random quantity is a
// counter draw keyed by sample index, so regenerating any slice of a dataset
// reproduces it byte for byte.
struct SynthSpec {
  SynthMode mode = SynthMode::Vectors;

  // vectors
  int dims = 16;
  double separation = 3.0;

  // patches
  int window_w = 24;
  int window_h = 24;
  int background_w = 96;
  int background_h = 96;

  // shared; negatives counts vector negatives or background images
  int positives = 100;
  int negatives = 100;
  double noise = 1.0;
  std::uint64_t seed = 0;
};

struct VectorDataset {
  FeatureMatrix samples;    // positives first, then negatives; columns are dims
  std::vector<int> labels;  // +1 / -1 in the same order
};

// Two Gaussian clouds that coincide exactly at separation 0.  Positives sit
// at a mean of length `separation` pointing along an uneven per-dimension
// profile (so dimensions carry different signal-to-noise), spread noise per
// axis.  Negatives are zero-mean isotropic with a spread that widens with
// the separation, standing in for near-uniform bootstrapped backgrounds.
VectorDataset synth_vectors(const SynthSpec& spec);

struct MotifRect {
  int x = 0, y = 0, w = 0, h = 0;
  double level = 0.0;

  bool operator==(const MotifRect&) const = default;
};

struct PatchDataset {
  std::vector<GrayImage> positives;    // window_w x window_h each
  std::vector<GrayImage> backgrounds;  // background_w x background_h each
  std::vector<MotifRect> motif;        // planted geometry in window coordinates
};

// Positives plant a fixed bright multi-rectangle motif (levels >= 0.70 over a
// 0.25 base) degraded per sample in proportion to `noise`: pixel noise,
// +-1..2 px position jitter, per-rectangle dimming capped so an un-occluded
// rectangle stays above 0.525, and occasionally one rectangle knocked down
// further so no single aligned feature separates the classes perfectly.
// Backgrounds carry dim clutter rectangles (levels <= 0.50) plus a few
// bright distractors (levels <= 0.62, still below any full motif rectangle)
// spaced so that no window-sized region ever contains two; the motif's
// multi-rectangle constellation therefore cannot occur in a background, and
// that spacing plus the level gap is the construction margin.  Pixels clamp
// to [0, 1].  noise == 0 disables every degradation: positives come out
// identical.
PatchDataset synth_patches(const SynthSpec& spec);

struct SceneSet {
  std::vector<GrayImage> images;
  std::vector<std::vector<Detection>> truths;  // per image, scores 0
};

// Test scenes for end-to-end runs: fresh backgrounds with fresh positive
// patches stamped at non-overlapping spots.  `salt` decorrelates the scenes
// from the training draw of the same spec; truths list the stamped boxes.
SceneSet synth_scenes(const SynthSpec& spec, int scene_count, int plants_per_scene,
                      std::uint64_t salt);

// Directory layout: manifest.txt plus one PGM per image.  The manifest pins
// the window size and motif so a reloaded dataset trains identically modulo
// 8-bit pixel quantization.
void write_patch_dataset(const PatchDataset& ds, const std::string& dir);
PatchDataset read_patch_dataset(const std::string& dir);

// Single text file, %.17g values: doubles survive the round trip bitwise.
void write_vector_dataset(const VectorDataset& ds, const std::string& path);
VectorDataset read_vector_dataset(const std::string& path);

}  // namespace cascadeprune
