#include "cascadeprune/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cascadeprune/random.hpp"

namespace cascadeprune {

namespace {

// Counter streams.  Fixed numbers, never reused across purposes, so adding a
// stream never shifts the draws of an existing one.
constexpr std::uint64_t kVecPos = 11;
constexpr std::uint64_t kVecNeg = 12;
constexpr std::uint64_t kMotifGeom = 21;
constexpr std::uint64_t kPosNoise = 22;
constexpr std::uint64_t kPosJitter = 23;
constexpr std::uint64_t kPosLevel = 24;
constexpr std::uint64_t kBgNoise = 25;
constexpr std::uint64_t kBgRects = 26;
constexpr std::uint64_t kSceneSeed = 27;
constexpr std::uint64_t kPlant = 28;

void check_common(const SynthSpec& spec) {
  if (spec.positives < 2 || spec.negatives < 2)
    throw ConfigError("synth spec needs at least 2 samples per class");
  if (spec.separation < 0.0) throw ConfigError("synth separation must be >= 0");
  if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise))
    throw ConfigError("synth noise must be a finite value >= 0");
}

void check_patches(const SynthSpec& spec) {
  check_common(spec);
  if (spec.mode != SynthMode::Patches) throw ConfigError("spec mode is not patches");
  if (spec.window_w < 16 || spec.window_h < 16)
    throw ConfigError("patch window must be at least 16x16");
  if (spec.background_w < spec.window_w || spec.background_h < spec.window_h)
    throw ConfigError("background smaller than window");
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Uneven mean profile: later dimensions carry more of the separation, so
// stumps on different dimensions have genuinely different quality.
std::vector<double> mean_profile(int dims, double separation) {
  std::vector<double> mu(static_cast<std::size_t>(dims), 1.0);
  if (dims > 1) {
    for (int j = 0; j < dims; ++j)
      mu[j] = 0.5 + 1.5 * static_cast<double>(j) / (dims - 1);
  }
  double norm = 0.0;
  for (double v : mu) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : mu) v = separation * v / norm;
  return mu;
}

int jitter_radius(double noise) {
  if (noise <= 0.0) return 0;
  return std::min(2, static_cast<int>(std::ceil(noise * 10.0)));
}

std::vector<MotifRect> derive_motif(const SynthSpec& spec) {
  std::uint64_t c = 0;
  auto u = [&] { return uniform_open(spec.seed, kMotifGeom, c++); };
  std::vector<MotifRect> motif;
  for (int r = 0; r < 3; ++r) {
    MotifRect m;
    m.w = 4 + static_cast<int>(u() * (spec.window_w / 2 - 4));
    m.h = 4 + static_cast<int>(u() * (spec.window_h / 2 - 4));
    m.x = 4 + static_cast<int>(u() * (spec.window_w - 8 - m.w + 1));
    m.y = 4 + static_cast<int>(u() * (spec.window_h - 8 - m.h + 1));
    m.level = 0.70 + 0.25 * u();
    motif.push_back(m);
  }
  return motif;
}

void stamp_max(GrayImage& img, int x0, int y0, int w, int h, double level) {
  const int xa = std::max(0, x0), xb = std::min(img.width, x0 + w);
  const int ya = std::max(0, y0), yb = std::min(img.height, y0 + h);
  for (int y = ya; y < yb; ++y)
    for (int x = xa; x < xb; ++x) img.at(x, y) = std::max(img.at(x, y), level);
}

GrayImage render_positive(const SynthSpec& spec, std::span<const MotifRect> motif,
                          std::uint64_t seed, std::uint64_t index) {
  GrayImage img(spec.window_w, spec.window_h, 0.25);
  const int jr = jitter_radius(spec.noise);
  int dx = 0, dy = 0;
  if (jr > 0) {
    dx = -jr + static_cast<int>(uniform_open(seed, kPosJitter, 2 * index) * (2 * jr + 1));
    dy = -jr + static_cast<int>(uniform_open(seed, kPosJitter, 2 * index + 1) * (2 * jr + 1));
  }
  // Per-rectangle dimming keeps an un-occluded rectangle at level
  // >= 0.70 * 0.75 = 0.525, above the 0.50 clutter cap.  With probability
  // min(noise, 0.3) one rectangle is additionally knocked down to 70%, which
  // denies any single aligned feature a perfect split while the other
  // rectangles keep the sample detectable.
  const std::uint64_t vbase = index * 8;
  const bool occluded =
      spec.noise > 0.0 && uniform_open(seed, kPosLevel, vbase + 7) < std::min(spec.noise, 0.3);
  const int occ_rect =
      occluded ? static_cast<int>(uniform_open(seed, kPosLevel, vbase + 6) * motif.size()) : -1;
  for (std::size_t r = 0; r < motif.size(); ++r) {
    const MotifRect& m = motif[r];
    double level = m.level *
        (1.0 - std::min(0.5 * spec.noise, 0.25) * uniform_open(seed, kPosLevel, vbase + r));
    if (static_cast<int>(r) == occ_rect) level *= 0.7;
    stamp_max(img, m.x + dx, m.y + dy, m.w, m.h, level);
  }
  if (spec.noise > 0.0) {
    const std::uint64_t base = index * static_cast<std::uint64_t>(img.pixels.size());
    for (std::size_t p = 0; p < img.pixels.size(); ++p)
      img.pixels[p] = clamp01(img.pixels[p] + 0.6 * spec.noise * gaussian(seed, kPosNoise, base + p));
  } else {
    for (double& v : img.pixels) v = clamp01(v);
  }
  return img;
}

GrayImage render_background(const SynthSpec& spec, std::uint64_t seed, std::uint64_t index) {
  GrayImage img(spec.background_w, spec.background_h, 0.25);
  const std::uint64_t rbase = index * 1024;
  std::uint64_t c = rbase;
  auto u = [&] { return uniform_open(seed, kBgRects, c++); };
  const int area = spec.background_w * spec.background_h;
  const int count = std::min(100, 4 + static_cast<int>(u() * 4) + area / 1200);
  for (int t = 0; t < count; ++t) {
    const int bw = 3 + static_cast<int>(u() * (spec.background_w / 4));
    const int bh = 3 + static_cast<int>(u() * (spec.background_h / 4));
    const int bx = static_cast<int>(u() * (spec.background_w - bw + 1));
    const int by = static_cast<int>(u() * (spec.background_h - bh + 1));
    const double level = 0.30 + 0.20 * u();  // dim clutter, capped at 0.50
    stamp_max(img, bx, by, bw, bh, level);
  }
  // A handful of bright distractors in (0.50, 0.62], big enough to load any
  // brightness-mass feature.  Spaced at least a window apart on some axis, so
  // no window ever sees two of them: the motif's multi-rectangle
  // constellation cannot appear in a background by construction.
  struct Placed { int x, y, w, h; };
  std::vector<Placed> brights;
  const int bright_count = std::min(10, 1 + static_cast<int>(u() * 2) + area / 6144);
  c = rbase + 512;
  for (int t = 0; t < bright_count; ++t) {
    const int bw = spec.window_w / 2 + static_cast<int>(u() * (spec.window_w / 2 + 1));
    const int bh = spec.window_h / 2 + static_cast<int>(u() * (spec.window_h / 2 + 1));
    const double level = 0.52 + 0.10 * u();
    for (int attempt = 0; attempt < 20; ++attempt) {
      const int bx = static_cast<int>(u() * (spec.background_w - bw + 1));
      const int by = static_cast<int>(u() * (spec.background_h - bh + 1));
      bool apart = true;
      for (const Placed& p : brights) {
        const bool ax = bx >= p.x + p.w + spec.window_w || p.x >= bx + bw + spec.window_w;
        const bool ay = by >= p.y + p.h + spec.window_h || p.y >= by + bh + spec.window_h;
        if (!ax && !ay) { apart = false; break; }
      }
      if (apart) {
        stamp_max(img, bx, by, bw, bh, level);
        brights.push_back({bx, by, bw, bh});
        break;
      }
    }
  }
  if (spec.noise > 0.0) {
    const std::uint64_t base = index * static_cast<std::uint64_t>(img.pixels.size());
    for (std::size_t p = 0; p < img.pixels.size(); ++p)
      img.pixels[p] = clamp01(img.pixels[p] + 0.6 * spec.noise * gaussian(seed, kBgNoise, base + p));
  }
  return img;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

VectorDataset synth_vectors(const SynthSpec& spec) {
  check_common(spec);
  if (spec.mode != SynthMode::Vectors) throw ConfigError("spec mode is not vectors");
  if (spec.dims < 1) throw ConfigError("synth dims must be >= 1");

  const int d = spec.dims;
  const std::vector<double> mu = mean_profile(d, spec.separation);
  const double neg_spread = spec.noise + 0.2 * spec.separation;

  VectorDataset ds;
  ds.samples = FeatureMatrix(spec.positives + spec.negatives, d);
  ds.labels.assign(static_cast<std::size_t>(spec.positives), 1);
  ds.labels.insert(ds.labels.end(), static_cast<std::size_t>(spec.negatives), -1);
  for (int i = 0; i < spec.positives; ++i)
    for (int j = 0; j < d; ++j)
      ds.samples.at(i, j) =
          mu[j] + spec.noise * gaussian(spec.seed, kVecPos, static_cast<std::uint64_t>(i) * d + j);
  for (int i = 0; i < spec.negatives; ++i)
    for (int j = 0; j < d; ++j)
      ds.samples.at(spec.positives + i, j) =
          neg_spread * gaussian(spec.seed, kVecNeg, static_cast<std::uint64_t>(i) * d + j);
  return ds;
}

PatchDataset synth_patches(const SynthSpec& spec) {
  check_patches(spec);
  PatchDataset ds;
  ds.motif = derive_motif(spec);
  ds.positives.reserve(static_cast<std::size_t>(spec.positives));
  for (int i = 0; i < spec.positives; ++i)
    ds.positives.push_back(render_positive(spec, ds.motif, spec.seed, static_cast<std::uint64_t>(i)));
  ds.backgrounds.reserve(static_cast<std::size_t>(spec.negatives));
  for (int b = 0; b < spec.negatives; ++b)
    ds.backgrounds.push_back(render_background(spec, spec.seed, static_cast<std::uint64_t>(b)));
  return ds;
}

SceneSet synth_scenes(const SynthSpec& spec, int scene_count, int plants_per_scene,
                      std::uint64_t salt) {
  check_patches(spec);
  if (scene_count < 1) throw ConfigError("scene count must be >= 1");
  if (plants_per_scene < 0) throw ConfigError("plants per scene must be >= 0");

  const std::uint64_t sseed = mix_draw(spec.seed, kSceneSeed, salt);
  const std::vector<MotifRect> motif = derive_motif(spec);
  const int ww = spec.window_w, wh = spec.window_h;

  SceneSet set;
  for (int s = 0; s < scene_count; ++s) {
    GrayImage scene = render_background(spec, sseed, static_cast<std::uint64_t>(s));
    std::vector<Detection> truths;
    for (int t = 0; t < plants_per_scene; ++t) {
      const std::uint64_t plant = static_cast<std::uint64_t>(s) * plants_per_scene + t;
      int px = -1, py = -1;
      for (int attempt = 0; attempt < 50 && px < 0; ++attempt) {
        const std::uint64_t a = plant * 128 + static_cast<std::uint64_t>(attempt) * 2;
        const int cx = static_cast<int>(uniform_open(sseed, kPlant, a) * (spec.background_w - ww + 1));
        const int cy =
            static_cast<int>(uniform_open(sseed, kPlant, a + 1) * (spec.background_h - wh + 1));
        bool clear = true;
        for (const Detection& prev : truths) {
          const bool apart_x = cx + ww + 4 <= prev.x || prev.x + prev.w + 4 <= cx;
          const bool apart_y = cy + wh + 4 <= prev.y || prev.y + prev.h + 4 <= cy;
          if (!apart_x && !apart_y) { clear = false; break; }
        }
        if (clear) { px = cx; py = cy; }
      }
      if (px < 0) continue;  // crowded scene; deterministic skip
      const GrayImage patch = render_positive(spec, motif, sseed, plant);
      for (int y = 0; y < wh; ++y)
        for (int x = 0; x < ww; ++x) scene.at(px + x, py + y) = patch.at(x, y);
      truths.push_back({static_cast<double>(px), static_cast<double>(py),
                        static_cast<double>(ww), static_cast<double>(wh), 0.0});
    }
    set.images.push_back(std::move(scene));
    set.truths.push_back(std::move(truths));
  }
  return set;
}

void write_patch_dataset(const PatchDataset& ds, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create dataset directory " + dir + ": " + ec.message());
  if (ds.positives.empty()) throw ConfigError("dataset has no positives");
  const int ww = ds.positives.front().width;
  const int wh = ds.positives.front().height;

  std::ostringstream manifest;
  manifest << "window " << ww << " " << wh << "\n";
  manifest << "motif " << ds.motif.size() << "\n";
  for (const MotifRect& m : ds.motif)
    manifest << "rect " << m.x << " " << m.y << " " << m.w << " " << m.h << " "
             << format_real(m.level) << "\n";
  char name[32];
  for (std::size_t i = 0; i < ds.positives.size(); ++i) {
    std::snprintf(name, sizeof name, "pos_%05zu.pgm", i);
    write_pgm(dir + "/" + name, ds.positives[i]);
    manifest << "positive " << name << "\n";
  }
  for (std::size_t i = 0; i < ds.backgrounds.size(); ++i) {
    std::snprintf(name, sizeof name, "bg_%05zu.pgm", i);
    write_pgm(dir + "/" + name, ds.backgrounds[i]);
    manifest << "background " << name << "\n";
  }
  std::ofstream out(dir + "/manifest.txt", std::ios::binary);
  if (!out) throw ConfigError("cannot write manifest in " + dir);
  out << manifest.str();
  out.flush();
  if (!out) throw ConfigError("failed writing manifest in " + dir);
}

PatchDataset read_patch_dataset(const std::string& dir) {
  std::ifstream in(dir + "/manifest.txt");
  if (!in) throw ConfigError("cannot open manifest in " + dir);

  PatchDataset ds;
  int ww = 0, wh = 0;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    auto malformed = [&] {
      throw ConfigError("manifest line " + std::to_string(line_no) + " malformed: " + line);
    };
    if (tag == "window") {
      if (!(ls >> ww >> wh) || ww <= 0 || wh <= 0) malformed();
    } else if (tag == "motif") {
      int count = 0;
      if (!(ls >> count) || count < 0) malformed();
    } else if (tag == "rect") {
      MotifRect m;
      if (!(ls >> m.x >> m.y >> m.w >> m.h >> m.level)) malformed();
      ds.motif.push_back(m);
    } else if (tag == "positive" || tag == "background") {
      std::string name;
      if (!(ls >> name)) malformed();
      GrayImage img = read_pgm(dir + "/" + name);
      if (tag == "positive") {
        if (ww > 0 && (img.width != ww || img.height != wh))
          throw ConfigError("positive " + name + " does not match manifest window size");
        ds.positives.push_back(std::move(img));
      } else {
        if (ww > 0 && (img.width < ww || img.height < wh))
          throw ConfigError("background " + name + " smaller than manifest window");
        ds.backgrounds.push_back(std::move(img));
      }
    } else {
      malformed();
    }
  }
  if (ds.positives.empty()) throw ConfigError("manifest in " + dir + " lists no positives");
  return ds;
}

void write_vector_dataset(const VectorDataset& ds, const std::string& path) {
  const int n = ds.samples.sample_count();
  const int d = ds.samples.feature_count();
  if (static_cast<std::size_t>(n) != ds.labels.size())
    throw DimensionError("label count does not match sample count");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write vector dataset " + path);
  out << "vectors " << d << " " << n << "\n";
  for (int i = 0; i < n; ++i) {
    out << ds.labels[i];
    for (int j = 0; j < d; ++j) out << " " << format_real(ds.samples.at(i, j));
    out << "\n";
  }
  out.flush();
  if (!out) throw ConfigError("failed writing vector dataset " + path);
}

VectorDataset read_vector_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open vector dataset " + path);
  std::string tag;
  int d = 0, n = 0;
  if (!(in >> tag >> d >> n) || tag != "vectors" || d < 1 || n < 1)
    throw ConfigError("bad vector dataset header in " + path);
  VectorDataset ds;
  ds.samples = FeatureMatrix(n, d);
  ds.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int label = 0;
    if (!(in >> label) || (label != 1 && label != -1))
      throw ConfigError("bad label at sample " + std::to_string(i) + " in " + path);
    ds.labels[i] = label;
    for (int j = 0; j < d; ++j)
      if (!(in >> ds.samples.at(i, j)))
        throw ConfigError("truncated vector dataset at sample " + std::to_string(i) + " in " + path);
  }
  return ds;
}

}  // namespace cascadeprune
