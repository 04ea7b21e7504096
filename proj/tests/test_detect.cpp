#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "cascadeprune/detect.hpp"

using namespace cascadeprune;

namespace {

// Transitive closure over pairwise overlap >= 0.5, direct breadth-first
// walk on an adjacency matrix, components and sums accumulated in index
// order exactly as the contract requires.  One round only; the full oracle
// iterates rounds below.
std::vector<Detection> closure_pass(const std::vector<Detection>& dets) {
  const int n = static_cast<int>(dets.size());
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      adj[i][j] = i != j && overlap_ratio(dets[i], dets[j]) >= 0.5;

  std::vector<int> component(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (component[i] >= 0) continue;
    std::vector<int> stack = {i};
    component[i] = next;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int u = 0; u < n; ++u)
        if (adj[v][u] && component[u] < 0) {
          component[u] = next;
          stack.push_back(u);
        }
    }
    ++next;
  }

  std::vector<Detection> out(next);
  std::vector<int> size(next, 0);
  for (int i = 0; i < n; ++i) {
    Detection& acc = out[component[i]];
    acc.x += dets[i].x;
    acc.y += dets[i].y;
    acc.w += dets[i].w;
    acc.h += dets[i].h;
    acc.score += dets[i].score;
    ++size[component[i]];
  }
  for (int c = 0; c < next; ++c) {
    out[c].x /= size[c];
    out[c].y /= size[c];
    out[c].w /= size[c];
    out[c].h /= size[c];
    out[c].score /= size[c];
  }
  return out;
}

std::vector<Detection> closure_merge(std::vector<Detection> dets) {
  for (;;) {
    std::vector<Detection> next = closure_pass(dets);
    if (next.size() == dets.size()) return dets;
    dets = std::move(next);
  }
}

long naive_window_count(int iw, int ih, int ww, int wh, double factor, int stride) {
  long total = 0;
  for (int level = 0;; ++level) {
    const int sw = static_cast<int>(std::lround(iw / std::pow(factor, level)));
    const int sh = static_cast<int>(std::lround(ih / std::pow(factor, level)));
    if (sw < ww || sh < wh) break;
    long rows = 0, cols = 0;
    for (int y = 0; y + wh <= sh; y += stride) ++rows;
    for (int x = 0; x + ww <= sw; x += stride) ++cols;
    total += rows * cols;
  }
  return total;
}

GrayImage jitter_square(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const int side = w / 2 + static_cast<int>(seed % 3) - 1;
  const int x0 = 2 + static_cast<int>(uni(rng) * (w - side - 4));
  const int y0 = 2 + static_cast<int>(uni(rng) * (h - side - 4));
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool inside = x >= x0 && x < x0 + side && y >= y0 && y < y0 + side;
      img.at(x, y) =
          std::clamp((inside ? 0.65 : 0.25) + 0.4 * (uni(rng) - 0.5), 0.0, 1.0);
    }
  return img;
}

GrayImage textured_background(int w, int h, int squares, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      img.at(x, y) = std::clamp(0.25 + 0.4 * (uni(rng) - 0.5), 0.0, 1.0);
  for (int s = 0; s < squares; ++s) {
    const int side = 3 + static_cast<int>(uni(rng) * ((w + 4) / 5));
    const int x0 = static_cast<int>(uni(rng) * (w - side));
    const int y0 = static_cast<int>(uni(rng) * (h - side));
    for (int y = y0; y < y0 + side; ++y)
      for (int x = x0; x < x0 + side; ++x)
        img.at(x, y) = std::clamp(img.at(x, y) + 0.15, 0.0, 1.0);
  }
  return img;
}

using Box = std::tuple<double, double, double, double>;

std::set<Box> position_set(const std::vector<Detection>& dets) {
  std::set<Box> out;
  for (const auto& d : dets) out.insert({d.x, d.y, d.w, d.h});
  return out;
}

}  // namespace

TEST_CASE("overlap ratio and pascal criterion on worked boxes") {
  const Detection a{0, 0, 10, 10, 0};
  CHECK(overlap_ratio(a, a) == 1.0);
  CHECK(pascal_match(a, a));

  const Detection apart{20, 20, 10, 10, 0};
  CHECK(overlap_ratio(a, apart) == 0.0);
  CHECK_FALSE(pascal_match(a, apart));

  // Intersection 50, union 150: exactly one third.
  const Detection half{5, 0, 10, 10, 0};
  CHECK(overlap_ratio(a, half) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK_FALSE(pascal_match(a, half));

  // Symmetry over random pairs.
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uni(0.0, 30.0);
  for (int i = 0; i < 200; ++i) {
    const Detection p{uni(rng), uni(rng), 1.0 + uni(rng), 1.0 + uni(rng), 0};
    const Detection q{uni(rng), uni(rng), 1.0 + uni(rng), 1.0 + uni(rng), 0};
    CHECK(overlap_ratio(p, q) == overlap_ratio(q, p));
    CHECK(pascal_match(p, q) == pascal_match(q, p));
  }
}

TEST_CASE("window grid arithmetic matches the naive count") {
  // 24-window over 32x32 at stride 4: 3x3 grid at level 0, one window at
  // the 26-pixel level, nothing past that.
  CHECK(window_count(32, 32, 24, 24, 1.25, 4) == 10);

  std::mt19937 rng(19);
  std::uniform_int_distribution<int> dim(8, 60);
  std::uniform_int_distribution<int> win(4, 30);
  std::uniform_int_distribution<int> stride(1, 5);
  for (int i = 0; i < 200; ++i) {
    const int iw = dim(rng), ih = dim(rng), ww = win(rng), wh = win(rng);
    const int s = stride(rng);
    CHECK(window_count(iw, ih, ww, wh, 1.25, s) ==
          naive_window_count(iw, ih, ww, wh, 1.25, s));
  }

  CHECK_THROWS_AS(window_count(32, 32, 24, 24, 1.0, 4), ConfigError);
  CHECK_THROWS_AS(window_count(32, 32, 24, 24, 1.25, 0), ConfigError);
}

TEST_CASE("an accept-all scan emits every grid window inside the image") {
  GrayImage img(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) img.at(x, y) = (x * 31 + y * 17) % 97 / 96.0;

  Cascade pass_all;
  pass_all.window_w = 24;
  pass_all.window_h = 24;

  const auto dets = scan(img, pass_all, 1.25, 4);
  CHECK(static_cast<long>(dets.size()) == window_count(32, 32, 24, 24, 1.25, 4));
  for (const auto& d : dets) {
    CHECK(d.x >= 0.0);
    CHECK(d.y >= 0.0);
    CHECK(d.x + d.w <= 32.0 + 1e-9);
    CHECK(d.y + d.h <= 32.0 + 1e-9);
    CHECK(d.score == 0.0);  // no nodes, vacuous confidence
  }
  // Level 0 detections keep exact integer geometry.
  CHECK(dets[0] == Detection{0, 0, 24, 24, 0});
  CHECK(dets[1] == Detection{4, 0, 24, 24, 0});

  // The coarse level maps back through the 26-pixel grid.
  const auto& coarse = dets.back();
  CHECK(coarse.x == 0.0);
  CHECK(coarse.w == doctest::Approx(24.0 * 32.0 / 26.0).epsilon(1e-12));

  // An image smaller than the window yields nothing.
  CHECK(scan(GrayImage(10, 10, 0.5), pass_all).empty());
}

TEST_CASE("coarser strides scan a subset of the unit-stride grid") {
  GrayImage img(40, 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) img.at(x, y) = (x ^ y) % 13 / 12.0;
  Cascade pass_all;
  pass_all.window_w = 24;
  pass_all.window_h = 24;

  const auto fine = position_set(scan(img, pass_all, 1.25, 1));
  const auto coarse = position_set(scan(img, pass_all, 1.25, 4));
  CHECK(coarse.size() < fine.size());
  for (const auto& box : coarse) CHECK(fine.count(box) == 1);
}

TEST_CASE("merging collapses overlap components to their means") {
  const Detection a{0, 0, 10, 10, 1.0};
  SUBCASE("identical windows") {
    const std::vector<Detection> two = {a, {0, 0, 10, 10, 3.0}};
    const auto merged = merge_detections(two);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].x == 0.0);
    CHECK(merged[0].w == 10.0);
    CHECK(merged[0].score == 2.0);
  }
  SUBCASE("disjoint windows survive") {
    const std::vector<Detection> two = {a, {30, 30, 10, 10, 2.0}};
    const auto merged = merge_detections(two);
    REQUIRE(merged.size() == 2);
    CHECK(merged[0] == two[0]);
    CHECK(merged[1] == two[1]);
  }
  SUBCASE("chains merge transitively") {
    // A overlaps B, B overlaps C, A and C fall short on their own.
    const std::vector<Detection> chain = {
        {0, 0, 10, 10, 1.0}, {3, 0, 10, 10, 2.0}, {6, 0, 10, 10, 3.0}};
    CHECK(overlap_ratio(chain[0], chain[2]) < 0.5);
    const auto merged = merge_detections(chain);
    REQUIRE(merged.size() == 1);
    CHECK(merged[0].x == 3.0);
    CHECK(merged[0].y == 0.0);
    CHECK(merged[0].score == 2.0);
  }
  SUBCASE("empty input") { CHECK(merge_detections({}).empty()); }
}

TEST_CASE("merging agrees with the closure oracle on random boxes") {
  std::mt19937 rng(501);
  std::uniform_real_distribution<double> pos(0.0, 40.0);
  std::uniform_real_distribution<double> size(4.0, 14.0);
  std::uniform_int_distribution<int> len(0, 60);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<Detection> dets(len(rng));
    for (auto& d : dets) d = {pos(rng), pos(rng), size(rng), size(rng), pos(rng)};
    const auto merged = merge_detections(dets);
    const auto expected = closure_merge(dets);
    REQUIRE(merged.size() == expected.size());
    for (std::size_t i = 0; i < merged.size(); ++i) CHECK(merged[i] == expected[i]);
  }
}

TEST_CASE("merging is idempotent even on dense clouds") {
  std::mt19937 rng(733);
  std::uniform_real_distribution<double> pos(0.0, 50.0);
  std::uniform_real_distribution<double> size(4.0, 16.0);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<Detection> dets(40);
    if (trial % 2 == 0)
      for (auto& d : dets) d = {pos(rng), pos(rng), 12.0, 12.0, pos(rng)};
    else
      for (auto& d : dets) d = {pos(rng), pos(rng), size(rng), size(rng), pos(rng)};
    const auto once = merge_detections(dets);
    const auto twice = merge_detections(once);
    REQUIRE(twice.size() == once.size());
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(twice[i] == once[i]);
  }
}

TEST_CASE("evaluation assigns greedily by score, one truth each") {
  const std::vector<Detection> truths = {{0, 0, 10, 10, 0}, {30, 0, 10, 10, 0}};

  SUBCASE("perfect detections") {
    const auto counts = evaluate_detections(truths, truths);
    CHECK(counts.matched == 2);
    CHECK(counts.false_positives == 0);
    CHECK(counts.detection_rate() == 1.0);
  }
  SUBCASE("second detection on a claimed truth becomes a false positive") {
    const std::vector<Detection> dets = {{1, 0, 10, 10, 0.4}, {0, 0, 10, 10, 0.9}};
    const auto counts = evaluate_detections(dets, truths);
    CHECK(counts.matched == 1);
    CHECK(counts.false_positives == 1);
    CHECK(counts.detection_rate() == 0.5);
  }
  SUBCASE("background detections count against") {
    const std::vector<Detection> dets = {{0, 0, 10, 10, 1.0}, {60, 60, 5, 5, 0.2}};
    const auto counts = evaluate_detections(dets, truths);
    CHECK(counts.matched == 1);
    CHECK(counts.false_positives == 1);
  }
  SUBCASE("no truths, every detection false") {
    const auto counts = evaluate_detections(truths, {});
    CHECK(counts.false_positives == 2);
    CHECK(counts.detection_rate() == 1.0);  // vacuous
  }
}

TEST_CASE("node removal traces a deterministic curve with growing accepts") {
  std::vector<GrayImage> pos;
  for (int i = 0; i < 30; ++i) pos.push_back(jitter_square(12, 12, 1000 + i));
  BootstrapPool pool;
  for (int i = 0; i < 3; ++i)
    pool.images.push_back(textured_background(40, 30, 6, 6000 + i));

  CascadeTrainConfig ccfg;
  ccfg.schedule = {{4, 20}, {4, 20}};
  ccfg.negative_count = 60;
  ccfg.haar_budget = 120;
  ccfg.use_hog = false;
  ccfg.seed = 9;
  const Cascade cascade = train_cascade(ccfg, pos, pool, 12, 12, nullptr);
  REQUIRE(cascade.nodes.size() == 2);

  // Scenes with one planted motif each.
  std::vector<GrayImage> scenes;
  std::vector<std::vector<Detection>> truths;
  const int origins[][2] = {{4, 6}, {20, 10}, {8, 16}};
  for (int s = 0; s < 3; ++s) {
    GrayImage scene = textured_background(36, 32, 4, 9100 + s);
    const GrayImage motif = jitter_square(12, 12, 1000 + s);
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 12; ++x)
        scene.at(origins[s][0] + x, origins[s][1] + y) = motif.at(x, y);
    scenes.push_back(scene);
    truths.push_back({Detection{static_cast<double>(origins[s][0]),
                                static_cast<double>(origins[s][1]), 12, 12, 0}});
  }

  // Shorter prefixes only loosen the filter: accept sets grow.
  Cascade one_node = cascade;
  one_node.nodes.pop_back();
  for (const auto& scene : scenes) {
    const auto full = position_set(scan(scene, cascade, 1.25, 2));
    const auto loose = position_set(scan(scene, one_node, 1.25, 2));
    for (const auto& box : full) CHECK(loose.count(box) == 1);
    CHECK(loose.size() >= full.size());
  }

  const auto curve = roc_by_node_removal(cascade, scenes, truths, 1.25, 2, 1);
  REQUIRE(curve.size() == 2);
  CHECK(curve[0].nodes_used == 2);
  CHECK(curve[1].nodes_used == 1);
  CHECK(curve[1].false_positives >= curve[0].false_positives);
  for (const auto& p : curve) {
    CHECK(p.fp_rate >= 0.0);
    CHECK(p.detection_rate >= 0.0);
    CHECK(p.detection_rate <= 1.0);
  }

  // Same inputs, any thread count: byte-identical curve.
  const auto threaded = roc_by_node_removal(cascade, scenes, truths, 1.25, 2, 4);
  CHECK(roc_csv(curve) == roc_csv(threaded));
  const auto replay = roc_by_node_removal(cascade, scenes, truths, 1.25, 2, 1);
  CHECK(roc_csv(curve) == roc_csv(replay));

  CHECK_THROWS_AS(roc_by_node_removal(Cascade{}, scenes, truths, 1.25, 2, 1),
                  ConfigError);
  truths.pop_back();
  CHECK_THROWS_AS(roc_by_node_removal(cascade, scenes, truths, 1.25, 2, 1),
                  DimensionError);
}

TEST_CASE("csv emission is stable and labeled") {
  const std::vector<std::string> names = {"a.pgm", "b.pgm"};
  const std::vector<std::vector<Detection>> dets = {
      {{1.5, 2.0, 12.0, 12.0, 0.25}}, {}};
  CHECK(detections_csv(names, dets) ==
        "image,x,y,w,h,score\n"
        "a.pgm,1.5,2,12,12,0.25\n");
  CHECK_THROWS_AS(detections_csv({names.data(), 1}, dets), DimensionError);

  const std::vector<RocPoint> points = {{2, 1.0, 3, 0.00125}, {1, 0.75, 9, 0.015625}};
  CHECK(roc_csv(points) ==
        "nodes,detection_rate,false_positives,fp_rate\n"
        "2,1,3,0.00125\n"
        "1,0.75,9,0.015625\n");
}
