#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "cascadeprune/features.hpp"

using namespace cascadeprune;

namespace {

// Pixels restricted to multiples of 1/256 keep every partial sum exactly
// representable, so integral-image lookups must match naive loops bit for
// bit.
GrayImage random_dyadic_image(int w, int h, std::mt19937_64& rng) {
  GrayImage img(w, h);
  for (double& p : img.pixels) p = static_cast<double>(rng() % 257) / 256.0;
  return img;
}

double naive_rect_sum(const GrayImage& img, int x, int y, int w, int h) {
  double s = 0.0;
  for (int yy = y; yy < y + h; ++yy)
    for (int xx = x; xx < x + w; ++xx) s += img.at(xx, yy);
  return s;
}

// Independent statement of the sign convention: positive minus negative
// rectangles, three-rect middle counted once, four-rect main diagonal
// positive.
double naive_haar(const GrayImage& img, const HaarFeature& f) {
  switch (f.kind) {
    case HaarKind::TwoRectHorizontal:
      return naive_rect_sum(img, f.x, f.y, f.w / 2, f.h) -
             naive_rect_sum(img, f.x + f.w / 2, f.y, f.w / 2, f.h);
    case HaarKind::TwoRectVertical:
      return naive_rect_sum(img, f.x, f.y, f.w, f.h / 2) -
             naive_rect_sum(img, f.x, f.y + f.h / 2, f.w, f.h / 2);
    case HaarKind::ThreeRectHorizontal:
      return naive_rect_sum(img, f.x, f.y, f.w / 3, f.h) +
             naive_rect_sum(img, f.x + 2 * (f.w / 3), f.y, f.w / 3, f.h) -
             naive_rect_sum(img, f.x + f.w / 3, f.y, f.w / 3, f.h);
    case HaarKind::ThreeRectVertical:
      return naive_rect_sum(img, f.x, f.y, f.w, f.h / 3) +
             naive_rect_sum(img, f.x, f.y + 2 * (f.h / 3), f.w, f.h / 3) -
             naive_rect_sum(img, f.x, f.y + f.h / 3, f.w, f.h / 3);
    case HaarKind::FourRect:
      return naive_rect_sum(img, f.x, f.y, f.w / 2, f.h / 2) +
             naive_rect_sum(img, f.x + f.w / 2, f.y + f.h / 2, f.w / 2, f.h / 2) -
             naive_rect_sum(img, f.x + f.w / 2, f.y, f.w / 2, f.h / 2) -
             naive_rect_sum(img, f.x, f.y + f.h / 2, f.w / 2, f.h / 2);
  }
  return 0.0;
}

}  // namespace

TEST_CASE("build_integral corner values") {
  GrayImage ones(2, 2, 1.0);
  const auto ii = build_integral(ones);
  CHECK(ii.entry(2, 2) == 4.0);
  CHECK(ii.entry(0, 0) == 0.0);
  CHECK(ii.entry(1, 1) == 1.0);

  GrayImage zeros(3, 2, 0.0);
  const auto zi = build_integral(zeros);
  for (int y = 0; y <= 2; ++y)
    for (int x = 0; x <= 3; ++x) CHECK(zi.entry(x, y) == 0.0);
}

TEST_CASE("rect_sum basics and bounds") {
  GrayImage ones(2, 2, 1.0);
  const auto ii = build_integral(ones);
  CHECK(rect_sum(ii, 0, 0, 2, 2) == 4.0);
  CHECK(rect_sum(ii, 1, 1, 0, 1) == 0.0);
  CHECK_THROWS_AS(rect_sum(ii, 1, 1, 2, 1), BoundsError);
  CHECK_THROWS_AS(rect_sum(ii, -1, 0, 1, 1), BoundsError);
}

TEST_CASE("rect_sum equals naive summation exactly on dyadic images") {
  std::mt19937_64 rng(7);
  const auto img = random_dyadic_image(16, 16, rng);
  const auto ii = build_integral(img);
  for (int q = 0; q < 1000; ++q) {
    const int x = static_cast<int>(rng() % 16);
    const int y = static_cast<int>(rng() % 16);
    const int w = static_cast<int>(rng() % (17 - x));
    const int h = static_cast<int>(rng() % (17 - y));
    CHECK(rect_sum(ii, x, y, w, h) == naive_rect_sum(img, x, y, w, h));
  }
}

TEST_CASE("haar_response on half-split and constant images") {
  GrayImage split(8, 4, 0.0);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) split.at(x, y) = 1.0;
  const auto ii = build_integral(split);
  const HaarFeature left_right{HaarKind::TwoRectHorizontal, 0, 0, 8, 4};
  CHECK(haar_response(ii, left_right) == 16.0);  // + left area

  GrayImage flat(12, 12, 0.625);
  const auto fi = build_integral(flat);
  CHECK(haar_response(fi, {HaarKind::TwoRectHorizontal, 1, 2, 6, 5}) == 0.0);
  CHECK(haar_response(fi, {HaarKind::TwoRectVertical, 0, 0, 5, 8}) == 0.0);
  CHECK(haar_response(fi, {HaarKind::FourRect, 2, 2, 8, 6}) == 0.0);
  // Three-rect kinds keep the middle once, so a constant image leaves one
  // sub-rectangle of signal: c * (w/3) * h.
  CHECK(haar_response(fi, {HaarKind::ThreeRectHorizontal, 0, 0, 9, 4}) ==
        doctest::Approx(0.625 * 3 * 4).epsilon(1e-12));
}

TEST_CASE("haar_response equals naive pixel loops exactly") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 40; ++trial) {
    const int w = 12 + static_cast<int>(rng() % 14);
    const int h = 12 + static_cast<int>(rng() % 14);
    const auto img = random_dyadic_image(w, h, rng);
    const auto ii = build_integral(img);
    const auto features = enumerate_haar(w, h, 50, rng());
    for (const auto& f : features) CHECK(haar_response(ii, f) == naive_haar(img, f));
  }
}

TEST_CASE("enumerate_haar full grid matches closed-form count") {
  const auto all = enumerate_haar(4, 4, 1 << 20, 0);
  // Independent count: walk every geometry and keep the valid ones.
  int want = 0;
  for (int k = 0; k < 5; ++k)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x)
        for (int h = 1; y + h <= 4; ++h)
          for (int w = 1; x + w <= 4; ++w)
            if (haar_valid({static_cast<HaarKind>(k), x, y, w, h}, 4, 4)) ++want;
  CHECK(static_cast<int>(all.size()) == want);
  CHECK(want == 136);
  for (const auto& f : all) CHECK(haar_valid(f, 4, 4));
  // Duplicate-free: canonical order is strictly increasing.
  for (std::size_t i = 1; i < all.size(); ++i) CHECK_FALSE(all[i] == all[i - 1]);
}

TEST_CASE("enumerate_haar determinism and budget") {
  const auto a = enumerate_haar(12, 12, 100, 42);
  const auto b = enumerate_haar(12, 12, 100, 42);
  CHECK(a == b);
  CHECK(a.size() == 100);
  const auto c = enumerate_haar(12, 12, 100, 43);
  CHECK(a != c);

  const auto one = enumerate_haar(8, 8, 1, 5);
  REQUIRE(one.size() == 1);
  CHECK(haar_valid(one[0], 8, 8));

  CHECK_THROWS_AS(enumerate_haar(8, 8, 0, 1), ConfigError);
}

TEST_CASE("hog_descriptor of a constant image is zero") {
  GrayImage flat(16, 16, 0.5);
  const auto ih = build_integral_histogram(flat);
  const auto v = hog_descriptor(ih, {0, 0, 16, 16, {}});
  for (double e : v) CHECK(e == 0.0);
}

TEST_CASE("hog_descriptor concentrates a vertical step edge in the first bin") {
  // Left half dark, right half bright: gradients point along +x (angle 0),
  // which is bin 0 of each cell touching the edge.
  GrayImage step(16, 16, 0.0);
  for (int y = 0; y < 16; ++y)
    for (int x = 8; x < 16; ++x) step.at(x, y) = 1.0;
  const auto ih = build_integral_histogram(step);
  const auto v = hog_descriptor(ih, {4, 0, 8, 16, {}});
  for (int cell = 0; cell < 4; ++cell)
    for (int bin = 1; bin < 9; ++bin) CHECK(v[cell * 9 + bin] == 0.0);
  CHECK(v[0] > 0.0);
  CHECK(v[9] > 0.0);
}

TEST_CASE("hog_descriptor squared entries sum to at most one") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const auto img = random_dyadic_image(24, 24, rng);
    const auto ih = build_integral_histogram(img);
    const auto blocks = enumerate_hog_blocks(24, 24);
    for (std::size_t i = 0; i < blocks.size(); i += 7) {
      const auto v = hog_descriptor(ih, blocks[i]);
      double ssq = 0.0;
      for (double e : v) ssq += e * e;
      CHECK(ssq <= 1.0 + 1e-6);
      CHECK(ssq >= 0.0);
    }
  }
}

TEST_CASE("hog histogram lookups match direct gradient accumulation") {
  std::mt19937_64 rng(37);
  const auto img = random_dyadic_image(20, 20, rng);
  const auto ih = build_integral_histogram(img);
  // Oracle: recompute per-pixel gradients and bin assignment directly.
  const double pi = 3.14159265358979323846;
  for (int q = 0; q < 200; ++q) {
    const int x = static_cast<int>(rng() % 20);
    const int y = static_cast<int>(rng() % 20);
    const int w = static_cast<int>(rng() % (21 - x));
    const int h = static_cast<int>(rng() % (21 - y));
    std::array<double, 9> want{};
    for (int yy = y; yy < y + h; ++yy)
      for (int xx = x; xx < x + w; ++xx) {
        const double gx =
            img.at(std::min(xx + 1, 19), yy) - img.at(std::max(xx - 1, 0), yy);
        const double gy =
            img.at(xx, std::min(yy + 1, 19)) - img.at(xx, std::max(yy - 1, 0));
        const double mag = std::hypot(gx, gy);
        if (mag <= 0.0) continue;
        double angle = std::atan2(gy, gx);
        if (angle < 0.0) angle += pi;
        if (angle >= pi) angle -= pi;
        const int bin = std::min(static_cast<int>(angle / (pi / 9)), 8);
        want[bin] += mag;
      }
    for (int b = 0; b < 9; ++b)
      CHECK(hist_rect_sum(ih, b, x, y, w, h) == doctest::Approx(want[b]).epsilon(1e-9));
  }
}

TEST_CASE("enumerate_hog_blocks respects aspect ratios and bounds") {
  const auto blocks = enumerate_hog_blocks(24, 24);
  CHECK(blocks.size() > 0);
  for (const auto& b : blocks) {
    CHECK(b.x + b.w <= 24);
    CHECK(b.y + b.h <= 24);
    CHECK(b.w % 2 == 0);
    CHECK(b.h % 2 == 0);
    const int g = std::gcd(b.w, b.h);
    const int aw = b.w / g;
    const int ah = b.h / g;
    const bool ok = (aw == 1 && ah == 1) || (aw == 1 && ah == 2) || (aw == 2 && ah == 1) ||
                    (aw == 1 && ah == 3) || (aw == 3 && ah == 1);
    CHECK(ok);
  }
}

TEST_CASE("fit_projection recovers an axis-aligned separation") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<std::array<double, 36>> pos, neg;
  for (int i = 0; i < 200; ++i) {
    std::array<double, 36> p{}, n{};
    for (int j = 0; j < 36; ++j) {
      p[j] = noise(rng);
      n[j] = noise(rng);
    }
    p[7] += 2.0;  // classes differ only along axis 7
    pos.push_back(p);
    neg.push_back(n);
  }
  const auto fit = fit_projection(pos, neg);
  CHECK_FALSE(fit.degenerate);
  CHECK(std::abs(fit.direction[7]) > 0.95);
  double norm = 0.0;
  for (double e : fit.direction) norm += e * e;
  CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("fit_projection flags identical class means") {
  std::vector<std::array<double, 36>> pos(3), neg(3);
  for (int i = 0; i < 3; ++i) {
    pos[i].fill(0.25 * i);
    neg[i].fill(0.25 * i);
  }
  const auto fit = fit_projection(pos, neg);
  CHECK(fit.degenerate);

  CHECK_THROWS_AS(fit_projection({pos[0]}, neg), InsufficientDataError);
}

TEST_CASE("fit_projection beats random directions on the Fisher ratio") {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::array<double, 36>> pos, neg;
  for (int i = 0; i < 300; ++i) {
    std::array<double, 36> p{}, n{};
    for (int j = 0; j < 36; ++j) {
      const double scale = 0.3 + 0.05 * j;
      p[j] = 0.08 * j + scale * g(rng);
      n[j] = scale * g(rng);
    }
    pos.push_back(p);
    neg.push_back(n);
  }
  const auto fit = fit_projection(pos, neg);

  auto fisher_ratio = [&](const std::array<double, 36>& dir) {
    auto project = [&](const std::vector<std::array<double, 36>>& rows, double& mean,
                       double& var) {
      std::vector<double> vals;
      vals.reserve(rows.size());
      for (const auto& r : rows) {
        double s = 0.0;
        for (int j = 0; j < 36; ++j) s += dir[j] * r[j];
        vals.push_back(s);
      }
      mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      var /= static_cast<double>(vals.size());
    };
    double m1, v1, m2, v2;
    project(pos, m1, v1);
    project(neg, m2, v2);
    return (m1 - m2) * (m1 - m2) / (v1 + v2 + 1e-12);
  };

  const double best = fisher_ratio(fit.direction);
  for (int trial = 0; trial < 100; ++trial) {
    std::array<double, 36> dir{};
    double norm = 0.0;
    for (double& e : dir) {
      e = g(rng);
      norm += e * e;
    }
    norm = std::sqrt(norm);
    for (double& e : dir) e /= norm;
    CHECK(best >= fisher_ratio(dir) - 1e-9);
  }
}

TEST_CASE("pgm round trip preserves quantized pixels") {
  std::mt19937_64 rng(53);
  GrayImage img(9, 5);
  for (double& p : img.pixels) p = static_cast<double>(rng() % 256) / 255.0;
  const auto path = std::filesystem::temp_directory_path() / "cascadeprune_test.pgm";
  write_pgm(path.string(), img);
  const auto back = read_pgm(path.string());
  REQUIRE(back.width == 9);
  REQUIRE(back.height == 5);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(back.pixels[i] == img.pixels[i]);
  std::filesystem::remove(path);
}

TEST_CASE("ascii pgm reader matches binary payload") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "cascadeprune_ascii.pgm";
  {
    FILE* f = std::fopen(path.string().c_str(), "w");
    REQUIRE(f != nullptr);
    std::fputs("P2\n# comment line\n3 2\n255\n0 128 255\n64 32 16\n", f);
    std::fclose(f);
  }
  const auto img = read_pgm(path.string());
  REQUIRE(img.width == 3);
  REQUIRE(img.height == 2);
  CHECK(img.at(0, 0) == 0.0);
  CHECK(img.at(1, 0) == 128.0 / 255.0);
  CHECK(img.at(2, 0) == 1.0);
  CHECK(img.at(2, 1) == 16.0 / 255.0);
  std::filesystem::remove(path);
}

TEST_CASE("resize_bilinear stays in range and hits exact half scale") {
  std::mt19937_64 rng(59);
  const auto img = random_dyadic_image(16, 12, rng);
  const auto small = resize_bilinear(img, 8, 6);
  REQUIRE(small.width == 8);
  REQUIRE(small.height == 6);
  for (double p : small.pixels) {
    CHECK(p >= 0.0);
    CHECK(p <= 1.0);
  }
  // Exact 2x downscale averages aligned 2x2 neighborhoods.
  CHECK(small.at(3, 2) ==
        doctest::Approx(0.25 * (img.at(6, 4) + img.at(7, 4) + img.at(6, 5) + img.at(7, 5)))
            .epsilon(1e-12));
  // Identity resize is exact.
  const auto same = resize_bilinear(img, 16, 12);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(same.pixels[i] == img.pixels[i]);
}
