#include "cascadeprune/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cascadeprune {

GrayImage::GrayImage(int w, int h, double fill) {
  if (w <= 0 || h <= 0)
    throw DimensionError("image dimensions must be positive, got " + std::to_string(w) + "x" +
                         std::to_string(h));
  width = w;
  height = h;
  pixels.assign(static_cast<std::size_t>(w) * h, fill);
}

void validate_image(const GrayImage& img) {
  if (img.width <= 0 || img.height <= 0)
    throw DimensionError("image dimensions must be positive");
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height)
    throw DimensionError("pixel count " + std::to_string(img.pixels.size()) +
                         " does not match " + std::to_string(img.width) + "x" +
                         std::to_string(img.height));
  for (double p : img.pixels)
    if (!std::isfinite(p)) throw InvalidMatrixError("image has non-finite pixels");
}

IntegralImage build_integral(const GrayImage& img) {
  validate_image(img);
  IntegralImage ii;
  ii.width_ = img.width;
  ii.height_ = img.height;
  const int w1 = img.width + 1;
  ii.sums_.assign(static_cast<std::size_t>(w1) * (img.height + 1), 0.0);
  for (int y = 1; y <= img.height; ++y) {
    double row = 0.0;
    for (int x = 1; x <= img.width; ++x) {
      row += img.at(x - 1, y - 1);
      ii.sums_[static_cast<std::size_t>(y) * w1 + x] =
          ii.sums_[static_cast<std::size_t>(y - 1) * w1 + x] + row;
    }
  }
  return ii;
}

double rect_sum(const IntegralImage& ii, int x, int y, int w, int h) {
  if (x < 0 || y < 0 || w < 0 || h < 0 || x + w > ii.width() || y + h > ii.height())
    throw BoundsError("rectangle (" + std::to_string(x) + "," + std::to_string(y) + "," +
                      std::to_string(w) + "," + std::to_string(h) + ") outside " +
                      std::to_string(ii.width()) + "x" + std::to_string(ii.height()));
  return ii.entry(x + w, y + h) - ii.entry(x, y + h) - ii.entry(x + w, y) + ii.entry(x, y);
}

GrayImage resize_bilinear(const GrayImage& img, int new_width, int new_height) {
  validate_image(img);
  if (new_width <= 0 || new_height <= 0)
    throw DimensionError("target dimensions must be positive");
  GrayImage out(new_width, new_height);
  const double sx = static_cast<double>(img.width) / new_width;
  const double sy = static_cast<double>(img.height) / new_height;
  for (int y = 0; y < new_height; ++y) {
    const double fy = (y + 0.5) * sy - 0.5;
    const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, img.height - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = std::clamp(fy - y0, 0.0, 1.0);
    for (int x = 0; x < new_width; ++x) {
      const double fx = (x + 0.5) * sx - 0.5;
      const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, img.width - 1);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = std::clamp(fx - x0, 0.0, 1.0);
      const double top = img.at(x0, y0) + wx * (img.at(x1, y0) - img.at(x0, y0));
      const double bot = img.at(x0, y1) + wx * (img.at(x1, y1) - img.at(x0, y1));
      out.at(x, y) = top + wy * (bot - top);
    }
  }
  return out;
}

namespace {

int next_pgm_token(std::istream& in) {
  // Skips whitespace and '#' comment lines, then reads one integer.
  while (true) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = -1;
  in >> value;
  return value;
}

}  // namespace

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open image file: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P2") throw ConfigError("not a PGM file (magic " + magic + "): " + path);
  const int w = next_pgm_token(in);
  const int h = next_pgm_token(in);
  const int maxval = next_pgm_token(in);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
    throw ConfigError("unsupported PGM header in " + path);

  GrayImage img(w, h);
  const std::size_t count = static_cast<std::size_t>(w) * h;
  if (magic == "P5") {
    in.get();  // single whitespace after maxval
    std::vector<unsigned char> raw(count);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count));
    if (static_cast<std::size_t>(in.gcount()) != count)
      throw ConfigError("truncated PGM payload in " + path);
    for (std::size_t i = 0; i < count; ++i) img.pixels[i] = raw[i] / 255.0;
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const int v = next_pgm_token(in);
      if (v < 0 || v > maxval) throw ConfigError("bad PGM sample in " + path);
      img.pixels[i] = v / 255.0;
    }
  }
  return img;
}

void write_pgm(const std::string& path, const GrayImage& img) {
  validate_image(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write image file: " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = std::clamp(img.pixels[i], 0.0, 1.0);
    raw[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw ConfigError("failed writing image file: " + path);
}

}  // namespace cascadeprune
