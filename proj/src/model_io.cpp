#include "cascadeprune/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace cascadeprune {
namespace {

std::string real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Tokenized line reader that reports the line number of any shortfall.
// at_end() peeks, so the probed line stays available to next().
struct LineReader {
  std::istringstream in;
  int line_no = 0;
  std::vector<std::string> pending;

  explicit LineReader(const std::string& text) : in(text) {}

  std::vector<std::string> next() {
    if (!pending.empty()) return std::exchange(pending, {});
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      std::istringstream fields(line);
      std::vector<std::string> tokens;
      std::string tok;
      while (fields >> tok) tokens.push_back(tok);
      if (!tokens.empty()) return tokens;
    }
    throw ConfigError("model file ends early at line " + std::to_string(line_no));
  }

  bool at_end() {
    if (!pending.empty()) return false;
    try {
      pending = next();
    } catch (const ConfigError&) {
      return true;
    }
    return false;
  }
};

[[noreturn]] void malformed(const LineReader& r, const std::string& what) {
  throw ConfigError("model line " + std::to_string(r.line_no) + ": " + what);
}

int parse_int(const LineReader& r, const std::string& tok) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(tok, &used);
  } catch (const std::exception&) {
    malformed(r, "expected an integer, got '" + tok + "'");
  }
  if (used != tok.size()) malformed(r, "trailing characters in integer '" + tok + "'");
  return v;
}

double parse_real(const LineReader& r, const std::string& tok) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    malformed(r, "expected a number, got '" + tok + "'");
  }
  if (used != tok.size()) malformed(r, "trailing characters in number '" + tok + "'");
  return v;
}

}  // namespace

std::string serialize_cascade(const Cascade& cascade) {
  std::string out;
  out += "CASCADEPRUNE 1\n";
  out += "window " + std::to_string(cascade.window_w) + " " +
         std::to_string(cascade.window_h) + "\n";
  out += "gamma " + real(cascade.gamma) + "\n";
  for (std::size_t k = 0; k < cascade.nodes.size(); ++k) {
    const NodeClassifier& node = cascade.nodes[k];
    out += "node " + std::to_string(k) + " " + std::to_string(node.terms.size()) +
           " " + real(node.threshold) + "\n";
    for (const NodeTerm& term : node.terms) {
      if (const auto* haar = std::get_if<HaarFeature>(&term.feature)) {
        out += "haar " + haar_kind_name(haar->kind) + " " + std::to_string(haar->x) +
               " " + std::to_string(haar->y) + " " + std::to_string(haar->w) + " " +
               std::to_string(haar->h);
      } else {
        const auto& block = std::get<HogBlock>(term.feature);
        out += "hog " + std::to_string(block.x) + " " + std::to_string(block.y) +
               " " + std::to_string(block.w) + " " + std::to_string(block.h);
        for (double p : block.projection) out += " " + real(p);
      }
      out += " " + real(term.theta) + " " + std::to_string(term.polarity) + " " +
             real(term.coefficient) + "\n";
    }
  }
  return out;
}

Cascade parse_cascade(const std::string& text) {
  LineReader reader(text);

  auto header = reader.next();
  if (header.size() != 2 || header[0] != "CASCADEPRUNE")
    malformed(reader, "expected 'CASCADEPRUNE <version>'");
  if (header[1] != "1")
    malformed(reader, "unsupported model version '" + header[1] + "'");

  Cascade cascade;
  auto window = reader.next();
  if (window.size() != 3 || window[0] != "window")
    malformed(reader, "expected 'window W H'");
  cascade.window_w = parse_int(reader, window[1]);
  cascade.window_h = parse_int(reader, window[2]);
  if (cascade.window_w <= 0 || cascade.window_h <= 0)
    malformed(reader, "window dimensions must be positive");

  auto gamma = reader.next();
  if (gamma.size() != 2 || gamma[0] != "gamma")
    malformed(reader, "expected 'gamma G'");
  cascade.gamma = parse_real(reader, gamma[1]);

  while (!reader.at_end()) {
    auto head = reader.next();
    if (head.size() != 4 || head[0] != "node")
      malformed(reader, "expected 'node K T B'");
    const int index = parse_int(reader, head[1]);
    if (index != static_cast<int>(cascade.nodes.size()))
      malformed(reader, "node index " + head[1] + " out of sequence");
    const int count = parse_int(reader, head[2]);
    if (count < 0) malformed(reader, "negative term count");

    NodeClassifier node;
    node.threshold = parse_real(reader, head[3]);
    for (int t = 0; t < count; ++t) {
      auto tok = reader.next();
      NodeTerm term;
      std::size_t tail;  // position of theta within the token list
      if (tok[0] == "haar") {
        if (tok.size() != 9) malformed(reader, "haar term needs 9 fields");
        HaarFeature f;
        f.kind = haar_kind_from_name(tok[1]);
        f.x = parse_int(reader, tok[2]);
        f.y = parse_int(reader, tok[3]);
        f.w = parse_int(reader, tok[4]);
        f.h = parse_int(reader, tok[5]);
        if (!haar_valid(f, cascade.window_w, cascade.window_h))
          malformed(reader, "feature geometry does not fit the window");
        term.feature = f;
        tail = 6;
      } else if (tok[0] == "hog") {
        if (tok.size() != 5 + kHogDescriptorLength + 3)
          malformed(reader, "hog term needs " +
                                std::to_string(5 + kHogDescriptorLength + 3) +
                                " fields");
        HogBlock block;
        block.x = parse_int(reader, tok[1]);
        block.y = parse_int(reader, tok[2]);
        block.w = parse_int(reader, tok[3]);
        block.h = parse_int(reader, tok[4]);
        for (int p = 0; p < kHogDescriptorLength; ++p)
          block.projection[p] = parse_real(reader, tok[5 + p]);
        term.feature = block;
        tail = 5 + kHogDescriptorLength;
      } else {
        malformed(reader, "unknown term type '" + tok[0] + "'");
      }
      term.theta = parse_real(reader, tok[tail]);
      term.polarity = parse_int(reader, tok[tail + 1]);
      if (term.polarity != 1 && term.polarity != -1)
        malformed(reader, "polarity must be +1 or -1");
      term.coefficient = parse_real(reader, tok[tail + 2]);
      node.terms.push_back(term);
    }
    cascade.nodes.push_back(std::move(node));
  }
  return cascade;
}

void save_cascade(const Cascade& cascade, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << serialize_cascade(cascade);
  if (!out.flush()) throw ConfigError("failed writing model to '" + path + "'");
}

Cascade load_cascade(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open model file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_cascade(buf.str());
}

}  // namespace cascadeprune
