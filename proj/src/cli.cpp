#include "cascadeprune/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cascadeprune/cascade.hpp"
#include "cascadeprune/detect.hpp"
#include "cascadeprune/errors.hpp"
#include "cascadeprune/image.hpp"
#include "cascadeprune/model_io.hpp"
#include "cascadeprune/synth.hpp"

namespace fs = std::filesystem;

namespace cascadeprune {
namespace {

std::string real17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string real6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Every flag takes a value, so command line and config file share one
// syntax: `--name value` (or `--name=value`) on the command line, `name=value`
// in the file.
struct Flag {
  std::string name;
  std::string help;
  std::function<void(const std::string&)> set;
};

int parse_int(const std::string& flag, const std::string& text, long lo, long hi) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("--" + flag + ": not an integer: '" + text + "'");
  }
  if (used != text.size())
    throw ConfigError("--" + flag + ": not an integer: '" + text + "'");
  if (v < lo || v > hi)
    throw ConfigError("--" + flag + ": " + text + " outside [" + std::to_string(lo) +
                      ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

double parse_real(const std::string& flag, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("--" + flag + ": not a number: '" + text + "'");
  }
  if (used != text.size())
    throw ConfigError("--" + flag + ": not a number: '" + text + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& flag, const std::string& text) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(text, &used);
  } catch (const std::exception&) {
    throw ConfigError("--" + flag + ": not an unsigned integer: '" + text + "'");
  }
  if (used != text.size())
    throw ConfigError("--" + flag + ": not an unsigned integer: '" + text + "'");
  return v;
}

bool parse_bool(const std::string& flag, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes") return true;
  if (text == "0" || text == "false" || text == "no") return false;
  throw ConfigError("--" + flag + ": expected a boolean (1/0/true/false), got '" + text +
                    "'");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string::size_type start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    out.push_back(text.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

// "WxH", both positive.
std::pair<int, int> parse_wh(const std::string& flag, const std::string& text) {
  auto parts = split(text, 'x');
  if (parts.size() != 2)
    throw ConfigError("--" + flag + ": expected WxH, got '" + text + "'");
  return {parse_int(flag, parts[0], 1, 1 << 20), parse_int(flag, parts[1], 1, 1 << 20)};
}

// "T:T1,T:T1,..." with 1 <= T <= T1, stored as (t, t1) pairs.
std::vector<std::pair<int, int>> parse_schedule(const std::string& text) {
  std::vector<std::pair<int, int>> out;
  for (const std::string& entry : split(text, ',')) {
    auto parts = split(entry, ':');
    if (parts.size() != 2)
      throw ConfigError("--schedule: expected T:T1 entries, got '" + entry + "'");
    int t = parse_int("schedule", parts[0], 1, 1 << 20);
    int t1 = parse_int("schedule", parts[1], 1, 1 << 20);
    if (t > t1)
      throw ConfigError("--schedule: entry '" + entry + "' needs T <= T1");
    out.push_back({t, t1});
  }
  return out;
}

std::string render_schedule(const std::vector<std::pair<int, int>>& schedule) {
  std::string out;
  for (const auto& [t, t1] : schedule) {
    if (!out.empty()) out += ",";
    out += std::to_string(t) + ":" + std::to_string(t1);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& flag, const std::string& text) {
  std::vector<int> out;
  for (const std::string& entry : split(text, ','))
    out.push_back(parse_int(flag, entry, 1, 1 << 20));
  return out;
}

Flag* find_flag(std::vector<Flag>& flags, const std::string& name) {
  for (Flag& f : flags)
    if (f.name == name) return &f;
  return nullptr;
}

void apply_config_file(const std::string& path, std::vector<Flag>& flags) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    std::string body = line.substr(first, last - first + 1);
    if (body[0] == '#') continue;
    auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key=value");
    std::string key = body.substr(0, eq);
    std::string value = body.substr(eq + 1);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    auto vstart = value.find_first_not_of(" \t");
    value = vstart == std::string::npos ? "" : value.substr(vstart);
    if (key == "config" || key == "help")
      throw ConfigError(path + ":" + std::to_string(line_no) + ": key '" + key +
                        "' is not allowed in a config file");
    Flag* f = find_flag(flags, key);
    if (!f)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": unknown key '" + key +
                        "'");
    f->set(value);
  }
}

// The config file is applied before any other flag, so flags given on the
// command line override it regardless of their relative order.
std::vector<std::string> parse_args(std::span<char* const> args, std::vector<Flag>& flags,
                                    bool allow_positionals, bool* want_help) {
  std::vector<std::string> tokens(args.begin(), args.end());
  std::vector<bool> consumed(tokens.size(), false);

  auto flag_at = [&](std::size_t i, std::string* name, std::string* value,
                     bool* has_value) {
    const std::string& tok = tokens[i];
    if (tok.size() < 3 || tok.compare(0, 2, "--") != 0) return false;
    auto eq = tok.find('=');
    if (eq != std::string::npos) {
      *name = tok.substr(2, eq - 2);
      *value = tok.substr(eq + 1);
      *has_value = true;
    } else {
      *name = tok.substr(2);
      *has_value = false;
    }
    return true;
  };

  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string name, value;
    bool inline_value = false;
    if (!flag_at(i, &name, &value, &inline_value) || name != "config") continue;
    if (!inline_value) {
      if (i + 1 >= tokens.size()) throw ConfigError("--config needs a value");
      value = tokens[i + 1];
      consumed[i + 1] = true;
    }
    consumed[i] = true;
    apply_config_file(value, flags);
  }

  std::vector<std::string> positionals;
  bool rest_positional = false;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (consumed[i]) continue;
    const std::string& tok = tokens[i];
    if (rest_positional || tok.empty() || tok[0] != '-' || tok == "-") {
      if (!allow_positionals)
        throw ConfigError("unexpected argument '" + tok + "'");
      positionals.push_back(tok);
      continue;
    }
    if (tok == "--") {
      rest_positional = true;
      continue;
    }
    if (tok == "--help") {
      *want_help = true;
      return positionals;
    }
    std::string name, value;
    bool inline_value = false;
    if (!flag_at(i, &name, &value, &inline_value))
      throw ConfigError("malformed flag '" + tok + "'");
    Flag* f = find_flag(flags, name);
    if (!f) throw ConfigError("unknown flag '--" + name + "'");
    if (!inline_value) {
      if (i + 1 >= tokens.size() || consumed[i + 1])
        throw ConfigError("--" + name + " needs a value");
      value = tokens[++i];
    }
    f->set(value);
  }
  return positionals;
}

// --threads, then CASCADEPRUNE_THREADS, then hardware concurrency (0 lets
// the worker pool decide).
int resolve_thread_flag(int flag_value) {
  if (flag_value >= 0) return flag_value;
  if (const char* env = std::getenv("CASCADEPRUNE_THREADS"))
    return parse_int("threads", env, 0, 4096);
  return 0;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void check_gamma_target(double gamma, double target_fp) {
  require(gamma >= 0.0 && gamma <= 1.0,
          "--gamma must lie in [0, 1], got " + real6(gamma));
  require(target_fp > 0.0 && target_fp < 1.0,
          "--target-fp must lie in (0, 1), got " + real6(target_fp));
}

void log_config(const std::string& command,
                const std::vector<std::pair<std::string, std::string>>& kv) {
  std::cerr << "cascadeprune " << command << ": resolved config\n";
  for (const auto& [k, v] : kv) std::cerr << "  " << k << " = " << v << "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  out << text;
  if (!out.flush()) throw ConfigError("failed writing '" + path + "'");
}

// Report data goes to --out when given, else to stdout.
void emit_report(const std::string& out_path, const std::string& text) {
  if (out_path.empty())
    std::cout << text;
  else
    write_text(out_path, text);
}

void print_usage(std::ostream& os) {
  os << "usage: cascadeprune <command> [--config FILE] [flags]\n"
        "\n"
        "commands:\n"
        "  synth       generate a synthetic dataset (vectors, patches, or scenes)\n"
        "  train       train a cascade on a patch dataset, write a model file\n"
        "  train-node  train one node on a vector dataset, report rates per stump count\n"
        "  detect      scan images with a model, emit a detections CSV\n"
        "  eval        score a detections CSV against a truths CSV\n"
        "  inspect     print a readable summary of a model file\n"
        "\n"
        "Flags are --name value; a config file holds the same names as key=value\n"
        "lines and is overridden by flags.  `<command> --help` lists the flags.\n"
        "Exit status: 0 success, 1 bad configuration or input, 2 runtime failure.\n";
}

void print_flag_help(const std::string& command, const std::vector<Flag>& flags,
                     const std::string& positional_note) {
  std::cout << "usage: cascadeprune " << command << " [flags]"
            << (positional_note.empty() ? "" : " " + positional_note) << "\n";
  for (const Flag& f : flags)
    std::cout << "  --" << f.name << "  " << f.help << "\n";
}

// ---------------------------------------------------------------- synth --

int cmd_synth(std::span<char* const> args) {
  SynthSpec spec;
  std::string mode = "vectors";
  std::string out;
  int scene_count = 20;
  int plants = 1;
  std::uint64_t salt = 0;

  std::vector<Flag> flags = {
      {"mode", "vectors | patches | scenes (default vectors)",
       [&](const std::string& v) { mode = v; }},
      {"dims", "vector dimensionality",
       [&](const std::string& v) { spec.dims = parse_int("dims", v, 1, 1 << 20); }},
      {"separation", "class separation (vector mean length)",
       [&](const std::string& v) { spec.separation = parse_real("separation", v); }},
      {"noise", "degradation level",
       [&](const std::string& v) { spec.noise = parse_real("noise", v); }},
      {"positives", "positive sample count",
       [&](const std::string& v) { spec.positives = parse_int("positives", v, 1, 1 << 24); }},
      {"negatives", "negative sample / background count",
       [&](const std::string& v) { spec.negatives = parse_int("negatives", v, 1, 1 << 24); }},
      {"window", "patch size WxH",
       [&](const std::string& v) {
         std::tie(spec.window_w, spec.window_h) = parse_wh("window", v);
       }},
      {"background", "background size WxH",
       [&](const std::string& v) {
         std::tie(spec.background_w, spec.background_h) = parse_wh("background", v);
       }},
      {"scenes", "scene count (scenes mode)",
       [&](const std::string& v) { scene_count = parse_int("scenes", v, 1, 1 << 20); }},
      {"plants", "planted positives per scene (scenes mode)",
       [&](const std::string& v) { plants = parse_int("plants", v, 0, 1 << 20); }},
      {"salt", "extra seed decorrelating scenes from training data (scenes mode)",
       [&](const std::string& v) { salt = parse_u64("salt", v); }},
      {"seed", "generator seed",
       [&](const std::string& v) { spec.seed = parse_u64("seed", v); }},
      {"out", "output file (vectors) or directory (patches, scenes)",
       [&](const std::string& v) { out = v; }},
  };

  bool want_help = false;
  parse_args(args, flags, false, &want_help);
  if (want_help) {
    print_flag_help("synth", flags, "");
    return 0;
  }
  require(mode == "vectors" || mode == "patches" || mode == "scenes",
          "--mode must be vectors, patches, or scenes, got '" + mode + "'");
  require(!out.empty(), "--out is required");
  spec.mode = mode == "vectors" ? SynthMode::Vectors : SynthMode::Patches;

  std::vector<std::pair<std::string, std::string>> kv = {{"mode", mode}};
  if (mode == "vectors") {
    kv.push_back({"dims", std::to_string(spec.dims)});
    kv.push_back({"separation", real6(spec.separation)});
  } else {
    kv.push_back({"window", std::to_string(spec.window_w) + "x" +
                                std::to_string(spec.window_h)});
    kv.push_back({"background", std::to_string(spec.background_w) + "x" +
                                    std::to_string(spec.background_h)});
  }
  kv.push_back({"noise", real6(spec.noise)});
  kv.push_back({"positives", std::to_string(spec.positives)});
  kv.push_back({"negatives", std::to_string(spec.negatives)});
  if (mode == "scenes") {
    kv.push_back({"scenes", std::to_string(scene_count)});
    kv.push_back({"plants", std::to_string(plants)});
    kv.push_back({"salt", std::to_string(salt)});
  }
  kv.push_back({"seed", std::to_string(spec.seed)});
  kv.push_back({"out", out});
  log_config("synth", kv);

  if (mode == "vectors") {
    VectorDataset ds = synth_vectors(spec);
    write_vector_dataset(ds, out);
    std::cerr << "wrote " << ds.samples.sample_count() << " samples to " << out << "\n";
  } else if (mode == "patches") {
    PatchDataset ds = synth_patches(spec);
    write_patch_dataset(ds, out);
    std::cerr << "wrote " << ds.positives.size() << " positives and "
              << ds.backgrounds.size() << " backgrounds to " << out << "\n";
  } else {
    SceneSet ss = synth_scenes(spec, scene_count, plants, salt);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw ConfigError("cannot create directory " + out + ": " + ec.message());
    std::vector<std::string> names;
    for (std::size_t i = 0; i < ss.images.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "scene_%05zu.pgm", i);
      names.push_back(buf);
      write_pgm((fs::path(out) / buf).string(), ss.images[i]);
    }
    write_text((fs::path(out) / "truths.csv").string(),
               detections_csv(names, ss.truths));
    std::cerr << "wrote " << ss.images.size() << " scenes and truths.csv to " << out
              << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- train --

int cmd_train(std::span<char* const> args) {
  CascadeTrainConfig cfg;
  cfg.schedule.clear();
  std::string data, out;
  int threads_flag = -1;

  std::vector<Flag> flags = {
      {"data", "patch dataset directory (from synth --mode patches)",
       [&](const std::string& v) { data = v; }},
      {"schedule", "per-node T:T1 entries, comma separated",
       [&](const std::string& v) { cfg.schedule = parse_schedule(v); }},
      {"gamma", "within-class covariance mix in [0, 1] (default 0.5)",
       [&](const std::string& v) { cfg.gamma = parse_real("gamma", v); }},
      {"target-fp", "per-node false positive target in (0, 1) (default 0.5)",
       [&](const std::string& v) { cfg.target_fp = parse_real("target-fp", v); }},
      {"negatives", "negative pool size per node (default 5000)",
       [&](const std::string& v) {
         cfg.negative_count = parse_int("negatives", v, 1, 1 << 24);
       }},
      {"node-dr-goal", "per-node detection rate warning threshold",
       [&](const std::string& v) { cfg.node_dr_goal = parse_real("node-dr-goal", v); }},
      {"haar-budget", "sampled Haar features per node",
       [&](const std::string& v) {
         cfg.haar_budget = parse_int("haar-budget", v, 1, 1 << 24);
       }},
      {"use-hog", "include HOG block features (default 1)",
       [&](const std::string& v) { cfg.use_hog = parse_bool("use-hog", v); }},
      {"trainer", "pruning | adaboost | adaboost+lda | adaboost+lac",
       [&](const std::string& v) { cfg.trainer = trainer_from_name(v); }},
      {"threads", "worker threads (0 = hardware)",
       [&](const std::string& v) { threads_flag = parse_int("threads", v, 0, 4096); }},
      {"seed", "training seed",
       [&](const std::string& v) { cfg.seed = parse_u64("seed", v); }},
      {"out", "model file to write", [&](const std::string& v) { out = v; }},
  };

  bool want_help = false;
  parse_args(args, flags, false, &want_help);
  if (want_help) {
    print_flag_help("train", flags, "");
    return 0;
  }
  require(!data.empty(), "--data is required");
  require(!out.empty(), "--out is required");
  require(!cfg.schedule.empty(), "--schedule is required");
  check_gamma_target(cfg.gamma, cfg.target_fp);
  cfg.threads = resolve_thread_flag(threads_flag);

  log_config("train", {{"data", data},
                       {"schedule", render_schedule(cfg.schedule)},
                       {"trainer", trainer_name(cfg.trainer)},
                       {"gamma", real6(cfg.gamma)},
                       {"target-fp", real6(cfg.target_fp)},
                       {"negatives", std::to_string(cfg.negative_count)},
                       {"node-dr-goal", real6(cfg.node_dr_goal)},
                       {"haar-budget", std::to_string(cfg.haar_budget)},
                       {"use-hog", cfg.use_hog ? "1" : "0"},
                       {"threads", std::to_string(cfg.threads)},
                       {"seed", std::to_string(cfg.seed)},
                       {"out", out}});

  PatchDataset ds = read_patch_dataset(data);
  require(!ds.positives.empty(), "dataset has no positives");
  require(!ds.backgrounds.empty(), "dataset has no backgrounds");
  const int ww = ds.positives.front().width;
  const int wh = ds.positives.front().height;

  BootstrapPool pool;
  pool.images = ds.backgrounds;
  Cascade cascade = train_cascade(cfg, ds.positives, pool, ww, wh, &std::cerr);
  save_cascade(cascade, out);

  int stumps = 0;
  for (const NodeClassifier& node : cascade.nodes)
    stumps += static_cast<int>(node.terms.size());
  std::cerr << "trained " << cascade.nodes.size() << " nodes (" << stumps
            << " stumps) -> " << out << "\n";
  if (cascade.depleted)
    std::cerr << "negative pool ran dry; schedule was cut short\n";
  return 0;
}

// ----------------------------------------------------------- train-node --

int cmd_train_node(std::span<char* const> args) {
  NodeTrainConfig cfg;
  std::string data, test, out;
  std::vector<int> counts;
  int threads_flag = -1;

  std::vector<Flag> flags = {
      {"data", "training vector dataset file (from synth --mode vectors)",
       [&](const std::string& v) { data = v; }},
      {"test", "held-out vector dataset file (optional)",
       [&](const std::string& v) { test = v; }},
      {"trainer", "pruning | adaboost | adaboost+lda | adaboost+lac",
       [&](const std::string& v) { cfg.trainer = trainer_from_name(v); }},
      {"t1", "stumps picked by boosting (default 100)",
       [&](const std::string& v) { cfg.t1 = parse_int("t1", v, 1, 1 << 20); }},
      {"t", "stumps kept after elimination (default 20)",
       [&](const std::string& v) { cfg.t = parse_int("t", v, 1, 1 << 20); }},
      {"gamma", "within-class covariance mix in [0, 1] (default 0.5)",
       [&](const std::string& v) { cfg.gamma = parse_real("gamma", v); }},
      {"target-fp", "false positive target in (0, 1) (default 0.5)",
       [&](const std::string& v) { cfg.target_fp = parse_real("target-fp", v); }},
      {"counts", "stump counts to tabulate, comma separated (default just --t)",
       [&](const std::string& v) { counts = parse_int_list("counts", v); }},
      {"threads", "worker threads (0 = hardware)",
       [&](const std::string& v) { threads_flag = parse_int("threads", v, 0, 4096); }},
      {"seed", "training seed",
       [&](const std::string& v) { cfg.seed = parse_u64("seed", v); }},
      {"out", "report CSV path (default stdout)",
       [&](const std::string& v) { out = v; }},
  };

  bool want_help = false;
  parse_args(args, flags, false, &want_help);
  if (want_help) {
    print_flag_help("train-node", flags, "");
    return 0;
  }
  require(!data.empty(), "--data is required");
  require(cfg.t <= cfg.t1, "--t must not exceed --t1");
  check_gamma_target(cfg.gamma, cfg.target_fp);
  if (counts.empty()) counts = {cfg.t};
  if (cfg.trainer == Trainer::Pruning)
    for (int c : counts)
      require(c <= cfg.t1, "--counts entry " + std::to_string(c) + " exceeds --t1");
  cfg.threads = resolve_thread_flag(threads_flag);

  std::string counts_text;
  for (int c : counts)
    counts_text += (counts_text.empty() ? "" : ",") + std::to_string(c);
  log_config("train-node", {{"data", data},
                            {"test", test.empty() ? "(none)" : test},
                            {"trainer", trainer_name(cfg.trainer)},
                            {"t1", std::to_string(cfg.t1)},
                            {"t", std::to_string(cfg.t)},
                            {"gamma", real6(cfg.gamma)},
                            {"target-fp", real6(cfg.target_fp)},
                            {"counts", counts_text},
                            {"threads", std::to_string(cfg.threads)},
                            {"seed", std::to_string(cfg.seed)},
                            {"out", out.empty() ? "(stdout)" : out}});

  VectorDataset train = read_vector_dataset(data);
  VectorDataset held;
  const bool have_test = !test.empty();
  if (have_test) {
    held = read_vector_dataset(test);
    require(held.samples.feature_count() == train.samples.feature_count(),
            "test dims " + std::to_string(held.samples.feature_count()) +
                " do not match training dims " +
                std::to_string(train.samples.feature_count()));
  }

  std::string csv = "requested,stumps,train_detection_rate,train_false_positive_rate";
  if (have_test) csv += ",test_detection_rate";
  csv += "\n";

  for (int c : counts) {
    NodeTrainConfig round = cfg;
    round.t = c;
    // Non-pruning trainers boost straight to the requested size.
    if (cfg.trainer != Trainer::Pruning) round.t1 = std::max(cfg.t1, c);
    ValueNodeResult node = train_node_values(train.samples, train.labels, round);

    csv += std::to_string(c) + "," + std::to_string(node.size()) + "," +
           real17(node.train_stats.detection_rate) + "," +
           real17(node.train_stats.false_positive_rate);
    if (have_test) {
      std::vector<double> pos, neg;
      for (int i = 0; i < held.samples.sample_count(); ++i) {
        double m = value_node_margin(node, held.samples, i);
        (held.labels[i] > 0 ? pos : neg).push_back(m);
      }
      // Detection rate at the configured false positive rate on held-out
      // data, the single-node comparison number.
      const double thr = place_threshold(neg, cfg.target_fp);
      int hits = 0;
      for (double m : pos) hits += m >= thr;
      csv += "," + real17(pos.empty() ? 0.0 : static_cast<double>(hits) / pos.size());
    }
    csv += "\n";
  }
  emit_report(out, csv);
  return 0;
}

// --------------------------------------------------------------- detect --

int cmd_detect(std::span<char* const> args) {
  std::string model, out;
  double scale_factor = 1.25;
  int stride = 1;
  bool merge = true;

  std::vector<Flag> flags = {
      {"model", "model file to scan with", [&](const std::string& v) { model = v; }},
      {"scale-factor", "pyramid shrink per level, > 1 (default 1.25)",
       [&](const std::string& v) { scale_factor = parse_real("scale-factor", v); }},
      {"stride", "window step in pixels (default 1)",
       [&](const std::string& v) { stride = parse_int("stride", v, 1, 1 << 20); }},
      {"merge", "merge overlapping detections (default 1)",
       [&](const std::string& v) { merge = parse_bool("merge", v); }},
      {"out", "detections CSV path (default stdout)",
       [&](const std::string& v) { out = v; }},
  };

  bool want_help = false;
  std::vector<std::string> inputs = parse_args(args, flags, true, &want_help);
  if (want_help) {
    print_flag_help("detect", flags, "IMAGE_OR_DIR...");
    return 0;
  }
  require(!model.empty(), "--model is required");
  require(!inputs.empty(), "no input images given");
  require(scale_factor > 1.0, "--scale-factor must exceed 1");

  // Directories expand to their .pgm entries in name order, so a detection
  // run over a dataset directory is reproducible.
  std::vector<std::string> paths;
  for (const std::string& input : inputs) {
    if (fs::is_directory(input)) {
      std::vector<std::string> entries;
      for (const auto& entry : fs::directory_iterator(input))
        if (entry.path().extension() == ".pgm") entries.push_back(entry.path().string());
      std::sort(entries.begin(), entries.end());
      require(!entries.empty(), "directory " + input + " holds no .pgm files");
      paths.insert(paths.end(), entries.begin(), entries.end());
    } else {
      paths.push_back(input);
    }
  }

  log_config("detect", {{"model", model},
                        {"scale-factor", real6(scale_factor)},
                        {"stride", std::to_string(stride)},
                        {"merge", merge ? "1" : "0"},
                        {"images", std::to_string(paths.size())},
                        {"out", out.empty() ? "(stdout)" : out}});

  const Cascade cascade = load_cascade(model);
  std::vector<std::string> names;
  std::vector<std::vector<Detection>> all;
  std::size_t total = 0;
  for (const std::string& path : paths) {
    const GrayImage img = read_pgm(path);
    std::vector<Detection> dets = scan(img, cascade, scale_factor, stride);
    if (merge) dets = merge_detections(dets);
    total += dets.size();
    names.push_back(fs::path(path).filename().string());
    all.push_back(std::move(dets));
  }
  emit_report(out, detections_csv(names, all));
  std::cerr << "scanned " << paths.size() << " images, " << total << " detections\n";
  return 0;
}

// ----------------------------------------------------------------- eval --

struct NamedBoxes {
  std::vector<std::string> order;  // first-appearance order of image names
  std::map<std::string, std::vector<Detection>> by_name;
  std::size_t total = 0;
};

NamedBoxes read_boxes_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "image,x,y,w,h,score")
    throw ConfigError(path + ": expected header image,x,y,w,h,score");

  NamedBoxes boxes;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != 6)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 6 fields");
    Detection d;
    d.x = parse_real("x", fields[1]);
    d.y = parse_real("y", fields[2]);
    d.w = parse_real("w", fields[3]);
    d.h = parse_real("h", fields[4]);
    d.score = parse_real("score", fields[5]);
    if (!boxes.by_name.count(fields[0])) boxes.order.push_back(fields[0]);
    boxes.by_name[fields[0]].push_back(d);
    ++boxes.total;
  }
  return boxes;
}

int cmd_eval(std::span<char* const> args) {
  std::string detections_path, truths_path, out;

  std::vector<Flag> flags = {
      {"detections", "detections CSV (from detect)",
       [&](const std::string& v) { detections_path = v; }},
      {"truths", "ground truth CSV in the same format",
       [&](const std::string& v) { truths_path = v; }},
      {"out", "score-threshold curve CSV path (optional)",
       [&](const std::string& v) { out = v; }},
  };

  bool want_help = false;
  parse_args(args, flags, false, &want_help);
  if (want_help) {
    print_flag_help("eval", flags, "");
    return 0;
  }
  require(!detections_path.empty(), "--detections is required");
  require(!truths_path.empty(), "--truths is required");
  log_config("eval", {{"detections", detections_path},
                      {"truths", truths_path},
                      {"out", out.empty() ? "(none)" : out}});

  const NamedBoxes dets = read_boxes_csv(detections_path);
  const NamedBoxes truths = read_boxes_csv(truths_path);

  // Truth images first, then detection-only images; matching runs per
  // image, so a name present in neither list contributes nothing.
  std::vector<std::string> images = truths.order;
  for (const std::string& name : dets.order)
    if (!truths.by_name.count(name)) images.push_back(name);

  static const std::vector<Detection> kNone;
  auto boxes_of = [](const NamedBoxes& nb, const std::string& name)
      -> const std::vector<Detection>& {
    auto it = nb.by_name.find(name);
    return it == nb.by_name.end() ? kNone : it->second;
  };

  auto score_at = [&](double min_score, bool use_min) {
    MatchCounts sum;
    for (const std::string& name : images) {
      const std::vector<Detection>& d = boxes_of(dets, name);
      std::vector<Detection> kept;
      if (use_min) {
        for (const Detection& box : d)
          if (box.score >= min_score) kept.push_back(box);
      }
      const MatchCounts mc =
          evaluate_detections(use_min ? kept : d, boxes_of(truths, name));
      sum.matched += mc.matched;
      sum.false_positives += mc.false_positives;
      sum.truth_count += mc.truth_count;
    }
    return sum;
  };

  const MatchCounts overall = score_at(0.0, false);
  std::cout << "images " << images.size() << "\n"
            << "truths " << overall.truth_count << "\n"
            << "detections " << dets.total << "\n"
            << "matched " << overall.matched << "\n"
            << "detection_rate " << real17(overall.detection_rate()) << "\n"
            << "false_positives " << overall.false_positives << "\n";

  if (!out.empty()) {
    std::vector<double> scores;
    for (const auto& [name, list] : dets.by_name)
      for (const Detection& d : list) scores.push_back(d.score);
    std::sort(scores.begin(), scores.end(), std::greater<>());
    scores.erase(std::unique(scores.begin(), scores.end()), scores.end());

    std::string csv = "threshold,detection_rate,false_positives\n";
    for (double s : scores) {
      const MatchCounts mc = score_at(s, true);
      csv += real17(s) + "," + real17(mc.detection_rate()) + "," +
             std::to_string(mc.false_positives) + "\n";
    }
    write_text(out, csv);
  }
  return 0;
}

// -------------------------------------------------------------- inspect --

int cmd_inspect(std::span<char* const> args) {
  std::string model;
  std::vector<Flag> flags = {
      {"model", "model file to summarize", [&](const std::string& v) { model = v; }},
  };

  bool want_help = false;
  parse_args(args, flags, false, &want_help);
  if (want_help) {
    print_flag_help("inspect", flags, "");
    return 0;
  }
  require(!model.empty(), "--model is required");
  log_config("inspect", {{"model", model}});

  const Cascade cascade = load_cascade(model);
  int stumps = 0;
  for (const NodeClassifier& node : cascade.nodes)
    stumps += static_cast<int>(node.terms.size());

  std::ostringstream os;
  os << "window " << cascade.window_w << "x" << cascade.window_h << "\n"
     << "gamma " << real6(cascade.gamma) << "\n"
     << "nodes " << cascade.nodes.size() << "\n"
     << "stumps " << stumps << "\n";
  for (std::size_t n = 0; n < cascade.nodes.size(); ++n) {
    const NodeClassifier& node = cascade.nodes[n];
    int haar = 0;
    for (const NodeTerm& term : node.terms)
      haar += std::holds_alternative<HaarFeature>(term.feature);
    os << "node " << n << ": " << node.terms.size() << " terms (haar " << haar
       << ", hog " << node.terms.size() - haar << "), threshold "
       << real6(node.threshold) << "\n";
    os << "  coefficients";
    for (const NodeTerm& term : node.terms) os << " " << real6(term.coefficient);
    os << "\n";
    os << "  features";
    for (const NodeTerm& term : node.terms) {
      if (const auto* h = std::get_if<HaarFeature>(&term.feature))
        os << " " << haar_kind_name(h->kind) << "@" << h->x << "," << h->y << ","
           << h->w << "," << h->h;
      else
        os << " hog@" << std::get<HogBlock>(term.feature).x << ","
           << std::get<HogBlock>(term.feature).y;
    }
    os << "\n";
  }
  std::cout << os.str();
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  try {
    if (argc < 2) {
      print_usage(std::cerr);
      return 1;
    }
    const std::string command = argv[1];
    std::span<char* const> rest(argv + 2, argv + argc);
    if (command == "help" || command == "--help") {
      print_usage(std::cout);
      return 0;
    }
    if (command == "synth") return cmd_synth(rest);
    if (command == "train") return cmd_train(rest);
    if (command == "train-node") return cmd_train_node(rest);
    if (command == "detect") return cmd_detect(rest);
    if (command == "eval") return cmd_eval(rest);
    if (command == "inspect") return cmd_inspect(rest);
    throw ConfigError("unknown command '" + command + "'");
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace cascadeprune
