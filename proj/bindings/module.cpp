#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <vector>

#include "cascadeprune/cascade.hpp"
#include "cascadeprune/detect.hpp"
#include "cascadeprune/errors.hpp"
#include "cascadeprune/image.hpp"
#include "cascadeprune/model_io.hpp"
#include "cascadeprune/synth.hpp"

namespace py = pybind11;
using namespace cascadeprune;

// The module mirrors the C++ surface: synthetic data, node/cascade
// training, scanning, evaluation, and model serialization.  Span-typed
// functions get list-taking wrappers; everything else binds directly.
PYBIND11_MODULE(cascadeprune, m) {
  py::register_exception<Error>(m, "CascadeError");

  py::class_<GrayImage>(m, "GrayImage")
      .def(py::init<>())
      .def(py::init<int, int, double>(), py::arg("width"), py::arg("height"),
           py::arg("fill") = 0.0)
      .def_readwrite("width", &GrayImage::width)
      .def_readwrite("height", &GrayImage::height)
      .def_readwrite("pixels", &GrayImage::pixels)
      .def("at", [](const GrayImage& img, int x, int y) { return img.at(x, y); })
      .def("set",
           [](GrayImage& img, int x, int y, double v) { img.at(x, y) = v; });
  m.def("read_pgm", &read_pgm);
  m.def("write_pgm", &write_pgm);

  py::class_<FeatureMatrix>(m, "FeatureMatrix")
      .def(py::init([](const std::vector<std::vector<double>>& rows) {
        const int n = static_cast<int>(rows.size());
        const int d = n == 0 ? 0 : static_cast<int>(rows[0].size());
        FeatureMatrix matrix(n, d);
        for (int i = 0; i < n; ++i) {
          if (static_cast<int>(rows[i].size()) != d)
            throw DimensionError("ragged rows in feature matrix");
          for (int j = 0; j < d; ++j) matrix.at(i, j) = rows[i][j];
        }
        return matrix;
      }))
      .def("sample_count", &FeatureMatrix::sample_count)
      .def("feature_count", &FeatureMatrix::feature_count)
      .def("at", [](const FeatureMatrix& matrix, int i, int j) {
        return matrix.at(i, j);
      });

  py::enum_<SynthMode>(m, "SynthMode")
      .value("Vectors", SynthMode::Vectors)
      .value("Patches", SynthMode::Patches);
  py::class_<SynthSpec>(m, "SynthSpec")
      .def(py::init<>())
      .def_readwrite("mode", &SynthSpec::mode)
      .def_readwrite("dims", &SynthSpec::dims)
      .def_readwrite("separation", &SynthSpec::separation)
      .def_readwrite("window_w", &SynthSpec::window_w)
      .def_readwrite("window_h", &SynthSpec::window_h)
      .def_readwrite("background_w", &SynthSpec::background_w)
      .def_readwrite("background_h", &SynthSpec::background_h)
      .def_readwrite("positives", &SynthSpec::positives)
      .def_readwrite("negatives", &SynthSpec::negatives)
      .def_readwrite("noise", &SynthSpec::noise)
      .def_readwrite("seed", &SynthSpec::seed);
  py::class_<VectorDataset>(m, "VectorDataset")
      .def_readonly("samples", &VectorDataset::samples)
      .def_readonly("labels", &VectorDataset::labels);
  py::class_<MotifRect>(m, "MotifRect")
      .def_readonly("x", &MotifRect::x)
      .def_readonly("y", &MotifRect::y)
      .def_readonly("w", &MotifRect::w)
      .def_readonly("h", &MotifRect::h)
      .def_readonly("level", &MotifRect::level);
  py::class_<PatchDataset>(m, "PatchDataset")
      .def_readonly("positives", &PatchDataset::positives)
      .def_readonly("backgrounds", &PatchDataset::backgrounds)
      .def_readonly("motif", &PatchDataset::motif);
  py::class_<SceneSet>(m, "SceneSet")
      .def_readonly("images", &SceneSet::images)
      .def_readonly("truths", &SceneSet::truths);
  m.def("synth_vectors", &synth_vectors);
  m.def("synth_patches", &synth_patches);
  m.def("synth_scenes", &synth_scenes, py::arg("spec"), py::arg("scene_count"),
        py::arg("plants_per_scene"), py::arg("salt"));
  m.def("write_vector_dataset", &write_vector_dataset);
  m.def("read_vector_dataset", &read_vector_dataset);
  m.def("write_patch_dataset", &write_patch_dataset);
  m.def("read_patch_dataset", &read_patch_dataset);

  py::enum_<Trainer>(m, "Trainer")
      .value("Pruning", Trainer::Pruning)
      .value("AdaBoost", Trainer::AdaBoost)
      .value("AdaBoostLda", Trainer::AdaBoostLda)
      .value("AdaBoostLac", Trainer::AdaBoostLac);
  py::class_<NodeStats>(m, "NodeStats")
      .def_readonly("detection_rate", &NodeStats::detection_rate)
      .def_readonly("false_positive_rate", &NodeStats::false_positive_rate);
  py::class_<NodeTrainConfig>(m, "NodeTrainConfig")
      .def(py::init<>())
      .def_readwrite("t1", &NodeTrainConfig::t1)
      .def_readwrite("t", &NodeTrainConfig::t)
      .def_readwrite("gamma", &NodeTrainConfig::gamma)
      .def_readwrite("target_fp", &NodeTrainConfig::target_fp)
      .def_readwrite("trainer", &NodeTrainConfig::trainer)
      .def_readwrite("threads", &NodeTrainConfig::threads)
      .def_readwrite("seed", &NodeTrainConfig::seed)
      .def_readwrite("feature_fraction", &NodeTrainConfig::feature_fraction);
  py::class_<ValueNodeResult>(m, "ValueNodeResult")
      .def_readonly("pool_feature_ids", &ValueNodeResult::pool_feature_ids)
      .def_readonly("coefficients", &ValueNodeResult::coefficients)
      .def_readonly("threshold", &ValueNodeResult::threshold)
      .def_readonly("train_stats", &ValueNodeResult::train_stats)
      .def_readonly("short_pool", &ValueNodeResult::short_pool)
      .def("size", &ValueNodeResult::size);
  m.def("train_node_values",
        [](const FeatureMatrix& pool, const std::vector<int>& labels,
           const NodeTrainConfig& config) {
          return train_node_values(pool, labels, config);
        });
  m.def("value_node_margin", &value_node_margin);
  m.def("place_threshold",
        [](const std::vector<double>& negative_margins, double target_fp) {
          return place_threshold(negative_margins, target_fp);
        });

  py::class_<NodeClassifier>(m, "NodeClassifier")
      .def_readonly("threshold", &NodeClassifier::threshold)
      .def_readonly("train_stats", &NodeClassifier::train_stats)
      .def("size", [](const NodeClassifier& node) { return node.terms.size(); })
      .def("coefficients", [](const NodeClassifier& node) {
        std::vector<double> out;
        for (const NodeTerm& term : node.terms) out.push_back(term.coefficient);
        return out;
      });
  py::class_<Cascade>(m, "Cascade")
      .def_readonly("window_w", &Cascade::window_w)
      .def_readonly("window_h", &Cascade::window_h)
      .def_readonly("gamma", &Cascade::gamma)
      .def_readonly("nodes", &Cascade::nodes)
      .def_readonly("depleted", &Cascade::depleted)
      .def("uses_hog", &Cascade::uses_hog)
      .def("__eq__",
           [](const Cascade& a, const Cascade& b) { return a == b; });
  py::class_<ClassifyOutcome>(m, "ClassifyOutcome")
      .def_readonly("accepted", &ClassifyOutcome::accepted)
      .def_readonly("confidence", &ClassifyOutcome::confidence)
      .def_readonly("features_evaluated", &ClassifyOutcome::features_evaluated);
  m.def("cascade_classify", &cascade_classify);

  py::class_<RatePair>(m, "RatePair")
      .def(py::init([](double dr, double fp) { return RatePair{dr, fp}; }),
           py::arg("dr"), py::arg("fp"))
      .def_readwrite("dr", &RatePair::dr)
      .def_readwrite("fp", &RatePair::fp);
  m.def("overall_rates", [](const std::vector<RatePair>& node_rates) {
    return overall_rates(node_rates);
  });

  py::class_<CascadeTrainConfig>(m, "CascadeTrainConfig")
      .def(py::init<>())
      .def_readwrite("schedule", &CascadeTrainConfig::schedule)
      .def_readwrite("gamma", &CascadeTrainConfig::gamma)
      .def_readwrite("target_fp", &CascadeTrainConfig::target_fp)
      .def_readwrite("negative_count", &CascadeTrainConfig::negative_count)
      .def_readwrite("node_dr_goal", &CascadeTrainConfig::node_dr_goal)
      .def_readwrite("threads", &CascadeTrainConfig::threads)
      .def_readwrite("seed", &CascadeTrainConfig::seed)
      .def_readwrite("haar_budget", &CascadeTrainConfig::haar_budget)
      .def_readwrite("use_hog", &CascadeTrainConfig::use_hog)
      .def_readwrite("trainer", &CascadeTrainConfig::trainer);
  m.def(
      "train_cascade",
      [](const CascadeTrainConfig& config, const std::vector<GrayImage>& positives,
         const std::vector<GrayImage>& backgrounds, int window_w, int window_h) {
        BootstrapPool pool;
        pool.images = backgrounds;
        return train_cascade(config, positives, pool, window_w, window_h);
      },
      py::arg("config"), py::arg("positives"), py::arg("backgrounds"),
      py::arg("window_w"), py::arg("window_h"));

  py::class_<Detection>(m, "Detection")
      .def(py::init<>())
      .def(py::init([](double x, double y, double w, double h, double score) {
             return Detection{x, y, w, h, score};
           }),
           py::arg("x"), py::arg("y"), py::arg("w"), py::arg("h"),
           py::arg("score") = 0.0)
      .def_readwrite("x", &Detection::x)
      .def_readwrite("y", &Detection::y)
      .def_readwrite("w", &Detection::w)
      .def_readwrite("h", &Detection::h)
      .def_readwrite("score", &Detection::score);
  py::class_<MatchCounts>(m, "MatchCounts")
      .def_readonly("matched", &MatchCounts::matched)
      .def_readonly("false_positives", &MatchCounts::false_positives)
      .def_readonly("truth_count", &MatchCounts::truth_count)
      .def("detection_rate", &MatchCounts::detection_rate);
  m.def("scan", &scan, py::arg("image"), py::arg("cascade"),
        py::arg("scale_factor") = 1.25, py::arg("stride") = 1);
  m.def("merge_detections", [](const std::vector<Detection>& detections) {
    return merge_detections(detections);
  });
  m.def("evaluate_detections",
        [](const std::vector<Detection>& detections,
           const std::vector<Detection>& truths) {
          return evaluate_detections(detections, truths);
        });

  m.def("serialize_cascade", &serialize_cascade);
  m.def("parse_cascade", &parse_cascade);
  m.def("save_cascade", &save_cascade);
  m.def("load_cascade", &load_cascade);
}
