#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "driftmon/eval.hpp"
#include "driftmon/explain.hpp"
#include "driftmon/io.hpp"
#include "driftmon/online.hpp"

namespace py = pybind11;
using namespace driftmon;

namespace {

EmbeddingBatch make_batch(const MatrixF& vectors, const std::optional<std::vector<Label>>& labels) {
  EmbeddingBatch batch;
  batch.vectors = vectors;
  if (labels) batch.labels = *labels;
  batch.validate();
  return batch;
}

}  // namespace

PYBIND11_MODULE(_driftmon, m) {
  m.doc() = "embedding drift monitoring core";

  py::register_exception<Error>(m, "DriftError");

  py::class_<OfflineConfig>(m, "OfflineConfig")
      .def(py::init([](Index d_prime, Index d_prime_label, std::int64_t n_th, double t_alpha,
                       Index m_w, std::uint64_t seed) {
             OfflineConfig config;
             config.d_prime = d_prime;
             config.d_prime_label = d_prime_label;
             config.n_th = n_th;
             config.t_alpha = t_alpha;
             config.m_w = m_w;
             config.seed = seed;
             return config;
           }),
           py::arg("d_prime") = 150, py::arg("d_prime_label") = 75, py::arg("n_th") = 10000,
           py::arg("t_alpha") = 0.01, py::arg("m_w") = 1000, py::arg("seed") = 0)
      .def_readwrite("d_prime", &OfflineConfig::d_prime)
      .def_readwrite("d_prime_label", &OfflineConfig::d_prime_label)
      .def_readwrite("n_th", &OfflineConfig::n_th)
      .def_readwrite("t_alpha", &OfflineConfig::t_alpha)
      .def_readwrite("m_w", &OfflineConfig::m_w)
      .def_readwrite("seed", &OfflineConfig::seed);

  py::class_<GaussianSummary>(m, "GaussianSummary")
      .def_readonly("mean", &GaussianSummary::mean)
      .def_readonly("covariance", &GaussianSummary::covariance)
      .def_readonly("sample_count", &GaussianSummary::sample_count);

  py::class_<BaselineModel>(m, "BaselineModel")
      .def_readonly("label_set", &BaselineModel::label_set)
      .def_readonly("config", &BaselineModel::config)
      .def_readonly("batch_gaussian", &BaselineModel::batch_gaussian)
      .def_property_readonly("digest", &baseline_digest);

  py::class_<ThresholdSet>(m, "ThresholdSet")
      .def_readonly("t_batch", &ThresholdSet::t_batch)
      .def_readonly("t_label", &ThresholdSet::t_label)
      .def_readonly("n_th", &ThresholdSet::n_th)
      .def_readonly("t_alpha", &ThresholdSet::t_alpha)
      .def_readonly("m_w", &ThresholdSet::m_w)
      .def_readonly("warnings", &ThresholdSet::warnings)
      .def_property_readonly("metric",
                             [](const ThresholdSet& t) { return to_string(t.metric); });

  py::class_<LabelWindowStat>(m, "LabelWindowStat")
      .def_readonly("distance", &LabelWindowStat::distance)
      .def_readonly("drift", &LabelWindowStat::drift)
      .def_readonly("count", &LabelWindowStat::count);

  py::class_<WindowReport>(m, "WindowReport")
      .def_readonly("window_id", &WindowReport::window_id)
      .def_readonly("timestamp", &WindowReport::timestamp)
      .def_readonly("batch_distance", &WindowReport::batch_distance)
      .def_readonly("batch_drift", &WindowReport::batch_drift)
      .def_readonly("label_entries", &WindowReport::label_entries)
      .def_readonly("warnings", &WindowReport::warnings);

  py::class_<KSearchEntry>(m, "KSearchEntry")
      .def_readonly("k", &KSearchEntry::k)
      .def_readonly("silhouette", &KSearchEntry::silhouette)
      .def_readonly("inertia", &KSearchEntry::inertia);

  py::class_<ClusteringResult>(m, "ClusteringResult")
      .def_readonly("k", &ClusteringResult::k)
      .def_readonly("assignment", &ClusteringResult::assignment)
      .def_readonly("centroids", &ClusteringResult::centroids)
      .def_readonly("silhouette", &ClusteringResult::silhouette)
      .def_readonly("inertia", &ClusteringResult::inertia)
      .def_readonly("search_trace", &ClusteringResult::search_trace)
      .def_readonly("inertia_trace", &ClusteringResult::inertia_trace);

  py::class_<PrototypeEntry>(m, "PrototypeEntry")
      .def_readonly("index", &PrototypeEntry::index)
      .def_readonly("distance", &PrototypeEntry::distance);

  m.def("estimate_gaussian", &estimate_gaussian, py::arg("rows"));
  m.def("fdd", py::overload_cast<const GaussianSummary&, const GaussianSummary&>(&fdd),
        py::arg("a"), py::arg("b"));
  m.def(
      "gaussian_distance",
      [](const std::string& metric, const GaussianSummary& a, const GaussianSummary& b) {
        return distance(distance_kind_from(metric), a, b);
      },
      py::arg("metric"), py::arg("a"), py::arg("b"));

  m.def(
      "fit_baseline",
      [](const MatrixF& vectors, const std::vector<Label>& labels, const OfflineConfig& config,
         std::vector<Label> label_set) {
        return fit_baseline(make_batch(vectors, labels), config, std::move(label_set));
      },
      py::arg("vectors"), py::arg("labels"), py::arg("config") = OfflineConfig{},
      py::arg("label_set") = std::vector<Label>{});

  m.def(
      "estimate_thresholds",
      [](const BaselineModel& baseline, const MatrixF& vectors,
         const std::vector<Label>& labels, const std::string& metric,
         std::optional<OfflineConfig> config) {
        return estimate_thresholds(baseline, make_batch(vectors, labels),
                                   distance_kind_from(metric),
                                   config ? *config : baseline.config);
      },
      py::arg("baseline"), py::arg("vectors"), py::arg("labels"), py::arg("metric") = "fdd",
      py::arg("config") = std::nullopt);

  m.def(
      "analyze_window",
      [](const BaselineModel& baseline, const ThresholdSet& thresholds, const MatrixF& vectors,
         const std::optional<std::vector<Label>>& labels) {
        return analyze_window(baseline, thresholds, make_batch(vectors, labels));
      },
      py::arg("baseline"), py::arg("thresholds"), py::arg("vectors"),
      py::arg("labels") = std::nullopt);

  m.def(
      "save_bundle",
      [](const std::string& path, const BaselineModel& baseline,
         const std::optional<ThresholdSet>& thresholds, std::uint64_t seed,
         const std::string& created) {
        ModelBundle bundle;
        bundle.baseline = baseline;
        bundle.thresholds = thresholds;
        bundle.seed = seed;
        bundle.created = created;
        save_bundle(path, bundle);
      },
      py::arg("path"), py::arg("baseline"), py::arg("thresholds") = std::nullopt,
      py::arg("seed") = 0, py::arg("created") = "");

  m.def(
      "load_bundle",
      [](const std::string& path) {
        BundleLoadResult result = load_bundle(path);
        return py::make_tuple(result.bundle.baseline, result.bundle.thresholds,
                              result.warnings);
      },
      py::arg("path"));

  m.def("cluster_select", &cluster_select, py::arg("rows"), py::arg("k_max"),
        py::arg("seed") = 0);
  m.def(
      "extract_prototypes",
      [](const Matrix& rows, const ClusteringResult& clustering, Index top_n) {
        return extract_prototypes(rows, clustering, top_n).prototypes;
      },
      py::arg("rows"), py::arg("clustering"), py::arg("top_n"));
  m.def("purity", &purity, py::arg("assignment"), py::arg("drift_flags"));

  m.def("h_dd", &h_dd, py::arg("a_zero"), py::arg("a_drift"));
  m.def("spearman", &spearman_corr, py::arg("x"), py::arg("y"));
  m.def(
      "generate_pattern",
      [](const std::string& kind, Index total, Index onset, double level, double start,
         double step, Index block) {
        PatternParams params;
        params.total = total;
        params.onset = onset;
        params.level = level;
        params.start = start;
        params.step = step;
        params.block = block;
        return generate_pattern(pattern_kind_from(kind), params).percentages;
      },
      py::arg("kind"), py::arg("total") = 100, py::arg("onset") = 50, py::arg("level") = 40.0,
      py::arg("start") = 20.0, py::arg("step") = 1.0, py::arg("block") = 20);
  m.def(
      "synth_pools",
      [](Index n_labels, Index d, Index rows_per_label, double drift_shift,
         std::uint64_t seed) {
        SamplePools pools = synth_pools(n_labels, d, rows_per_label, drift_shift, seed);
        return py::make_tuple(pools.nondrift.vectors, pools.nondrift.labels,
                              pools.drift.vectors, pools.drift.labels);
      },
      py::arg("n_labels"), py::arg("d"), py::arg("rows_per_label"), py::arg("drift_shift"),
      py::arg("seed") = 0);
}
