#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "driftmon/eval.hpp"
#include "driftmon/explain.hpp"
#include "driftmon/io.hpp"
#include "driftmon/online.hpp"

using nlohmann::json;
using namespace driftmon;

namespace {

namespace fs = std::filesystem;

struct CommonOpts {
  Index d_prime = 150;
  Index d_prime_label = 75;
  std::int64_t n_th = 10000;
  double t_alpha = 0.01;
  Index window_size = 1000;
  std::string metric = "fdd";
  std::uint64_t seed = 0;
  std::string timestamp;  // empty keeps outputs free of volatile fields
  bool window_size_given = false;
};

// The config file is applied before CLI11 parses, so explicit flags win.
void apply_config_file(const std::string& path, CommonOpts& opts) {
  json config;
  try {
    config = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(ErrorKind::FormatError, path + ": " + e.what());
  }
  if (!config.is_object()) fail(ErrorKind::FormatError, path + ": config must be a JSON object");
  for (const auto& [key, value] : config.items()) {
    try {
      if (key == "d-prime")
        opts.d_prime = value.get<Index>();
      else if (key == "d-prime-label")
        opts.d_prime_label = value.get<Index>();
      else if (key == "n-th")
        opts.n_th = value.get<std::int64_t>();
      else if (key == "t-alpha")
        opts.t_alpha = value.get<double>();
      else if (key == "window-size") {
        opts.window_size = value.get<Index>();
        opts.window_size_given = true;
      }
      else if (key == "metric")
        opts.metric = value.get<std::string>();
      else if (key == "seed")
        opts.seed = value.get<std::uint64_t>();
      else
        fail(ErrorKind::FormatError, path + ": unknown config key '" + key + "'");
    } catch (const json::exception& e) {
      fail(ErrorKind::FormatError, path + ": bad value for '" + key + "': " + e.what());
    }
  }
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& warning : warnings) std::cerr << "warning: " << warning << "\n";
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

json threshold_json(const ThresholdSet& set) {
  json t_label = json::object();
  for (const auto& [label, threshold] : set.t_label)
    t_label[std::to_string(label)] = finite_or_null(threshold);
  return json{{"metric", to_string(set.metric)},
              {"t_batch", finite_or_null(set.t_batch)},
              {"t_label", t_label},
              {"n_th", set.n_th},
              {"t_alpha", set.t_alpha},
              {"m_w", set.m_w}};
}

struct StreamEntry {
  std::string file;
  std::string timestamp;
  std::optional<double> severity;
  std::optional<bool> truth;
};

// A stream is a directory: either manifest.json names the windows in order,
// or every .dlem/.csv file is taken in lexicographic order.
std::vector<StreamEntry> load_stream_entries(const std::string& dir) {
  if (!fs::is_directory(dir)) fail(ErrorKind::IoError, dir + " is not a directory");
  std::vector<StreamEntry> entries;
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  if (fs::exists(manifest_path)) {
    json manifest;
    try {
      manifest = json::parse(read_file(manifest_path.string()));
    } catch (const json::exception& e) {
      fail(ErrorKind::FormatError, manifest_path.string() + ": " + e.what());
    }
    if (!manifest.contains("windows") || !manifest["windows"].is_array())
      fail(ErrorKind::FormatError, manifest_path.string() + ": missing windows array");
    for (const auto& item : manifest["windows"]) {
      StreamEntry entry;
      if (!item.contains("file"))
        fail(ErrorKind::FormatError, manifest_path.string() + ": window entry lacks a file");
      entry.file = (fs::path(dir) / item["file"].get<std::string>()).string();
      if (item.contains("timestamp")) entry.timestamp = item["timestamp"].get<std::string>();
      if (item.contains("severity")) entry.severity = item["severity"].get<double>();
      if (item.contains("truth")) entry.truth = item["truth"].get<int>() != 0;
      entries.push_back(std::move(entry));
    }
    return entries;
  }
  std::vector<std::string> files;
  for (const auto& item : fs::directory_iterator(dir)) {
    if (!item.is_regular_file()) continue;
    const std::string ext = item.path().extension().string();
    if (ext == ".dlem" || ext == ".csv") files.push_back(item.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(ErrorKind::InsufficientData, dir + " holds no window files");
  for (auto& file : files) entries.push_back({std::move(file), "", std::nullopt, std::nullopt});
  return entries;
}

ModelBundle load_bundle_or_die(const std::string& path) {
  BundleLoadResult result = load_bundle(path);
  print_warnings(result.warnings);
  return std::move(result.bundle);
}

int cmd_fit_baseline(const std::string& embeddings, const std::string& output,
                     const CommonOpts& opts) {
  const EmbeddingBatch batch = read_embedding_auto(embeddings);
  OfflineConfig config;
  config.d_prime = opts.d_prime;
  config.d_prime_label = opts.d_prime_label;
  config.n_th = opts.n_th;
  config.t_alpha = opts.t_alpha;
  config.m_w = opts.window_size;
  config.seed = opts.seed;

  ModelBundle bundle;
  bundle.baseline = fit_baseline(batch, config);
  bundle.seed = opts.seed;
  bundle.created = opts.timestamp;
  save_bundle(output, bundle);

  std::cout << "baseline " << baseline_digest(bundle.baseline) << ": " << batch.rows()
            << " rows, " << batch.dim() << " -> " << config.d_prime << " dims, "
            << bundle.baseline.label_set.size() << " labels -> " << output << "\n";
  return 0;
}

int cmd_estimate_threshold(const std::string& model, const std::string& embeddings,
                           const std::string& output, const CommonOpts& opts) {
  ModelBundle bundle = load_bundle_or_die(model);
  const EmbeddingBatch pool = read_embedding_auto(embeddings);

  OfflineConfig config = bundle.baseline.config;  // dimensions are frozen with the model
  config.n_th = opts.n_th;
  config.t_alpha = opts.t_alpha;
  config.m_w = opts.window_size;
  config.seed = opts.seed;

  const DistanceKind metric = distance_kind_from(opts.metric);
  ThresholdSet thresholds = estimate_thresholds(bundle.baseline, pool, metric, config);
  print_warnings(thresholds.warnings);

  bundle.thresholds = thresholds;
  if (!opts.timestamp.empty()) bundle.created = opts.timestamp;
  save_bundle(output, bundle);

  std::cout << "thresholds (" << to_string(metric) << ", t_alpha " << format_double(config.t_alpha)
            << ", m_w " << config.m_w << "): batch " << format_double(thresholds.t_batch);
  for (const auto& [label, threshold] : thresholds.t_label)
    std::cout << ", label " << label << " " << format_double(threshold);
  std::cout << " -> " << output << "\n";
  return 0;
}

int cmd_monitor(const std::string& model, const std::string& stream_dir, const std::string& out,
                const CommonOpts& opts) {
  // Deliberately the only inputs: the frozen bundle and the window files.
  const ModelBundle bundle = load_bundle_or_die(model);
  if (!bundle.thresholds)
    fail(ErrorKind::InvalidInput, model + " carries no thresholds; run estimate-threshold first");
  const ThresholdSet& thresholds = *bundle.thresholds;

  const std::vector<StreamEntry> entries = load_stream_entries(stream_dir);
  MonitorLog log;
  log.baseline_id = baseline_digest(bundle.baseline);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    WindowReport report;
    try {
      report = analyze_window(bundle.baseline, thresholds, read_embedding_auto(entries[i].file));
    } catch (const Error& e) {
      report.warnings.push_back(std::string("window failed: ") + e.what());
    }
    report.window_id = static_cast<std::int64_t>(i);
    report.timestamp = entries[i].timestamp;
    log.reports.push_back(std::move(report));
  }

  render_monitor(log, out);
  json meta = threshold_json(thresholds);
  meta["baseline_id"] = log.baseline_id;
  if (!opts.timestamp.empty()) meta["created"] = opts.timestamp;
  atomic_write_file((fs::path(out) / "meta.json").string(), meta.dump(2) + "\n");

  int flagged = 0;
  for (const auto& report : log.reports) {
    flagged += report.batch_drift;
    print_warnings(report.warnings);
  }
  std::cout << log.reports.size() << " windows analyzed, " << flagged << " flagged -> " << out
            << "\n";
  return 0;
}

int cmd_explain(const std::string& window_file, const std::string& output, Index k_max,
                Index top_n, const std::string& ids_file, std::int64_t label_filter,
                const CommonOpts& opts) {
  const EmbeddingBatch batch = read_embedding_auto(window_file);

  std::vector<Index> source_rows;
  if (label_filter >= 0) {
    if (!batch.has_labels())
      fail(ErrorKind::InvalidInput, window_file + " carries no labels to filter by");
    for (Index i = 0; i < batch.rows(); ++i)
      if (batch.labels[static_cast<std::size_t>(i)] == static_cast<Label>(label_filter))
        source_rows.push_back(i);
    if (source_rows.empty())
      fail(ErrorKind::EmptyLabel, "label " + std::to_string(label_filter) + " has no rows");
  } else {
    source_rows.resize(static_cast<std::size_t>(batch.rows()));
    std::iota(source_rows.begin(), source_rows.end(), Index{0});
  }

  Matrix rows(static_cast<Index>(source_rows.size()), batch.dim());
  for (std::size_t i = 0; i < source_rows.size(); ++i)
    rows.row(static_cast<Index>(i)) = batch.vectors.row(source_rows[i]).cast<double>();

  std::vector<std::string> ids;
  if (!ids_file.empty()) {
    std::string text = read_file(ids_file);
    std::string line;
    for (char c : text) {
      if (c == '\n') {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ids.push_back(std::move(line));
        line.clear();
      } else {
        line += c;
      }
    }
    if (!line.empty()) ids.push_back(std::move(line));
    if (static_cast<Index>(ids.size()) != batch.rows())
      fail(ErrorKind::DimensionError, ids_file + ": " + std::to_string(ids.size()) +
                                          " ids for " + std::to_string(batch.rows()) + " rows");
  }

  const ClusteringResult clustering = cluster_select(rows, k_max, opts.seed);
  ExplanationReport report = extract_prototypes(rows, clustering, top_n);
  report.scope = label_filter >= 0 ? "label " + std::to_string(label_filter) : "batch";

  json search = json::array();
  for (const auto& entry : clustering.search_trace)
    search.push_back(
        {{"k", entry.k}, {"silhouette", entry.silhouette}, {"inertia", entry.inertia}});
  json clusters = json::array();
  for (Index c = 0; c < clustering.k; ++c) {
    Index size = 0;
    for (Index id : clustering.assignment) size += id == c;
    json prototypes = json::array();
    for (const auto& prototype : report.prototypes[static_cast<std::size_t>(c)]) {
      const Index source = source_rows[static_cast<std::size_t>(prototype.index)];
      json entry{{"index", prototype.index},
                 {"source_row", source},
                 {"distance", prototype.distance}};
      if (!ids.empty()) entry["id"] = ids[static_cast<std::size_t>(source)];
      prototypes.push_back(std::move(entry));
    }
    clusters.push_back({{"cluster", c}, {"size", size}, {"prototypes", std::move(prototypes)}});
  }
  json doc{{"scope", report.scope},
           {"k", clustering.k},
           {"silhouette", clustering.silhouette},
           {"inertia", clustering.inertia},
           {"rows", rows.rows()},
           {"search", std::move(search)},
           {"clusters", std::move(clusters)}};
  if (!opts.timestamp.empty()) doc["created"] = opts.timestamp;
  atomic_write_file(output, doc.dump(2) + "\n");

  std::cout << report.scope << ": k " << clustering.k << ", silhouette "
            << format_double(clustering.silhouette) << " -> " << output << "\n";
  return 0;
}

int cmd_simulate(const std::string& out, const std::string& pattern, const PatternParams& params,
                 const std::string& nondrift_file, const std::string& drift_file,
                 Index synth_labels, Index synth_d, Index synth_rows, double drift_shift,
                 const CommonOpts& opts) {
  SamplePools pools;
  if (!nondrift_file.empty() || !drift_file.empty()) {
    if (nondrift_file.empty() || drift_file.empty())
      fail(ErrorKind::InvalidInput, "file pools need both --nondrift and --drift");
    pools.nondrift = read_embedding_auto(nondrift_file);
    pools.drift = read_embedding_auto(drift_file);
  } else {
    pools = synth_pools(synth_labels, synth_d, synth_rows, drift_shift, opts.seed);
  }

  const DriftSchedule schedule = generate_pattern(pattern_kind_from(pattern), params);
  const auto stream = build_stream(pools, schedule, opts.window_size, opts.seed);

  std::error_code ec;
  fs::create_directories(out, ec);
  json windows = json::array();
  for (std::size_t i = 0; i < stream.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "window_%04zu.dlem", i);
    write_embedding_file((fs::path(out) / name).string(), stream[i].batch);
    windows.push_back({{"file", name},
                       {"severity", stream[i].severity},
                       {"truth", stream[i].truth ? 1 : 0}});
  }
  json manifest{{"pattern", pattern},
                {"m_w", opts.window_size},
                {"seed", opts.seed},
                {"windows", std::move(windows)}};
  if (!opts.timestamp.empty()) manifest["created"] = opts.timestamp;
  atomic_write_file((fs::path(out) / "manifest.json").string(), manifest.dump(2) + "\n");

  std::cout << stream.size() << " windows (" << pattern << ", m_w " << opts.window_size
            << ") -> " << out << "\n";
  return 0;
}

int cmd_evaluate(const std::string& model, const std::string& stream_dir, const std::string& out,
                 const CommonOpts& opts) {
  const ModelBundle bundle = load_bundle_or_die(model);
  if (!bundle.thresholds)
    fail(ErrorKind::InvalidInput, model + " carries no thresholds; run estimate-threshold first");
  const ThresholdSet& thresholds = *bundle.thresholds;

  const std::vector<StreamEntry> entries = load_stream_entries(stream_dir);
  for (const auto& entry : entries)
    if (!entry.truth || !entry.severity)
      fail(ErrorKind::InvalidInput,
           stream_dir + ": evaluation needs severity and truth for every window");

  std::error_code ec;
  fs::create_directories(out, ec);

  std::map<double, SeverityRun> runs;
  std::vector<double> distance_curve, severity_curve;
  std::string curve = "window_id,severity,truth,batch_distance,batch_drift\n";
  for (std::size_t i = 0; i < entries.size(); ++i) {
    WindowReport report;
    try {
      report =
          analyze_window(bundle.baseline, thresholds, read_embedding_auto(entries[i].file));
    } catch (const Error& e) {
      report.warnings.push_back(std::string("window failed: ") + e.what());
    }
    print_warnings(report.warnings);

    const double severity = *entries[i].severity;
    const bool truth = *entries[i].truth;
    auto& run = runs[severity];
    run.severity = severity;
    run.predictions.push_back(report.batch_drift);
    run.truths.push_back(truth);
    if (report.batch_distance) {
      distance_curve.push_back(*report.batch_distance);
      severity_curve.push_back(severity);
    }
    curve += std::to_string(i) + "," + format_double(severity) + "," + (truth ? "1" : "0") + ",";
    if (report.batch_distance) curve += format_double(*report.batch_distance);
    curve += ",";
    curve += report.batch_drift ? "1" : "0";
    curve += "\n";
  }
  atomic_write_file((fs::path(out) / "eval_windows.csv").string(), curve);

  std::vector<SeverityRun> run_list;
  for (auto& [severity, run] : runs) run_list.push_back(std::move(run));
  const DetectionSummary summary = evaluate_detection(run_list);

  json accuracy = json::object();
  for (const auto& [severity, value] : summary.accuracy)
    accuracy[format_double(severity)] = value;
  json doc{{"metric", to_string(thresholds.metric)},
           {"m_w", thresholds.m_w},
           {"windows", entries.size()},
           {"accuracy", std::move(accuracy)},
           {"a_zero", summary.a_zero},
           {"a_drift", summary.a_drift},
           {"h_dd", summary.h_dd}};
  try {
    doc["spearman"] = spearman_corr(distance_curve, severity_curve);
  } catch (const Error& e) {
    doc["spearman"] = nullptr;
    std::cerr << "warning: spearman undefined: " << e.what() << "\n";
  }
  if (!opts.timestamp.empty()) doc["created"] = opts.timestamp;
  atomic_write_file((fs::path(out) / "summary.json").string(), doc.dump(2) + "\n");

  std::cout << "a_zero " << format_double(summary.a_zero) << ", a_drift "
            << format_double(summary.a_drift) << ", h_dd " << format_double(summary.h_dd)
            << " -> " << out << "\n";
  return 0;
}

int cmd_bench(std::vector<Index> mw_values, std::vector<Index> d_values, int repeats,
              bool mb_check, Index mb_small, Index mb_large, const std::string& out,
              const CommonOpts& opts) {
  if (mw_values.empty()) mw_values = {1000, 10000};
  if (d_values.empty()) d_values = {256, 1000};
  const auto table = benchmark_runtime(mw_values, d_values, repeats, opts.seed);

  std::string csv = "m_w,d,repeats,mean_seconds,std_seconds\n";
  std::printf("%8s %6s %8s %12s %12s\n", "m_w", "d", "repeats", "mean_s", "std_s");
  for (const auto& cell : table) {
    std::printf("%8lld %6lld %8d %12.4f %12.4f\n", static_cast<long long>(cell.m_w),
                static_cast<long long>(cell.d), cell.repeats, cell.mean_seconds,
                cell.std_seconds);
    csv += std::to_string(cell.m_w) + "," + std::to_string(cell.d) + "," +
           std::to_string(cell.repeats) + "," + format_double(cell.mean_seconds) + "," +
           format_double(cell.std_seconds) + "\n";
  }

  json doc{{"repeats", repeats}, {"cells", json::array()}};
  for (const auto& cell : table)
    doc["cells"].push_back({{"m_w", cell.m_w},
                            {"d", cell.d},
                            {"mean_seconds", cell.mean_seconds},
                            {"std_seconds", cell.std_seconds}});

  if (mb_check) {
    const MbIndependence gap =
        benchmark_mb_independence(mb_small, mb_large, 256, 1000, repeats, opts.seed);
    std::printf("m_b %lld: %.4fs, m_b %lld: %.4fs, gap %.1f%%\n",
                static_cast<long long>(mb_small), gap.small_seconds,
                static_cast<long long>(mb_large), gap.large_seconds,
                100.0 * gap.relative_gap);
    doc["mb_independence"] = {{"mb_small", mb_small},
                              {"mb_large", mb_large},
                              {"small_seconds", gap.small_seconds},
                              {"large_seconds", gap.large_seconds},
                              {"relative_gap", gap.relative_gap}};
  }

  if (!out.empty()) {
    std::error_code ec;
    fs::create_directories(out, ec);
    atomic_write_file((fs::path(out) / "bench.csv").string(), csv);
    atomic_write_file((fs::path(out) / "bench.json").string(), doc.dump(2) + "\n");
    std::cout << "-> " << out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CommonOpts opts;
  try {
    // --config is applied first so explicit flags override it.
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--config" && i + 1 < argc)
        apply_config_file(argv[i + 1], opts);
      else if (arg.rfind("--config=", 0) == 0)
        apply_config_file(arg.substr(9), opts);
    }

    CLI::App app{"drift monitor for embedding streams"};
    app.require_subcommand(1);
    std::string config_path;  // consumed above; registered so parsing accepts it

    const auto add_common = [&](CLI::App* sub, bool with_dims) {
      sub->add_option("--config", config_path, "JSON config file, overridden by flags");
      sub->add_option("--seed", opts.seed, "RNG seed");
      sub->add_option("--timestamp", opts.timestamp,
                      "pin the creation timestamp written into outputs");
      if (with_dims) {
        sub->add_option("--d-prime", opts.d_prime, "per-batch PCA dimensionality");
        sub->add_option("--d-prime-label", opts.d_prime_label, "per-label PCA dimensionality");
      }
    };

    std::string embeddings, model, output, stream_dir, out_dir;

    auto* fit = app.add_subcommand("fit-baseline", "fit the reference model");
    fit->add_option("--embeddings", embeddings, "historical embedding file")->required();
    fit->add_option("--output", output, "model bundle to write")->required();
    fit->add_option("--n-th", opts.n_th, "threshold windows (stored for later stages)");
    fit->add_option("--t-alpha", opts.t_alpha, "threshold sensitivity in [0,1)");
    fit->add_option("--window-size", opts.window_size, "online window size");
    add_common(fit, true);
    fit->callback([&] { cmd_fit_baseline(embeddings, output, opts); });

    auto* est = app.add_subcommand("estimate-threshold", "estimate drift thresholds");
    est->add_option("--model", model, "fitted model bundle")->required();
    est->add_option("--embeddings", embeddings, "threshold embedding file")->required();
    est->add_option("--output", output, "bundle to write")->required();
    est->add_option("--window-size", opts.window_size, "online window size (required)");
    est->add_option("--n-th", opts.n_th, "number of resampled windows");
    est->add_option("--t-alpha", opts.t_alpha, "threshold sensitivity in [0,1)");
    est->add_option("--metric", opts.metric, "fdd|kl|js|mahalanobis|bhattacharyya");
    add_common(est, false);
    est->callback([&] {
      if (!opts.window_size_given && est->count("--window-size") == 0)
        throw CLI::RequiredError("--window-size");
      cmd_estimate_threshold(model, embeddings, output, opts);
    });

    auto* mon = app.add_subcommand("monitor", "analyze a stream of window files");
    mon->add_option("--model", model, "bundle with thresholds")->required();
    mon->add_option("--stream", stream_dir, "directory of window files")->required();
    mon->add_option("--out", out_dir, "output directory")->required();
    add_common(mon, false);
    mon->callback([&] { cmd_monitor(model, stream_dir, out_dir, opts); });

    Index k_max = 5, top_n = 5;
    std::string ids_file;
    std::int64_t label_filter = -1;
    auto* exp = app.add_subcommand("explain", "cluster a window into prototypes");
    exp->add_option("--window", embeddings, "window embedding file")->required();
    exp->add_option("--output", output, "JSON report to write")->required();
    exp->add_option("--k-max", k_max, "largest cluster count tried");
    exp->add_option("--top-n", top_n, "prototypes per cluster");
    exp->add_option("--ids", ids_file, "one sample id per row, resolves prototype indices");
    exp->add_option("--label", label_filter, "explain only rows with this predicted label");
    add_common(exp, false);
    exp->callback(
        [&] { cmd_explain(embeddings, output, k_max, top_n, ids_file, label_filter, opts); });

    std::string pattern = "sudden", nondrift_file, drift_file;
    PatternParams params;
    Index synth_labels = 3, synth_d = 32, synth_rows = 2000;
    double drift_shift = 8.0;
    auto* sim = app.add_subcommand("simulate", "build a synthetic drift stream");
    sim->add_option("--out", out_dir, "stream directory to write")->required();
    sim->add_option("--pattern", pattern, "sudden|incremental|periodic")->required();
    sim->add_option("--total", params.total, "windows in the stream");
    sim->add_option("--onset", params.onset, "clean windows before drift");
    sim->add_option("--level", params.level, "drift percentage when active");
    sim->add_option("--start", params.start, "incremental: severity at onset");
    sim->add_option("--step", params.step, "incremental: growth per window");
    sim->add_option("--block", params.block, "periodic: phase length");
    sim->add_option("--window-size", opts.window_size, "rows per window");
    sim->add_option("--nondrift", nondrift_file, "nondrift pool file (with --drift)");
    sim->add_option("--drift", drift_file, "drift pool file (with --nondrift)");
    sim->add_option("--synth-labels", synth_labels, "synthetic pool: label count");
    sim->add_option("--synth-d", synth_d, "synthetic pool: width");
    sim->add_option("--synth-rows", synth_rows, "synthetic pool: rows per label");
    sim->add_option("--drift-shift", drift_shift, "synthetic pool: displacement in sigma");
    add_common(sim, false);
    sim->callback([&] {
      cmd_simulate(out_dir, pattern, params, nondrift_file, drift_file, synth_labels, synth_d,
                   synth_rows, drift_shift, opts);
    });

    auto* eva = app.add_subcommand("evaluate", "score detection on a truth-annotated stream");
    eva->add_option("--model", model, "bundle with thresholds")->required();
    eva->add_option("--stream", stream_dir, "stream directory with manifest truth")->required();
    eva->add_option("--out", out_dir, "output directory")->required();
    add_common(eva, false);
    eva->callback([&] { cmd_evaluate(model, stream_dir, out_dir, opts); });

    std::vector<Index> mw_values, d_values;
    int repeats = 5;
    bool mb_check = false;
    Index mb_small = 1000, mb_large = 100000;
    auto* ben = app.add_subcommand("bench", "time analyze_window on synthetic data");
    ben->add_option("--mw", mw_values, "window sizes to time");
    ben->add_option("--d", d_values, "embedding widths to time");
    ben->add_option("--repeats", repeats, "windows per cell");
    ben->add_flag("--mb-check", mb_check, "also compare baseline sizes");
    ben->add_option("--mb-small", mb_small, "small baseline row count");
    ben->add_option("--mb-large", mb_large, "large baseline row count");
    ben->add_option("--out", out_dir, "directory for bench.csv and bench.json");
    add_common(ben, false);
    ben->callback([&] {
      cmd_bench(mw_values, d_values, repeats, mb_check, mb_small, mb_large, out_dir, opts);
    });

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      return app.exit(e);
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 10 + static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 9;
  }
}
