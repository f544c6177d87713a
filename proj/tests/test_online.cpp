#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "driftmon/eval.hpp"
#include "driftmon/io.hpp"
#include "driftmon/online.hpp"
#include "driftmon/rng.hpp"
#include "helpers.hpp"

using namespace driftmon;
using dmtest::ScopedDir;
using dmtest::thrown_kind;

namespace {

struct Rig {
  BaselineModel baseline;
  ThresholdSet thresholds;
  SamplePools pools;       // fresh pool, same distribution as the baseline data
  OfflineConfig config;
};

// Baseline on one synthetic draw, thresholds on an independent draw of the
// same mixture; the third draw is for the windows under test.
Rig make_rig(double drift_shift = 8.0, Index m_w = 200, std::uint64_t seed = 71) {
  Rig rig;
  rig.config.d_prime = 6;
  rig.config.d_prime_label = 4;
  rig.config.n_th = 300;
  rig.config.t_alpha = 0.01;
  rig.config.m_w = m_w;
  rig.config.seed = seed;
  const SamplePools history = synth_pools(3, 16, 1200, drift_shift, seed);
  const SamplePools threshold_pool = synth_pools(3, 16, 1200, drift_shift, seed + 1);
  rig.pools = synth_pools(3, 16, 1200, drift_shift, seed + 2);
  rig.baseline = fit_baseline(history.nondrift, rig.config);
  rig.thresholds =
      estimate_thresholds(rig.baseline, threshold_pool.nondrift, DistanceKind::Fdd, rig.config);
  return rig;
}

EmbeddingBatch pool_window(const EmbeddingBatch& pool, Index m_w, std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingBatch window;
  window.vectors.resize(m_w, pool.dim());
  for (Index i = 0; i < m_w; ++i) {
    const Index src = static_cast<Index>(rng.below(static_cast<std::uint64_t>(pool.rows())));
    window.vectors.row(i) = pool.vectors.row(src);
    window.labels.push_back(pool.labels[static_cast<std::size_t>(src)]);
  }
  return window;
}

}  // namespace

TEST_SUITE("online") {

TEST_CASE("report flags mirror the threshold comparison") {
  const Rig rig = make_rig();
  const EmbeddingBatch window = pool_window(rig.pools.nondrift, 200, 1);
  const WindowReport report = analyze_window(rig.baseline, rig.thresholds, window);

  REQUIRE(report.batch_distance.has_value());
  CHECK(report.batch_drift == (*report.batch_distance > rig.thresholds.t_batch));
  CHECK(report.label_entries.size() == rig.baseline.label_set.size());
  std::int64_t counted = 0;
  for (const auto& [label, stat] : report.label_entries) {
    counted += stat.count;
    if (stat.distance)
      CHECK(stat.drift == (*stat.distance > rig.thresholds.t_label.at(label)));
    else
      CHECK_FALSE(stat.drift);
  }
  CHECK(counted == 200);
  CHECK(report.warnings.empty());

  // determinism
  const WindowReport again = analyze_window(rig.baseline, rig.thresholds, window);
  CHECK(again.batch_distance == report.batch_distance);
  CHECK(again.batch_drift == report.batch_drift);
}

TEST_CASE("threshold-pool windows stay unflagged at the trim rate") {
  const Rig rig = make_rig();
  int flagged = 0;
  const int trials = 500;
  for (int t = 0; t < trials; ++t) {
    const EmbeddingBatch window = pool_window(rig.pools.nondrift, 200, 1000 + t);
    flagged += analyze_window(rig.baseline, rig.thresholds, window).batch_drift;
  }
  CHECK(static_cast<double>(flagged) / trials <= rig.config.t_alpha + 0.02);
}

TEST_CASE("a spread change flags drift") {
  const Rig rig = make_rig();
  EmbeddingBatch window = pool_window(rig.pools.nondrift, 200, 2);
  window.vectors *= 5.0f;
  const WindowReport report = analyze_window(rig.baseline, rig.thresholds, window);
  CHECK(report.batch_drift);
}

TEST_CASE("window edge cases") {
  const Rig rig = make_rig();

  // a label missing from the window reports count 0, no distance, no flag
  EmbeddingBatch window = pool_window(rig.pools.nondrift, 200, 3);
  for (auto& label : window.labels)
    if (label == 1) label = 0;
  const WindowReport report = analyze_window(rig.baseline, rig.thresholds, window);
  CHECK(report.label_entries.at(1).count == 0);
  CHECK_FALSE(report.label_entries.at(1).distance.has_value());
  CHECK_FALSE(report.label_entries.at(1).drift);
  CHECK(report.label_entries.at(0).count > 0);

  // short windows pass with a warning as long as the batch PCA is estimable
  const EmbeddingBatch stub = pool_window(rig.pools.nondrift, 50, 4);
  const WindowReport short_report = analyze_window(rig.baseline, rig.thresholds, stub);
  REQUIRE(!short_report.warnings.empty());
  CHECK(short_report.warnings.front().find("short window") != std::string::npos);

  // but not below d_prime + 1 rows
  const EmbeddingBatch crumb = pool_window(rig.pools.nondrift, 6, 5);
  CHECK(thrown_kind([&] { analyze_window(rig.baseline, rig.thresholds, crumb); }) ==
        ErrorKind::RankError);

  // width mismatch
  EmbeddingBatch narrow;
  narrow.vectors = MatrixF::Zero(200, 8);
  CHECK(thrown_kind([&] { analyze_window(rig.baseline, rig.thresholds, narrow); }) ==
        ErrorKind::DimensionError);

  // unlabeled windows skip the per-label pass with a warning
  EmbeddingBatch bare = pool_window(rig.pools.nondrift, 200, 6);
  bare.labels.clear();
  const WindowReport unlabeled = analyze_window(rig.baseline, rig.thresholds, bare);
  CHECK(unlabeled.batch_distance.has_value());
  for (const auto& [label, stat] : unlabeled.label_entries) CHECK(stat.count == 0);
  REQUIRE(!unlabeled.warnings.empty());
}

TEST_CASE("empty stream gives an empty log, and rendering it refuses") {
  const Rig rig = make_rig();
  const MonitorLog log = run_stream(rig.baseline, rig.thresholds, {});
  CHECK(log.reports.empty());
  ScopedDir dir("online_empty");
  CHECK(thrown_kind([&] { render_monitor(log, dir.path.string()); }) ==
        ErrorKind::NothingToRender);
}

TEST_CASE("per-window failures become warning reports, not aborts") {
  const Rig rig = make_rig();
  std::vector<EmbeddingBatch> windows;
  windows.push_back(pool_window(rig.pools.nondrift, 200, 7));
  EmbeddingBatch narrow;
  narrow.vectors = MatrixF::Zero(200, 8);
  windows.push_back(narrow);
  windows.push_back(pool_window(rig.pools.nondrift, 200, 8));

  const MonitorLog log = run_stream(rig.baseline, rig.thresholds, windows, {}, "rig");
  REQUIRE(log.reports.size() == 3);
  CHECK(log.baseline_id == "rig");
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(log.reports[i].window_id == static_cast<std::int64_t>(i));
  CHECK(log.reports[0].batch_distance.has_value());
  CHECK_FALSE(log.reports[1].batch_distance.has_value());
  REQUIRE(!log.reports[1].warnings.empty());
  CHECK(log.reports[1].warnings.front().find("window failed") != std::string::npos);
  CHECK(log.reports[2].batch_distance.has_value());
}

TEST_CASE("sudden drift stream is caught") {
  const Rig rig = make_rig();
  PatternParams params;
  params.total = 100;
  params.onset = 50;
  params.level = 40.0;
  const auto stream =
      build_stream(rig.pools, generate_pattern(PatternKind::Sudden, params), 200, 505);
  std::vector<EmbeddingBatch> windows;
  for (const auto& w : stream) windows.push_back(w.batch);
  const MonitorLog log = run_stream(rig.baseline, rig.thresholds, windows);

  int clean_correct = 0, drift_correct = 0;
  for (std::size_t i = 0; i < 50; ++i) clean_correct += !log.reports[i].batch_drift;
  for (std::size_t i = 50; i < 100; ++i) drift_correct += log.reports[i].batch_drift;
  CHECK(clean_correct >= 48);
  CHECK(drift_correct >= 48);
}

TEST_CASE("periodic drift stream tracks the blocks") {
  const Rig rig = make_rig();
  PatternParams params;
  params.total = 80;
  params.block = 20;
  params.level = 40.0;
  const DriftSchedule schedule = generate_pattern(PatternKind::Periodic, params);
  const auto stream = build_stream(rig.pools, schedule, 200, 606);
  std::vector<EmbeddingBatch> windows;
  for (const auto& w : stream) windows.push_back(w.batch);
  const MonitorLog log = run_stream(rig.baseline, rig.thresholds, windows);

  int disagree = 0;
  for (std::size_t i = 0; i < 80; ++i)
    disagree += log.reports[i].batch_drift != (schedule.percentages[i] > 0.0);
  CHECK(disagree <= 4);  // at most 5% of the windows
}

TEST_CASE("mean distance grows with severity") {
  const Rig rig = make_rig();
  double prev = -1.0;
  for (double severity : {0.0, 5.0, 10.0, 15.0, 20.0}) {
    DriftSchedule schedule;
    schedule.percentages.assign(20, severity);
    const auto stream = build_stream(rig.pools, schedule, 200, 707 + static_cast<int>(severity));
    double mean = 0.0;
    for (const auto& w : stream) {
      const WindowReport report = analyze_window(rig.baseline, rig.thresholds, w.batch);
      mean += *report.batch_distance;
    }
    mean /= static_cast<double>(stream.size());
    CHECK(mean > prev);
    prev = mean;
  }
}

TEST_CASE("monitor rendering round-trips") {
  const Rig rig = make_rig();
  std::vector<EmbeddingBatch> windows;
  for (int t = 0; t < 6; ++t) windows.push_back(pool_window(rig.pools.nondrift, 200, 900 + t));
  // one clearly drifted window, one starving label 2 into "insufficient"
  windows[3].vectors *= 5.0f;
  for (auto& label : windows[4].labels)
    if (label == 2) label = 0;

  const std::vector<std::string> stamps = {"2026-08-01T00:00:00Z", "2026-08-01T01:00:00Z"};
  MonitorLog log = run_stream(rig.baseline, rig.thresholds, windows, stamps, "test-baseline");
  REQUIRE(log.reports.size() == 6);
  REQUIRE(log.reports[3].batch_drift);

  ScopedDir dir("online_render");
  render_monitor(log, dir.path.string());
  REQUIRE(std::filesystem::exists(dir.file("curves.csv")));
  REQUIRE(std::filesystem::exists(dir.file("batch_chart.svg")));
  REQUIRE(std::filesystem::exists(dir.file("labels_chart.svg")));

  // one data row per window; 2 value columns + 2 per label after the keys
  const auto records = parse_csv(read_file(dir.file("curves.csv")));
  REQUIRE(records.size() == 7);
  CHECK(records[0].size() == 2 + 2 + 2 * rig.baseline.label_set.size());
  CHECK(records[5][4 + 2 * 2] == "insufficient");  // label 2 distance in window 4

  // exactly as many batch-chart markers as flagged windows
  int flagged = 0;
  for (const auto& report : log.reports) flagged += report.batch_drift;
  const std::string batch_svg = read_file(dir.file("batch_chart.svg"));
  int markers = 0;
  for (std::size_t at = batch_svg.find("warning-marker"); at != std::string::npos;
       at = batch_svg.find("warning-marker", at + 1))
    ++markers;
  CHECK(markers == flagged);
  CHECK(flagged == 1);

  // round trip: values match to full precision, timestamps survive
  const MonitorLog back = read_monitor_csv(dir.file("curves.csv"));
  REQUIRE(back.reports.size() == log.reports.size());
  for (std::size_t i = 0; i < log.reports.size(); ++i) {
    const WindowReport& a = log.reports[i];
    const WindowReport& b = back.reports[i];
    CHECK(a.window_id == b.window_id);
    CHECK(a.timestamp == b.timestamp);
    REQUIRE(a.batch_distance.has_value() == b.batch_distance.has_value());
    if (a.batch_distance)
      CHECK(*a.batch_distance == doctest::Approx(*b.batch_distance).epsilon(1e-9));
    CHECK(a.batch_drift == b.batch_drift);
    for (const auto& [label, stat] : a.label_entries) {
      const auto& rebuilt = b.label_entries.at(label);
      REQUIRE(stat.distance.has_value() == rebuilt.distance.has_value());
      if (stat.distance)
        CHECK(*stat.distance == doctest::Approx(*rebuilt.distance).epsilon(1e-9));
      CHECK(stat.drift == rebuilt.drift);
    }
  }
}

}  // TEST_SUITE
