#pragma once

#include <map>
#include <string>

#include "driftmon/types.hpp"

namespace driftmon {

enum class PatternKind { Sudden, Incremental, Periodic };

std::string to_string(PatternKind kind);
PatternKind pattern_kind_from(const std::string& name);

struct PatternParams {
  Index total = 100;
  Index onset = 50;     // sudden, incremental: number of clean leading windows
  double level = 40.0;  // sudden, periodic
  double start = 20.0;  // incremental: severity at onset
  double step = 1.0;    // incremental: growth per window, capped at 100
  Index block = 20;     // periodic: run length of each on/off phase
};

struct DriftSchedule {
  std::vector<double> percentages;  // one entry per window, each in [0, 100]
};

DriftSchedule generate_pattern(PatternKind kind, const PatternParams& params);

struct SamplePools {
  EmbeddingBatch nondrift;  // label-annotated
  EmbeddingBatch drift;
};

// Gaussian label components, means 10 sigma apart on the leading axes, unit
// noise except for a moderate-variance band just past the label axes. The
// drift component sits drift_shift sigma from its host mean (label 0) along a
// seeded band direction, re-drawn so the host stays the nearest mean whenever
// feasible. Labels simulate classifier predictions: nearest nondrift component.
SamplePools synth_pools(Index n_labels, Index d, Index rows_per_label, double drift_shift,
                        std::uint64_t seed);

struct StreamWindow {
  EmbeddingBatch batch;
  double severity = 0.0;
  bool truth = false;           // severity > 0, exactly
  std::vector<bool> drift_mask;  // per row: came from the drift pool
};

// round(D*m_w/100) drift-pool rows per window, the rest drawn label-balanced
// (per-label counts differ by at most 1) from the nondrift pool, all with
// replacement. Deterministic per (seed, window index). Rows from an unlabeled
// drift pool carry label 0.
std::vector<StreamWindow> build_stream(const SamplePools& pools, const DriftSchedule& schedule,
                                       Index m_w, std::uint64_t seed);

struct SeverityRun {
  double severity = 0.0;
  std::vector<bool> predictions;
  std::vector<bool> truths;
};

struct DetectionSummary {
  std::map<double, double> accuracy;  // severity -> fraction of correct flags
  double a_zero = 0.0;
  double a_drift = 0.0;  // unweighted mean over drifted severities
  double h_dd = 0.0;
};

// 0 when either side is 0, else the harmonic mean.
double h_dd(double a_zero, double a_drift);

DetectionSummary evaluate_detection(const std::vector<SeverityRun>& runs);

// Pearson correlation of average-ranked sequences; ties share average ranks.
double spearman_corr(const std::vector<double>& x, const std::vector<double>& y);

struct BenchmarkCell {
  Index m_w = 0;
  Index d = 0;
  int repeats = 0;
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
};

// Times analyze_window on synthetic two-label baselines, one fresh window per
// repeat; window generation stays outside the clock.
std::vector<BenchmarkCell> benchmark_runtime(const std::vector<Index>& mw_values,
                                             const std::vector<Index>& d_values, int repeats,
                                             std::uint64_t seed);

struct MbIndependence {
  double small_seconds = 0.0;
  double large_seconds = 0.0;
  double relative_gap = 0.0;  // |small-large| / min
};

// Interleaved timing of the same windows against baselines fitted on
// mb_small and mb_large rows; the gap should stay under 10%.
MbIndependence benchmark_mb_independence(Index mb_small, Index mb_large, Index d, Index m_w,
                                         int repeats, std::uint64_t seed);

}  // namespace driftmon
