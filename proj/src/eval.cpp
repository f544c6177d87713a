#include "driftmon/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "driftmon/online.hpp"
#include "driftmon/rng.hpp"

namespace driftmon {

std::string to_string(PatternKind kind) {
  switch (kind) {
    case PatternKind::Sudden: return "sudden";
    case PatternKind::Incremental: return "incremental";
    case PatternKind::Periodic: return "periodic";
  }
  return "?";
}

PatternKind pattern_kind_from(const std::string& name) {
  if (name == "sudden") return PatternKind::Sudden;
  if (name == "incremental") return PatternKind::Incremental;
  if (name == "periodic") return PatternKind::Periodic;
  fail(ErrorKind::FormatError, "unknown drift pattern '" + name + "'");
}

DriftSchedule generate_pattern(PatternKind kind, const PatternParams& params) {
  if (params.total < 1) fail(ErrorKind::InvalidSchedule, "total windows must be at least 1");
  if (params.level < 0.0 || params.level > 100.0)
    fail(ErrorKind::InvalidSchedule, "level outside [0, 100]");
  DriftSchedule schedule;
  schedule.percentages.resize(static_cast<std::size_t>(params.total), 0.0);
  switch (kind) {
    case PatternKind::Sudden:
      if (params.onset < 0 || params.onset > params.total)
        fail(ErrorKind::InvalidSchedule, "onset outside [0, total]");
      for (Index i = params.onset; i < params.total; ++i)
        schedule.percentages[static_cast<std::size_t>(i)] = params.level;
      break;
    case PatternKind::Incremental:
      if (params.onset < 0 || params.onset > params.total)
        fail(ErrorKind::InvalidSchedule, "onset outside [0, total]");
      if (params.start < 0.0 || params.start > 100.0)
        fail(ErrorKind::InvalidSchedule, "start outside [0, 100]");
      if (params.step < 0.0) fail(ErrorKind::InvalidSchedule, "step must be non-negative");
      for (Index i = params.onset; i < params.total; ++i)
        schedule.percentages[static_cast<std::size_t>(i)] =
            std::min(100.0, params.start + params.step * static_cast<double>(i - params.onset));
      break;
    case PatternKind::Periodic:
      if (params.block < 1 || params.block > params.total)
        fail(ErrorKind::InvalidSchedule, "block outside [1, total]");
      for (Index i = 0; i < params.total; ++i)
        if ((i / params.block) % 2 == 1)
          schedule.percentages[static_cast<std::size_t>(i)] = params.level;
      break;
  }
  return schedule;
}

SamplePools synth_pools(Index n_labels, Index d, Index rows_per_label, double drift_shift,
                        std::uint64_t seed) {
  if (n_labels < 1) fail(ErrorKind::InvalidInput, "need at least one label");
  if (d < n_labels) fail(ErrorKind::InvalidInput, "width must be at least the label count");
  if (rows_per_label < 1) fail(ErrorKind::InvalidInput, "rows_per_label must be positive");
  if (drift_shift < 0.0) fail(ErrorKind::InvalidInput, "drift_shift must be non-negative");

  Matrix means = Matrix::Zero(d, n_labels);
  for (Index l = 0; l < n_labels; ++l) means(l, l) = 10.0;

  // Noise is unit everywhere except a moderate-variance band just past the
  // label axes. Embedding spreads are anisotropic and a reference PCA keeps
  // such directions, so drift placed along them stays visible after
  // reduction without hiding inside the between-class spread.
  const Index band = std::min<Index>(6, d - n_labels);
  const auto noise_sigma = [&](Index j) {
    return (j >= n_labels && j < n_labels + band) ? 2.0 : 1.0;
  };

  SamplePools pools;
  const Index n = rows_per_label * n_labels;
  pools.nondrift.vectors.resize(n, d);
  pools.nondrift.labels.resize(static_cast<std::size_t>(n));
  Rng rng_clean = Rng::split(seed, 1);
  for (Index i = 0; i < n; ++i) {
    const Index l = i % n_labels;
    pools.nondrift.labels[static_cast<std::size_t>(i)] = static_cast<Label>(l);
    for (Index j = 0; j < d; ++j)
      pools.nondrift.vectors(i, j) =
          static_cast<float>(means(j, l) + noise_sigma(j) * rng_clean.normal());
  }

  // The displacement direction is seeded and lives in the band; degenerate
  // widths fall back to the span of the centered label means, then to the
  // full space. Re-drawn until the host mean stays the nearest one (feasible
  // for moderate shifts; the last draw stands otherwise).
  std::vector<Vector> basis;
  if (band == 0) {
    const Vector centroid = means.rowwise().mean();
    for (Index l = 0; l < n_labels; ++l) {
      Vector v = means.col(l) - centroid;
      for (const Vector& b : basis) v -= v.dot(b) * b;
      if (v.norm() > 1e-9) basis.push_back(v.normalized());
    }
  }
  Vector direction = Vector::Zero(d);
  Rng rng_dir = Rng::split(seed, 3);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    direction.setZero();
    if (band > 0) {
      for (Index j = 0; j < band; ++j) direction(n_labels + j) = rng_dir.normal();
    } else if (!basis.empty()) {
      for (const Vector& b : basis) direction += rng_dir.normal() * b;
    } else {
      for (Index j = 0; j < d; ++j) direction(j) = rng_dir.normal();
    }
    direction.normalize();
    const Vector center = means.col(0) + drift_shift * direction;
    bool host_nearest = true;
    for (Index l = 1; l < n_labels && host_nearest; ++l)
      if ((means.col(l) - center).norm() <= drift_shift) host_nearest = false;
    if (host_nearest) break;
  }
  const Vector drift_mean = means.col(0) + drift_shift * direction;

  pools.drift.vectors.resize(rows_per_label, d);
  pools.drift.labels.resize(static_cast<std::size_t>(rows_per_label));
  Rng rng_drift = Rng::split(seed, 2);
  for (Index i = 0; i < rows_per_label; ++i) {
    Vector row(d);
    for (Index j = 0; j < d; ++j) row(j) = drift_mean(j) + noise_sigma(j) * rng_drift.normal();
    Index nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Index l = 0; l < n_labels; ++l) {
      const double dist = (means.col(l) - row).squaredNorm();
      if (dist < best) {
        best = dist;
        nearest = l;
      }
    }
    pools.drift.labels[static_cast<std::size_t>(i)] = static_cast<Label>(nearest);
    for (Index j = 0; j < d; ++j) pools.drift.vectors(i, j) = static_cast<float>(row(j));
  }
  return pools;
}

std::vector<StreamWindow> build_stream(const SamplePools& pools, const DriftSchedule& schedule,
                                       Index m_w, std::uint64_t seed) {
  if (schedule.percentages.empty()) fail(ErrorKind::InvalidSchedule, "schedule is empty");
  for (double p : schedule.percentages)
    if (!(p >= 0.0 && p <= 100.0)) fail(ErrorKind::InvalidSchedule, "severity outside [0, 100]");
  if (m_w < 1) fail(ErrorKind::InvalidInput, "window size must be positive");
  pools.nondrift.validate();
  if (!pools.nondrift.has_labels())
    fail(ErrorKind::InvalidInput, "nondrift pool carries no labels");
  if (pools.drift.rows() > 0 && pools.drift.dim() != pools.nondrift.dim())
    fail(ErrorKind::DimensionError, "pool widths differ");

  // Per-label row indices of the nondrift pool, in label order.
  std::map<Label, std::vector<Index>> by_label;
  for (Index i = 0; i < pools.nondrift.rows(); ++i)
    by_label[pools.nondrift.labels[static_cast<std::size_t>(i)]].push_back(i);
  std::vector<Label> labels;
  for (const auto& [label, rows] : by_label) labels.push_back(label);
  const Index n_labels = static_cast<Index>(labels.size());
  const bool drift_labeled = pools.drift.has_labels();

  std::vector<StreamWindow> stream;
  for (std::size_t w = 0; w < schedule.percentages.size(); ++w) {
    const double severity = schedule.percentages[w];
    const Index n_drift = static_cast<Index>(std::lround(severity * static_cast<double>(m_w) / 100.0));
    const Index n_clean = m_w - n_drift;
    if (n_drift > 0 && pools.drift.rows() == 0)
      fail(ErrorKind::InsufficientData, "schedule needs drift rows but the drift pool is empty");

    Rng rng = Rng::split(seed, static_cast<std::uint64_t>(w));
    StreamWindow window;
    window.severity = severity;
    window.truth = severity > 0.0;
    window.batch.vectors.resize(m_w, pools.nondrift.dim());
    window.batch.labels.resize(static_cast<std::size_t>(m_w));
    window.drift_mask.assign(static_cast<std::size_t>(m_w), false);

    // Label-balanced clean part: the remainder goes to a seeded shuffle of the
    // label order so no label is systematically favored.
    std::vector<Index> quota(static_cast<std::size_t>(n_labels), n_clean / n_labels);
    std::vector<Index> label_order(static_cast<std::size_t>(n_labels));
    std::iota(label_order.begin(), label_order.end(), Index{0});
    rng.shuffle(label_order);
    for (Index r = 0; r < n_clean % n_labels; ++r) quota[static_cast<std::size_t>(label_order[static_cast<std::size_t>(r)])]++;

    Index at = 0;
    for (Index li = 0; li < n_labels; ++li) {
      const auto& rows = by_label[labels[static_cast<std::size_t>(li)]];
      for (Index r = 0; r < quota[static_cast<std::size_t>(li)]; ++r, ++at) {
        const Index src = rows[static_cast<std::size_t>(rng.below(rows.size()))];
        window.batch.vectors.row(at) = pools.nondrift.vectors.row(src);
        window.batch.labels[static_cast<std::size_t>(at)] =
            pools.nondrift.labels[static_cast<std::size_t>(src)];
      }
    }
    for (Index r = 0; r < n_drift; ++r, ++at) {
      const Index src = static_cast<Index>(rng.below(static_cast<std::uint64_t>(pools.drift.rows())));
      window.batch.vectors.row(at) = pools.drift.vectors.row(src);
      window.batch.labels[static_cast<std::size_t>(at)] =
          drift_labeled ? pools.drift.labels[static_cast<std::size_t>(src)] : Label{0};
      window.drift_mask[static_cast<std::size_t>(at)] = true;
    }

    // Mix provenance through the window so row order carries no signal.
    std::vector<Index> perm(static_cast<std::size_t>(m_w));
    std::iota(perm.begin(), perm.end(), Index{0});
    rng.shuffle(perm);
    EmbeddingBatch shuffled;
    shuffled.vectors.resize(m_w, window.batch.dim());
    shuffled.labels.resize(static_cast<std::size_t>(m_w));
    std::vector<bool> mask(static_cast<std::size_t>(m_w));
    for (Index i = 0; i < m_w; ++i) {
      const Index src = perm[static_cast<std::size_t>(i)];
      shuffled.vectors.row(i) = window.batch.vectors.row(src);
      shuffled.labels[static_cast<std::size_t>(i)] = window.batch.labels[static_cast<std::size_t>(src)];
      mask[static_cast<std::size_t>(i)] = window.drift_mask[static_cast<std::size_t>(src)];
    }
    window.batch = std::move(shuffled);
    window.drift_mask = std::move(mask);
    stream.push_back(std::move(window));
  }
  return stream;
}

double h_dd(double a_zero, double a_drift) {
  if (a_zero <= 0.0 || a_drift <= 0.0) return 0.0;
  return 2.0 / (1.0 / a_zero + 1.0 / a_drift);
}

DetectionSummary evaluate_detection(const std::vector<SeverityRun>& runs) {
  if (runs.empty()) fail(ErrorKind::InvalidInput, "no severity runs given");
  std::map<double, std::pair<std::int64_t, std::int64_t>> tally;  // correct, total
  for (const auto& run : runs) {
    if (run.predictions.size() != run.truths.size())
      fail(ErrorKind::DimensionError, "prediction and truth lengths differ");
    if (run.predictions.empty()) fail(ErrorKind::InvalidInput, "empty severity run");
    auto& cell = tally[run.severity];
    for (std::size_t i = 0; i < run.predictions.size(); ++i) {
      cell.first += run.predictions[i] == run.truths[i];
      cell.second += 1;
    }
  }
  if (!tally.count(0.0))
    fail(ErrorKind::InvalidInput, "severity sweep must include the 0% level");
  if (tally.size() < 2)
    fail(ErrorKind::InvalidInput, "severity sweep needs at least one drifted level");

  DetectionSummary summary;
  double drift_acc = 0.0;
  int drift_levels = 0;
  for (const auto& [severity, cell] : tally) {
    const double accuracy = static_cast<double>(cell.first) / static_cast<double>(cell.second);
    summary.accuracy[severity] = accuracy;
    if (severity == 0.0) {
      summary.a_zero = accuracy;
    } else {
      drift_acc += accuracy;
      drift_levels += 1;
    }
  }
  summary.a_drift = drift_acc / static_cast<double>(drift_levels);
  summary.h_dd = h_dd(summary.a_zero, summary.a_drift);
  return summary;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double shared = static_cast<double>(i + j + 2) / 2.0;  // 1-based average
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = shared;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman_corr(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) fail(ErrorKind::DimensionError, "sequence lengths differ");
  if (x.size() < 2) fail(ErrorKind::InvalidInput, "need at least two observations");
  const auto constant = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end()) == *std::min_element(v.begin(), v.end());
  };
  if (constant(x) || constant(y))
    fail(ErrorKind::UndefinedCorrelation, "rank correlation of a constant sequence");

  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

namespace {

struct BenchRig {
  BaselineModel baseline;
  ThresholdSet thresholds;
};

BenchRig bench_rig(Index m_b, Index d, Index m_w, std::uint64_t seed) {
  OfflineConfig config;
  config.d_prime = std::min<Index>(150, d);
  config.d_prime_label = std::min<Index>(75, d);
  config.m_w = std::max<Index>(2, m_w);
  config.n_th = 1;
  config.seed = seed;

  EmbeddingBatch history;
  history.vectors.resize(m_b, d);
  history.labels.resize(static_cast<std::size_t>(m_b));
  Rng rng = Rng::split(seed, 11);
  for (Index i = 0; i < m_b; ++i) {
    const Label label = static_cast<Label>(i % 2);
    history.labels[static_cast<std::size_t>(i)] = label;
    for (Index j = 0; j < d; ++j)
      history.vectors(i, j) = static_cast<float>((j == label ? 10.0 : 0.0) + rng.normal());
  }

  BenchRig rig;
  rig.baseline = fit_baseline(history, config);
  rig.thresholds.t_batch = std::numeric_limits<double>::infinity();
  for (Label label : rig.baseline.label_set)
    rig.thresholds.t_label[label] = std::numeric_limits<double>::infinity();
  rig.thresholds.n_th = 1;
  rig.thresholds.t_alpha = 0.0;
  rig.thresholds.m_w = m_w;
  rig.thresholds.metric = DistanceKind::Fdd;
  return rig;
}

EmbeddingBatch bench_window(Index m_w, Index d, Rng& rng) {
  EmbeddingBatch window;
  window.vectors.resize(m_w, d);
  window.labels.resize(static_cast<std::size_t>(m_w));
  for (Index i = 0; i < m_w; ++i) {
    const Label label = static_cast<Label>(i % 2);
    window.labels[static_cast<std::size_t>(i)] = label;
    for (Index j = 0; j < d; ++j)
      window.vectors(i, j) = static_cast<float>((j == label ? 10.0 : 0.0) + rng.normal());
  }
  return window;
}

double time_one(const BenchRig& rig, const EmbeddingBatch& window) {
  const auto start = std::chrono::steady_clock::now();
  const WindowReport report = analyze_window(rig.baseline, rig.thresholds, window);
  const auto stop = std::chrono::steady_clock::now();
  (void)report;
  return std::chrono::duration<double>(stop - start).count();
}

}  // namespace

std::vector<BenchmarkCell> benchmark_runtime(const std::vector<Index>& mw_values,
                                             const std::vector<Index>& d_values, int repeats,
                                             std::uint64_t seed) {
  if (repeats < 1) fail(ErrorKind::InvalidInput, "repeats must be positive");
  std::vector<BenchmarkCell> table;
  for (Index d : d_values) {
    const Index m_b = 2 * std::min<Index>(150, d) + 302;
    for (Index m_w : mw_values) {
      const BenchRig rig = bench_rig(m_b, d, m_w, seed);
      Rng rng = Rng::split(seed, static_cast<std::uint64_t>(d) * 131071u +
                                     static_cast<std::uint64_t>(m_w));
      std::vector<double> times;
      for (int r = 0; r < repeats; ++r) {
        const EmbeddingBatch window = bench_window(m_w, d, rng);
        times.push_back(time_one(rig, window));
      }
      BenchmarkCell cell;
      cell.m_w = m_w;
      cell.d = d;
      cell.repeats = repeats;
      for (double t : times) cell.mean_seconds += t;
      cell.mean_seconds /= static_cast<double>(repeats);
      for (double t : times)
        cell.std_seconds += (t - cell.mean_seconds) * (t - cell.mean_seconds);
      cell.std_seconds = std::sqrt(cell.std_seconds / static_cast<double>(repeats));
      table.push_back(cell);
    }
  }
  return table;
}

MbIndependence benchmark_mb_independence(Index mb_small, Index mb_large, Index d, Index m_w,
                                         int repeats, std::uint64_t seed) {
  if (repeats < 1) fail(ErrorKind::InvalidInput, "repeats must be positive");
  const BenchRig small = bench_rig(mb_small, d, m_w, seed);
  const BenchRig large = bench_rig(mb_large, d, m_w, seed);
  Rng rng = Rng::split(seed, 17);
  double total_small = 0.0, total_large = 0.0;
  // One untimed pass absorbs first-touch costs; the timed passes interleave
  // with alternating order so clock drift and cache warmth from the freshly
  // generated window hit both sides equally.
  {
    const EmbeddingBatch warm = bench_window(m_w, d, rng);
    time_one(small, warm);
    time_one(large, warm);
  }
  for (int r = 0; r < repeats; ++r) {
    const EmbeddingBatch window = bench_window(m_w, d, rng);
    if (r % 2 == 0) {
      total_small += time_one(small, window);
      total_large += time_one(large, window);
    } else {
      total_large += time_one(large, window);
      total_small += time_one(small, window);
    }
  }
  MbIndependence result;
  result.small_seconds = total_small / static_cast<double>(repeats);
  result.large_seconds = total_large / static_cast<double>(repeats);
  result.relative_gap = std::abs(result.small_seconds - result.large_seconds) /
                        std::min(result.small_seconds, result.large_seconds);
  return result;
}

}  // namespace driftmon
