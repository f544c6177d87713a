#include "driftmon/explain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "driftmon/rng.hpp"

namespace driftmon {

namespace {

Matrix seed_centroids(const Matrix& rows, Index k, Rng& rng) {
  const Index n = rows.rows();
  Matrix centroids(k, rows.cols());
  centroids.row(0) = rows.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
  Vector d2 = (rows.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (Index j = 1; j < k; ++j) {
    const double total = d2.sum();
    Index pick;
    if (total <= 0.0) {
      pick = static_cast<Index>(rng.below(static_cast<std::uint64_t>(n)));
    } else {
      const double target = rng.uniform() * total;
      pick = n - 1;
      double acc = 0.0;
      for (Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    }
    centroids.row(j) = rows.row(pick);
    d2 = d2.cwiseMin((rows.rowwise() - centroids.row(j)).rowwise().squaredNorm());
  }
  return centroids;
}

double assign_points(const Matrix& rows, const Vector& row_sq, const Matrix& centroids,
                     std::vector<Index>& assignment, Vector& point_d2) {
  const Index n = rows.rows(), k = centroids.rows();
  const Matrix cross = rows * centroids.transpose();
  const Vector cent_sq = centroids.rowwise().squaredNorm();
  double inertia = 0.0;
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    double best_d = row_sq(i) + cent_sq(0) - 2.0 * cross(i, 0);
    for (Index j = 1; j < k; ++j) {
      const double d = row_sq(i) + cent_sq(j) - 2.0 * cross(i, j);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    assignment[static_cast<std::size_t>(i)] = best;
    point_d2(i) = std::max(0.0, best_d);
    inertia += point_d2(i);
  }
  return inertia;
}

// Rehomes the farthest point (from a cluster that can spare one) into each
// empty cluster. Strictly decreases inertia, keeps every cluster non-empty.
double fix_empty(const Matrix& rows, Matrix& centroids, std::vector<Index>& assignment,
                 Vector& point_d2, double inertia, bool& fixed) {
  const Index n = rows.rows(), k = centroids.rows();
  std::vector<Index> counts(static_cast<std::size_t>(k), 0);
  for (Index i = 0; i < n; ++i) counts[static_cast<std::size_t>(assignment[i])]++;
  for (Index c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) continue;
    Index pick = -1;
    double far = -1.0;
    for (Index i = 0; i < n; ++i)
      if (counts[static_cast<std::size_t>(assignment[i])] > 1 && point_d2(i) > far) {
        far = point_d2(i);
        pick = i;
      }
    // n >= k guarantees a donor exists while any cluster is empty
    inertia -= point_d2(pick);
    counts[static_cast<std::size_t>(assignment[pick])]--;
    assignment[static_cast<std::size_t>(pick)] = c;
    counts[static_cast<std::size_t>(c)] = 1;
    centroids.row(c) = rows.row(pick);
    point_d2(pick) = 0.0;
    fixed = true;
  }
  return inertia;
}

void update_centroids(const Matrix& rows, const std::vector<Index>& assignment, Matrix& centroids) {
  centroids.setZero();
  std::vector<double> counts(static_cast<std::size_t>(centroids.rows()), 0.0);
  for (Index i = 0; i < rows.rows(); ++i) {
    centroids.row(assignment[static_cast<std::size_t>(i)]) += rows.row(i);
    counts[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])] += 1.0;
  }
  for (Index c = 0; c < centroids.rows(); ++c) centroids.row(c) /= counts[static_cast<std::size_t>(c)];
}

// One Lloyd run; always ends right after an assignment pass so the final
// assignment is a fixed point of the final centroids.
double lloyd_run(const Matrix& rows, const Vector& row_sq, Index k, Rng rng,
                 std::vector<Index>& assignment, Matrix& centroids, std::vector<double>& trace) {
  centroids = seed_centroids(rows, k, rng);
  assignment.assign(static_cast<std::size_t>(rows.rows()), 0);
  Vector point_d2(rows.rows());
  trace.clear();
  double prev = std::numeric_limits<double>::infinity();
  double inertia = 0.0;
  for (int iter = 0; iter < 300; ++iter) {
    bool fixed = false;
    inertia = assign_points(rows, row_sq, centroids, assignment, point_d2);
    inertia = fix_empty(rows, centroids, assignment, point_d2, inertia, fixed);
    trace.push_back(inertia);
    if (!fixed && iter > 0 && prev - inertia <= 1e-6 * std::max(prev, 1e-12)) break;
    if (iter == 299) break;
    update_centroids(rows, assignment, centroids);
    prev = inertia;
  }
  return inertia;
}

double silhouette_exact(const Matrix& rows, const std::vector<Index>& assignment, Index k) {
  const Index n = rows.rows();
  std::vector<double> counts(static_cast<std::size_t>(k), 0.0);
  for (Index i = 0; i < n; ++i) counts[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])] += 1.0;
  const Vector sq = rows.rowwise().squaredNorm();
  Matrix sums = Matrix::Zero(n, k);
  const Index bs = 512;
  for (Index i0 = 0; i0 < n; i0 += bs) {
    const Index m = std::min(bs, n - i0);
    const Matrix cross = rows.middleRows(i0, m) * rows.transpose();
    for (Index r = 0; r < m; ++r)
      for (Index j = 0; j < n; ++j) {
        const double d2 = std::max(0.0, sq(i0 + r) + sq(j) - 2.0 * cross(r, j));
        sums(i0 + r, assignment[static_cast<std::size_t>(j)]) += std::sqrt(d2);
      }
  }
  double acc = 0.0;
  for (Index i = 0; i < n; ++i) {
    const Index own = assignment[static_cast<std::size_t>(i)];
    if (counts[static_cast<std::size_t>(own)] <= 1.0) continue;  // singleton scores 0
    const double a = sums(i, own) / (counts[static_cast<std::size_t>(own)] - 1.0);
    double b = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < k; ++c)
      if (c != own && counts[static_cast<std::size_t>(c)] > 0.0)
        b = std::min(b, sums(i, c) / counts[static_cast<std::size_t>(c)]);
    if (!std::isfinite(b)) continue;
    const double widest = std::max(a, b);
    if (widest > 0.0) acc += (b - a) / widest;
  }
  return acc / static_cast<double>(n);
}

constexpr Index kSilhouetteCap = 5000;

// Exact up to the cap, then a seeded subset: the full pairwise pass is
// quadratic and the score estimate stabilizes well before that size.
double silhouette_of(const Matrix& rows, const std::vector<Index>& assignment, Index k,
                     std::uint64_t seed) {
  const Index n = rows.rows();
  if (n <= kSilhouetteCap) return silhouette_exact(rows, assignment, k);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  Rng rng = Rng::split(seed, 0x517u);
  rng.shuffle(order);
  order.resize(static_cast<std::size_t>(kSilhouetteCap));
  std::sort(order.begin(), order.end());
  Matrix sub(kSilhouetteCap, rows.cols());
  std::vector<Index> sub_assignment(static_cast<std::size_t>(kSilhouetteCap));
  for (Index i = 0; i < kSilhouetteCap; ++i) {
    sub.row(i) = rows.row(order[static_cast<std::size_t>(i)]);
    sub_assignment[static_cast<std::size_t>(i)] = assignment[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
  }
  return silhouette_exact(sub, sub_assignment, k);
}

}  // namespace

ClusteringResult cluster_select(const Matrix& rows, Index k_max, std::uint64_t seed) {
  if (!rows.allFinite()) fail(ErrorKind::InvalidInput, "rows contain non-finite values");
  const Index n = rows.rows();
  if (k_max < 2) fail(ErrorKind::InvalidK, "k_max must be at least 2");
  if (n < k_max)
    fail(ErrorKind::InvalidK,
         std::to_string(n) + " rows cannot host k_max = " + std::to_string(k_max));

  const Vector mean = rows.colwise().mean().transpose();
  const double spread = (rows.rowwise() - mean.transpose()).squaredNorm();
  if (spread <= 1e-18 * static_cast<double>(n) * std::max(1.0, mean.squaredNorm()))
    fail(ErrorKind::DegenerateData, "rows have no variance, silhouette is undefined");

  const Vector row_sq = rows.rowwise().squaredNorm();

  ClusteringResult result;
  double best_sil = -std::numeric_limits<double>::infinity();
  std::vector<Index> assignment;
  Matrix centroids;
  std::vector<double> trace;
  for (Index k = 2; k <= k_max; ++k) {
    double k_inertia = std::numeric_limits<double>::infinity();
    std::vector<Index> k_assignment;
    Matrix k_centroids;
    std::vector<double> k_trace;
    for (int restart = 0; restart < 10; ++restart) {
      const Rng rng = Rng::split(seed, static_cast<std::uint64_t>(k) * 32u +
                                            static_cast<std::uint64_t>(restart));
      const double inertia = lloyd_run(rows, row_sq, k, rng, assignment, centroids, trace);
      if (inertia < k_inertia) {
        k_inertia = inertia;
        k_assignment = assignment;
        k_centroids = centroids;
        k_trace = trace;
      }
    }
    const double sil = silhouette_of(rows, k_assignment, k, seed);
    result.search_trace.push_back({k, sil, k_inertia});
    if (sil > best_sil) {
      best_sil = sil;
      result.k = k;
      result.assignment = std::move(k_assignment);
      result.centroids = std::move(k_centroids);
      result.silhouette = sil;
      result.inertia = k_inertia;
      result.inertia_trace = std::move(k_trace);
    }
  }
  return result;
}

ExplanationReport extract_prototypes(const Matrix& rows, const ClusteringResult& clustering,
                                     Index top_n) {
  if (top_n < 1) fail(ErrorKind::InvalidInput, "top_n must be positive");
  if (static_cast<Index>(clustering.assignment.size()) != rows.rows())
    fail(ErrorKind::DimensionError, "assignment length does not match the row count");
  if (clustering.centroids.cols() != rows.cols())
    fail(ErrorKind::DimensionError, "centroid width does not match the rows");

  ExplanationReport report;
  report.clustering = clustering;
  report.prototypes.resize(static_cast<std::size_t>(clustering.k));
  std::vector<std::vector<std::pair<double, Index>>> members(
      static_cast<std::size_t>(clustering.k));
  for (Index i = 0; i < rows.rows(); ++i) {
    const Index c = clustering.assignment[static_cast<std::size_t>(i)];
    const double d = (rows.row(i) - clustering.centroids.row(c)).norm();
    members[static_cast<std::size_t>(c)].emplace_back(d, i);
  }
  for (Index c = 0; c < clustering.k; ++c) {
    auto& list = members[static_cast<std::size_t>(c)];
    std::sort(list.begin(), list.end());
    const std::size_t keep = std::min(list.size(), static_cast<std::size_t>(top_n));
    for (std::size_t i = 0; i < keep; ++i)
      report.prototypes[static_cast<std::size_t>(c)].push_back({list[i].second, list[i].first});
  }
  return report;
}

double purity(const std::vector<Index>& assignment, const std::vector<bool>& drift_flags) {
  if (assignment.size() != drift_flags.size())
    fail(ErrorKind::DimensionError, "assignment and flag lengths differ");
  if (assignment.empty()) fail(ErrorKind::InvalidInput, "purity of an empty assignment");
  std::map<Index, std::pair<std::int64_t, std::int64_t>> counts;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    auto& entry = counts[assignment[i]];
    (drift_flags[i] ? entry.first : entry.second)++;
  }
  std::int64_t majority = 0;
  for (const auto& [cluster, entry] : counts) majority += std::max(entry.first, entry.second);
  return static_cast<double>(majority) / static_cast<double>(assignment.size());
}

}  // namespace driftmon
