#pragma once

#include <string>

#include "driftmon/types.hpp"

namespace driftmon {

struct KSearchEntry {
  Index k = 0;
  double silhouette = 0.0;
  double inertia = 0.0;
};

struct ClusteringResult {
  Index k = 0;
  std::vector<Index> assignment;  // length n, ids in [0, k), every cluster non-empty
  Matrix centroids;               // k x dim
  double silhouette = 0.0;
  double inertia = 0.0;
  std::vector<KSearchEntry> search_trace;  // one entry per k tried, ascending k
  std::vector<double> inertia_trace;       // winning run, one entry per iteration
};

struct PrototypeEntry {
  Index index = 0;  // row in the explained matrix
  double distance = 0.0;
};

struct ExplanationReport {
  std::string scope = "batch";
  ClusteringResult clustering;
  std::vector<std::vector<PrototypeEntry>> prototypes;  // per cluster, ascending distance
};

// K-Means over k in [2, k_max]: k-means++ seeding, 10 restarts, 300 iteration
// cap, 1e-6 relative inertia convergence; the k with the best silhouette wins,
// ties toward smaller k. Deterministic under a fixed seed.
ClusteringResult cluster_select(const Matrix& rows, Index k_max, std::uint64_t seed);

// The top_n members nearest each centroid; smaller clusters return everything.
ExplanationReport extract_prototypes(const Matrix& rows, const ClusteringResult& clustering,
                                     Index top_n);

// Mean over clusters of the majority category count, normalized by n.
double purity(const std::vector<Index>& assignment, const std::vector<bool>& drift_flags);

}  // namespace driftmon
