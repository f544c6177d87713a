#pragma once

#include <map>
#include <optional>

#include "driftmon/stats.hpp"

namespace driftmon {

struct OfflineConfig {
  Index d_prime = 150;
  Index d_prime_label = 75;
  std::int64_t n_th = 10000;
  double t_alpha = 0.01;
  Index m_w = 1000;
  std::uint64_t seed = 0;

  void validate(Index d) const;
};

// Frozen reference: one per-batch Gaussian over batch-PCA space plus one
// Gaussian per label over that label's own PCA space.
struct BaselineModel {
  std::vector<Label> label_set;
  PcaProjector batch_pca;
  GaussianSummary batch_gaussian;
  std::map<Label, PcaProjector> label_pca;
  std::map<Label, GaussianSummary> label_gaussian;
  OfflineConfig config;
};

// label_set may be passed explicitly to declare labels beyond what the data
// shows; empty means "derive from the batch" (sorted ascending).
BaselineModel fit_baseline(const EmbeddingBatch& historical, const OfflineConfig& config,
                           std::vector<Label> label_set = {});

struct ThresholdSet {
  double t_batch = 0.0;
  std::map<Label, double> t_label;  // +inf sentinel when a label never had enough samples
  std::int64_t n_th = 0;
  double t_alpha = 0.0;
  Index m_w = 0;
  DistanceKind metric = DistanceKind::Fdd;
  std::vector<std::string> warnings;
};

// Shared trimming rule: sort descending, drop the top floor(t_alpha*n_th)
// entries, return the max of the remainder (+inf if nothing remains).
double threshold_from_distances(std::vector<double> distances, double t_alpha, std::int64_t n_th);

ThresholdSet estimate_thresholds(const BaselineModel& baseline, const EmbeddingBatch& threshold_data,
                                 DistanceKind metric, const OfflineConfig& config);

}  // namespace driftmon
