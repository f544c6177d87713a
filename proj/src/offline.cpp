#include "driftmon/offline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "driftmon/rng.hpp"

namespace driftmon {

namespace {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Matrix reduce(const PcaProjector& pca, const MatrixRM& rows) {
  return (rows.rowwise() - pca.center.transpose()) * pca.components.transpose();
}

}  // namespace

void OfflineConfig::validate(Index d) const {
  if (d_prime < 1 || d_prime > d)
    fail(ErrorKind::InvalidInput,
         "d_prime " + std::to_string(d_prime) + " outside (0, " + std::to_string(d) + "]");
  if (d_prime_label < 1 || d_prime_label > d)
    fail(ErrorKind::InvalidInput,
         "d_prime_label " + std::to_string(d_prime_label) + " outside (0, " + std::to_string(d) + "]");
  if (n_th < 1) fail(ErrorKind::InvalidInput, "n_th must be at least 1");
  if (!(t_alpha >= 0.0 && t_alpha < 1.0))
    fail(ErrorKind::InvalidInput, "t_alpha must lie in [0, 1)");
  if (m_w < 2) fail(ErrorKind::InvalidInput, "window size must be at least 2");
}

BaselineModel fit_baseline(const EmbeddingBatch& historical, const OfflineConfig& config,
                           std::vector<Label> label_set) {
  historical.validate();
  if (!historical.has_labels())
    fail(ErrorKind::InvalidInput, "baseline batch carries no predicted labels");
  config.validate(historical.dim());

  const Index m_b = historical.rows();
  if (m_b < config.d_prime + 1)
    fail(ErrorKind::RankError, "batch: " + std::to_string(m_b) + " rows, need d_prime+1 = " +
                                   std::to_string(config.d_prime + 1));

  BaselineModel model;
  model.config = config;

  std::map<Label, std::vector<Index>> groups;
  for (Index i = 0; i < m_b; ++i) groups[historical.labels[i]].push_back(i);

  if (label_set.empty()) {
    for (const auto& [label, members] : groups) model.label_set.push_back(label);
  } else {
    std::sort(label_set.begin(), label_set.end());
    label_set.erase(std::unique(label_set.begin(), label_set.end()), label_set.end());
    model.label_set = std::move(label_set);
    for (Label label : model.label_set)
      if (!groups.count(label))
        fail(ErrorKind::EmptyLabel, "declared label " + std::to_string(label) + " has no samples");
    for (const auto& [label, members] : groups)
      if (!std::binary_search(model.label_set.begin(), model.label_set.end(), label))
        fail(ErrorKind::InvalidInput,
             "batch contains label " + std::to_string(label) + " outside the declared set");
  }

  const Matrix rows = historical.as_double();
  model.batch_pca = fit_pca(rows, config.d_prime);
  model.batch_gaussian = estimate_gaussian(project(model.batch_pca, rows));

  for (Label label : model.label_set) {
    const auto& members = groups.at(label);
    const Index m_l = static_cast<Index>(members.size());
    if (m_l < config.d_prime_label + 1)
      fail(ErrorKind::RankError, "label " + std::to_string(label) + ": " + std::to_string(m_l) +
                                     " rows, need d_prime_label+1 = " +
                                     std::to_string(config.d_prime_label + 1));
    Matrix sub(m_l, historical.dim());
    for (Index i = 0; i < m_l; ++i) sub.row(i) = rows.row(members[i]);
    PcaProjector pca = fit_pca(sub, config.d_prime_label);
    model.label_gaussian[label] = estimate_gaussian(project(pca, sub));
    model.label_pca[label] = std::move(pca);
  }
  return model;
}

double threshold_from_distances(std::vector<double> distances, double t_alpha, std::int64_t n_th) {
  std::sort(distances.begin(), distances.end(), std::greater<>());
  const auto trim =
      static_cast<std::size_t>(std::floor(t_alpha * static_cast<double>(n_th)));
  if (trim >= distances.size()) return std::numeric_limits<double>::infinity();
  return distances[trim];
}

ThresholdSet estimate_thresholds(const BaselineModel& baseline, const EmbeddingBatch& threshold_data,
                                 DistanceKind metric, const OfflineConfig& config) {
  threshold_data.validate();
  if (!threshold_data.has_labels())
    fail(ErrorKind::InvalidInput, "threshold batch carries no predicted labels");
  if (threshold_data.dim() != baseline.batch_pca.in_dim())
    fail(ErrorKind::DimensionError, "threshold batch width " + std::to_string(threshold_data.dim()) +
                                        " does not match baseline width " +
                                        std::to_string(baseline.batch_pca.in_dim()));
  config.validate(threshold_data.dim());

  const Index pool_size = threshold_data.rows();
  if (pool_size < config.m_w)
    fail(ErrorKind::InsufficientData, "threshold pool has " + std::to_string(pool_size) +
                                          " rows, a window needs " + std::to_string(config.m_w));

  const MatrixRM pool = threshold_data.vectors.cast<double>();
  const Index d = pool.cols();
  const Index m_w = config.m_w;
  const Index d_l = baseline.config.d_prime_label;

  std::vector<double> batch_distances(static_cast<std::size_t>(config.n_th));
  std::map<Label, std::vector<double>> label_distances;
  for (Label label : baseline.label_set) label_distances[label];

  std::vector<Index> deck(static_cast<std::size_t>(pool_size));
  MatrixRM window(m_w, d);
  std::vector<Label> window_labels(static_cast<std::size_t>(m_w));
  std::map<Label, std::vector<Index>> window_groups;

  for (std::int64_t w = 0; w < config.n_th; ++w) {
    // rows are distinct within a window; windows overlap freely across draws
    Rng rng = Rng::split(config.seed, static_cast<std::uint64_t>(w));
    std::iota(deck.begin(), deck.end(), Index{0});
    for (Index i = 0; i < m_w; ++i) {
      const Index j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(pool_size - i)));
      std::swap(deck[i], deck[j]);
    }
    for (Index i = 0; i < m_w; ++i) {
      window.row(i) = pool.row(deck[i]);
      window_labels[i] = threshold_data.labels[deck[i]];
    }

    const GaussianSummary window_gaussian = estimate_gaussian(reduce(baseline.batch_pca, window));
    batch_distances[static_cast<std::size_t>(w)] =
        distance(metric, window_gaussian, baseline.batch_gaussian);

    window_groups.clear();
    for (Index i = 0; i < m_w; ++i) window_groups[window_labels[i]].push_back(i);
    for (Label label : baseline.label_set) {
      const auto it = window_groups.find(label);
      if (it == window_groups.end() || static_cast<Index>(it->second.size()) < d_l + 1) continue;
      const Index m_l = static_cast<Index>(it->second.size());
      MatrixRM sub(m_l, d);
      for (Index i = 0; i < m_l; ++i) sub.row(i) = window.row(it->second[i]);
      const GaussianSummary g = estimate_gaussian(reduce(baseline.label_pca.at(label), sub));
      label_distances[label].push_back(distance(metric, g, baseline.label_gaussian.at(label)));
    }
  }

  ThresholdSet set;
  set.metric = metric;
  set.n_th = config.n_th;
  set.t_alpha = config.t_alpha;
  set.m_w = config.m_w;
  set.t_batch = threshold_from_distances(std::move(batch_distances), config.t_alpha, config.n_th);

  for (Label label : baseline.label_set) {
    auto& list = label_distances[label];
    if (list.empty()) {
      set.t_label[label] = std::numeric_limits<double>::infinity();
      set.warnings.push_back("label " + std::to_string(label) +
                             " never reached d_prime_label+1 samples in any sampled window; "
                             "threshold set to +inf");
      continue;
    }
    const double threshold = threshold_from_distances(std::move(list), config.t_alpha, config.n_th);
    if (std::isinf(threshold))
      set.warnings.push_back("label " + std::to_string(label) +
                             " had fewer valid windows than the trim count; threshold set to +inf");
    set.t_label[label] = threshold;
  }
  return set;
}

}  // namespace driftmon
