#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <unistd.h>

#include "driftmon/rng.hpp"
#include "driftmon/types.hpp"

namespace dmtest {

// Unique scratch directory, removed on scope exit.
struct ScopedDir {
  std::filesystem::path path;
  explicit ScopedDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("driftmon_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~ScopedDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

// Runs fn, which must throw driftmon::Error, and returns the kind.
template <class Fn>
driftmon::ErrorKind thrown_kind(Fn&& fn) {
  try {
    fn();
  } catch (const driftmon::Error& e) {
    return e.kind();
  }
  throw std::runtime_error("expected a driftmon::Error");
}

inline driftmon::Matrix random_matrix(driftmon::Rng& rng, driftmon::Index r, driftmon::Index c,
                                      double lo = -1.0, double hi = 1.0) {
  driftmon::Matrix m(r, c);
  for (driftmon::Index i = 0; i < r; ++i)
    for (driftmon::Index j = 0; j < c; ++j) m(i, j) = lo + (hi - lo) * rng.uniform();
  return m;
}

inline driftmon::Matrix gaussian_matrix(driftmon::Rng& rng, driftmon::Index r, driftmon::Index c) {
  driftmon::Matrix m(r, c);
  for (driftmon::Index i = 0; i < r; ++i)
    for (driftmon::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

// Well-conditioned random PSD matrix: A^T A scaled down plus a ridge.
inline driftmon::Matrix random_psd(driftmon::Rng& rng, driftmon::Index k, double ridge = 0.1) {
  driftmon::Matrix a = gaussian_matrix(rng, k + 4, k);
  driftmon::Matrix s = (a.adjoint() * a) / static_cast<double>(k + 4);
  s.diagonal().array() += ridge;
  return ((s + s.transpose()) * 0.5).eval();
}

inline driftmon::GaussianSummary random_summary(driftmon::Rng& rng, driftmon::Index k) {
  driftmon::GaussianSummary g;
  g.mean = random_matrix(rng, k, 1, -2.0, 2.0);
  g.covariance = random_psd(rng, k);
  g.sample_count = 100;
  return g;
}

// Component means spread along the first n_labels axes, `scale` apart.
inline driftmon::Matrix axis_means(driftmon::Index d, driftmon::Index n_labels,
                                   double scale = 10.0) {
  driftmon::Matrix means = driftmon::Matrix::Zero(d, n_labels);
  for (driftmon::Index l = 0; l < n_labels; ++l) means(l, l) = scale;
  return means;
}

// Labeled isotropic mixture; means given column-wise (d x L). Labels cycle
// round-robin so any prefix stays balanced.
inline driftmon::EmbeddingBatch mixture_batch(driftmon::Rng& rng, const driftmon::Matrix& means,
                                              driftmon::Index rows_per_label, double sigma = 1.0) {
  const driftmon::Index d = means.rows();
  const driftmon::Index n_labels = means.cols();
  const driftmon::Index n = rows_per_label * n_labels;
  driftmon::EmbeddingBatch batch;
  batch.vectors.resize(n, d);
  batch.labels.resize(static_cast<std::size_t>(n));
  for (driftmon::Index i = 0; i < n; ++i) {
    const driftmon::Index l = i % n_labels;
    batch.labels[static_cast<std::size_t>(i)] = static_cast<driftmon::Label>(l);
    for (driftmon::Index j = 0; j < d; ++j)
      batch.vectors(i, j) = static_cast<float>(means(j, l) + sigma * rng.normal());
  }
  return batch;
}

}  // namespace dmtest
