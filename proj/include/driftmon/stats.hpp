#pragma once

#include "driftmon/types.hpp"

namespace driftmon {

// Mean and unbiased covariance of the rows; the covariance is symmetrized so
// downstream self-adjoint solvers see an exactly symmetric matrix.
GaussianSummary estimate_gaussian(const Eigen::Ref<const Matrix>& rows);

// Principal directions of the centered rows via SVD. Component rows carry a
// fixed sign: the largest-magnitude loading of each is positive.
PcaProjector fit_pca(const Eigen::Ref<const Matrix>& rows, Index k);

Matrix project(const PcaProjector& pca, const Eigen::Ref<const Matrix>& rows);

// Symmetric PSD square root. Eigenvalues in [-tol, 0) are clipped to zero;
// anything below -tol is rejected as not PSD.
Matrix psd_sqrt(const Eigen::Ref<const Matrix>& sym);

// Squared 2-Wasserstein distance between the two Gaussians:
//   ||mu_a - mu_b||^2 + tr(Sa + Sb - 2 (Sa^1/2 Sb Sa^1/2)^1/2)
double fdd(const GaussianSummary& a, const GaussianSummary& b);

// Closed-form Gaussian divergences; b is the reference where order matters.
double alt_distance(DistanceKind kind, const GaussianSummary& a, const GaussianSummary& b);

double distance(DistanceKind kind, const GaussianSummary& a, const GaussianSummary& b);

}  // namespace driftmon
