#include "driftmon/stats.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace driftmon {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::RankError: return "RankError";
    case ErrorKind::DimensionError: return "DimensionError";
    case ErrorKind::NotPsd: return "NotPSD";
    case ErrorKind::SingularCovariance: return "SingularCovariance";
    case ErrorKind::EmptyLabel: return "EmptyLabel";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::InvalidSchedule: return "InvalidSchedule";
    case ErrorKind::InvalidK: return "InvalidK";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::CorruptFile: return "CorruptFile";
    case ErrorKind::VersionError: return "VersionError";
    case ErrorKind::NothingToRender: return "NothingToRender";
    case ErrorKind::UndefinedCorrelation: return "UndefinedCorrelation";
    case ErrorKind::IoError: return "IoError";
  }
  return "Error";
}

const char* to_string(DistanceKind kind) {
  switch (kind) {
    case DistanceKind::Fdd: return "fdd";
    case DistanceKind::Kl: return "kl";
    case DistanceKind::Js: return "js";
    case DistanceKind::Mahalanobis: return "mahalanobis";
    case DistanceKind::Bhattacharyya: return "bhattacharyya";
  }
  return "fdd";
}

DistanceKind distance_kind_from(const std::string& name) {
  if (name == "fdd") return DistanceKind::Fdd;
  if (name == "kl") return DistanceKind::Kl;
  if (name == "js") return DistanceKind::Js;
  if (name == "mahalanobis") return DistanceKind::Mahalanobis;
  if (name == "bhattacharyya") return DistanceKind::Bhattacharyya;
  fail(ErrorKind::FormatError, "unknown distance metric '" + name + "'");
}

void EmbeddingBatch::validate() const {
  if (rows() < 1) fail(ErrorKind::InvalidInput, "embedding batch has no rows");
  if (!vectors.allFinite()) fail(ErrorKind::InvalidInput, "embedding batch contains a non-finite value");
  if (!labels.empty() && static_cast<Index>(labels.size()) != rows())
    fail(ErrorKind::InvalidInput, "label count " + std::to_string(labels.size()) +
                                      " does not match row count " + std::to_string(rows()));
}

GaussianSummary estimate_gaussian(const Eigen::Ref<const Matrix>& rows) {
  const Index n = rows.rows();
  if (n < 2)
    fail(ErrorKind::InsufficientSamples,
         "gaussian estimate needs at least 2 rows, got " + std::to_string(n));
  if (!rows.allFinite()) fail(ErrorKind::InvalidInput, "gaussian estimate: non-finite input");

  GaussianSummary g;
  g.mean = rows.colwise().mean();
  const Matrix centered = rows.rowwise() - g.mean.transpose();
  g.covariance = (centered.adjoint() * centered) / static_cast<double>(n - 1);
  // exact symmetry, so self-adjoint solvers downstream never see roundoff skew
  g.covariance = ((g.covariance + g.covariance.transpose()) * 0.5).eval();
  g.sample_count = n;
  return g;
}

PcaProjector fit_pca(const Eigen::Ref<const Matrix>& rows, Index k) {
  const Index n = rows.rows();
  const Index d = rows.cols();
  if (n < 1) fail(ErrorKind::InsufficientSamples, "pca needs at least one row");
  if (!rows.allFinite()) fail(ErrorKind::InvalidInput, "pca: non-finite input");
  if (k < 1 || k > std::min(n, d))
    fail(ErrorKind::RankError, "pca rank " + std::to_string(k) + " outside [1, " +
                                   std::to_string(std::min(n, d)) + "]");

  PcaProjector p;
  p.center = rows.colwise().mean();
  const Matrix centered = rows.rowwise() - p.center.transpose();

  const double spread = centered.cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, rows.cwiseAbs().maxCoeff());
  if (spread <= 1e-12 * scale) fail(ErrorKind::RankError, "pca input has no variance");

  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  p.components = svd.matrixV().leftCols(k).transpose();
  for (Index i = 0; i < k; ++i) {
    Index j = 0;
    p.components.row(i).cwiseAbs().maxCoeff(&j);
    if (p.components(i, j) < 0.0) p.components.row(i) = -p.components.row(i);
  }
  return p;
}

Matrix project(const PcaProjector& pca, const Eigen::Ref<const Matrix>& rows) {
  if (rows.cols() != pca.in_dim())
    fail(ErrorKind::DimensionError, "projector expects width " + std::to_string(pca.in_dim()) +
                                        ", got " + std::to_string(rows.cols()));
  return (rows.rowwise() - pca.center.transpose()) * pca.components.transpose();
}

Matrix psd_sqrt(const Eigen::Ref<const Matrix>& sym) {
  if (sym.rows() != sym.cols()) fail(ErrorKind::DimensionError, "psd_sqrt input is not square");
  if (!sym.allFinite()) fail(ErrorKind::InvalidInput, "psd_sqrt: non-finite input");
  const double scale = std::max(1.0, sym.cwiseAbs().maxCoeff());
  if ((sym - sym.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    fail(ErrorKind::InvalidInput, "psd_sqrt input is not symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) fail(ErrorKind::InvalidInput, "eigendecomposition failed");
  // tolerance scales with the matrix so roundoff on large covariances is not
  // mistaken for indefiniteness
  if (es.eigenvalues().minCoeff() < -1e-8 * scale)
    fail(ErrorKind::NotPsd,
         "matrix has eigenvalue " + std::to_string(es.eigenvalues().minCoeff()));

  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  Matrix r = es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
  return ((r + r.transpose()) * 0.5).eval();
}

double fdd(const GaussianSummary& a, const GaussianSummary& b) {
  if (a.dim() != b.dim())
    fail(ErrorKind::DimensionError, "fdd dimensions disagree: " + std::to_string(a.dim()) +
                                        " vs " + std::to_string(b.dim()));
  const Matrix ra = psd_sqrt(a.covariance);
  Matrix m = ra * b.covariance * ra;
  m = ((m + m.transpose()) * 0.5).eval();
  const double cross = psd_sqrt(m).trace();
  const double value = (a.mean - b.mean).squaredNorm() + a.covariance.trace() +
                       b.covariance.trace() - 2.0 * cross;
  return std::max(0.0, value);
}

namespace {

Matrix jittered(const Matrix& cov) {
  Matrix out = cov;
  out.diagonal().array() += 1e-6 * cov.diagonal().mean();
  return out;
}

struct CholFactor {
  Eigen::LLT<Matrix> llt;
  double logdet = 0.0;
};

CholFactor factor_or_fail(const Matrix& cov) {
  CholFactor f;
  f.llt.compute(cov);
  if (f.llt.info() != Eigen::Success)
    fail(ErrorKind::SingularCovariance, "covariance singular after jitter");
  const auto& l = f.llt.matrixLLT();
  for (Index i = 0; i < cov.rows(); ++i) {
    if (l(i, i) <= 0.0) fail(ErrorKind::SingularCovariance, "covariance singular after jitter");
    f.logdet += 2.0 * std::log(l(i, i));
  }
  return f;
}

// KL(a || b) with both covariances already jittered.
double kl_gauss(const Vector& mean_a, const Matrix& cov_a, const Vector& mean_b,
                const Matrix& cov_b) {
  const CholFactor fb = factor_or_fail(cov_b);
  const double logdet_a = factor_or_fail(cov_a).logdet;
  const double trace_term = fb.llt.solve(cov_a).trace();
  const Vector delta = mean_b - mean_a;
  const double quad = delta.dot(fb.llt.solve(delta));
  const double kl =
      0.5 * (trace_term + quad - static_cast<double>(mean_a.size()) + fb.logdet - logdet_a);
  return std::max(0.0, kl);
}

}  // namespace

double alt_distance(DistanceKind kind, const GaussianSummary& a, const GaussianSummary& b) {
  if (a.dim() != b.dim())
    fail(ErrorKind::DimensionError, "distance dimensions disagree: " + std::to_string(a.dim()) +
                                        " vs " + std::to_string(b.dim()));
  switch (kind) {
    case DistanceKind::Fdd:
      return fdd(a, b);
    case DistanceKind::Kl:
      return kl_gauss(a.mean, jittered(a.covariance), b.mean, jittered(b.covariance));
    case DistanceKind::Js: {
      GaussianSummary mid;
      mid.mean = (a.mean + b.mean) * 0.5;
      const Vector da = a.mean - mid.mean;
      const Vector db = b.mean - mid.mean;
      mid.covariance = (a.covariance + b.covariance) * 0.5 +
                       0.5 * (da * da.transpose() + db * db.transpose());
      mid.sample_count = a.sample_count + b.sample_count;
      const Matrix jm = jittered(mid.covariance);
      const double kl_a = kl_gauss(a.mean, jittered(a.covariance), mid.mean, jm);
      const double kl_b = kl_gauss(b.mean, jittered(b.covariance), mid.mean, jm);
      return 0.5 * kl_a + 0.5 * kl_b;
    }
    case DistanceKind::Mahalanobis: {
      const CholFactor fb = factor_or_fail(jittered(b.covariance));
      const Vector delta = a.mean - b.mean;
      return std::sqrt(std::max(0.0, delta.dot(fb.llt.solve(delta))));
    }
    case DistanceKind::Bhattacharyya: {
      const Matrix ja = jittered(a.covariance);
      const Matrix jb = jittered(b.covariance);
      const Matrix mixed = (ja + jb) * 0.5;
      const CholFactor fm = factor_or_fail(mixed);
      const double logdet_a = factor_or_fail(ja).logdet;
      const double logdet_b = factor_or_fail(jb).logdet;
      const Vector delta = a.mean - b.mean;
      const double quad = 0.125 * delta.dot(fm.llt.solve(delta));
      return std::max(0.0, quad + 0.5 * (fm.logdet - 0.5 * (logdet_a + logdet_b)));
    }
  }
  fail(ErrorKind::InvalidInput, "unknown distance kind");
}

double distance(DistanceKind kind, const GaussianSummary& a, const GaussianSummary& b) {
  return kind == DistanceKind::Fdd ? fdd(a, b) : alt_distance(kind, a, b);
}

}  // namespace driftmon
