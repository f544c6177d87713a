#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace driftmon {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Embedding payloads are stored as row-major f32, matching the on-disk layout.
using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;
using Label = std::uint32_t;

enum class ErrorKind {
  InvalidInput,
  InsufficientSamples,
  RankError,
  DimensionError,
  NotPsd,
  SingularCovariance,
  EmptyLabel,
  InsufficientData,
  InvalidSchedule,
  InvalidK,
  DegenerateData,
  FormatError,
  CorruptFile,
  VersionError,
  NothingToRender,
  UndefinedCorrelation,
  IoError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

// A batch of embedding vectors plus the classifier's predicted label per row.
// `labels` is either empty (raw matrix) or has exactly one entry per row.
struct EmbeddingBatch {
  MatrixF vectors;
  std::vector<Label> labels;

  Index rows() const { return vectors.rows(); }
  Index dim() const { return vectors.cols(); }
  bool has_labels() const { return !labels.empty(); }
  void validate() const;
  Matrix as_double() const { return vectors.cast<double>(); }
};

struct GaussianSummary {
  Vector mean;
  Matrix covariance;  // symmetric, unbiased (n-1) estimate
  std::int64_t sample_count = 0;

  Index dim() const { return mean.size(); }
};

// Affine map x -> (x - center) * components^T with orthonormal rows ordered by
// decreasing explained variance.
struct PcaProjector {
  Vector center;
  Matrix components;  // k x d

  Index in_dim() const { return center.size(); }
  Index out_dim() const { return components.rows(); }
};

enum class DistanceKind { Fdd, Kl, Js, Mahalanobis, Bhattacharyya };

const char* to_string(DistanceKind kind);
DistanceKind distance_kind_from(const std::string& name);  // FormatError on unknown names

}  // namespace driftmon
