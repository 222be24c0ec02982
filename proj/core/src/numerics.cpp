#include "seed/numerics.hpp"

#include "seed/error.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace seed {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::DegenerateMatrix: return "DegenerateMatrix";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TrainModeSingleSample: return "TrainModeSingleSample";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::EmptyPairSet: return "EmptyPairSet";
    case ErrorCode::EmptyMemory: return "EmptyMemory";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::EmptyGradientSet: return "EmptyGradientSet";
    case ErrorCode::DuplicateTask: return "DuplicateTask";
    case ErrorCode::NonMonotonicClock: return "NonMonotonicClock";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::DegenerateBatch: return "DegenerateBatch";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonNumericFeature: return "NonNumericFeature";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::EmptyTask: return "EmptyTask";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::DatasetMissing: return "DatasetMissing";
    case ErrorCode::MissingMetrics: return "MissingMetrics";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
  }
  return "Unknown";
}

double cosine_distance(const Eigen::Ref<const Vec64>& u, const Eigen::Ref<const Vec64>& v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::DimMismatch,
                "cosine_distance: " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw Error(ErrorCode::ZeroVector, "cosine_distance");
  double cos = u.dot(v) / (nu * nv);
  // Rounding can push |cos| a hair past 1.
  if (cos > 1.0) cos = 1.0;
  if (cos < -1.0) cos = -1.0;
  return 1.0 - cos;
}

std::size_t energy_rank(const Eigen::Ref<const Vec64>& singular_values, double energy) {
  const Vec64 sq = singular_values.array().square();
  const double total = sq.sum();
  if (total <= 0.0) return 0;
  const double target = energy * total - 1e-12 * total;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < sq.size(); ++i) {
    acc += sq[i];
    if (acc >= target) return static_cast<std::size_t>(i + 1);
  }
  return static_cast<std::size_t>(sq.size());
}

Basis svd_basis(const Eigen::Ref<const Mat64>& z, double energy) {
  if (z.rows() == 0 || z.cols() == 0) throw Error(ErrorCode::InvalidArgument, "svd_basis: empty matrix");
  if (!(energy > 0.0 && energy <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "svd_basis: energy must lie in (0,1]");
  }
  // BDCSVD falls back to Jacobi for small problems and transposes wide inputs itself.
  Eigen::BDCSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(z), Eigen::ComputeThinV);
  const Vec64& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 0.0) throw Error(ErrorCode::DegenerateMatrix, "svd_basis: all singular values are zero");

  const auto k = static_cast<Eigen::Index>(energy_rank(sv, energy));
  Basis out;
  out.energy_threshold = energy;
  out.singular_values = sv.head(k);
  out.vectors = svd.matrixV().leftCols(k).transpose();
  return out;
}

Vec64 project_onto_span(const Basis& basis, const Eigen::Ref<const Vec64>& z) {
  if (static_cast<std::size_t>(z.size()) != basis.dim() && !basis.empty()) {
    throw Error(ErrorCode::DimMismatch, "project_onto_span: vector dim " + std::to_string(z.size()) +
                                            ", basis dim " + std::to_string(basis.dim()));
  }
  if (basis.empty()) return Vec64::Zero(z.size());
  const Vec64 coeffs = basis.vectors * z;
  return basis.vectors.transpose() * coeffs;
}

double orthonormality_error(const Eigen::Ref<const Mat64>& rows) {
  if (rows.rows() == 0) return 0.0;
  const Eigen::MatrixXd gram = rows * rows.transpose();
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

}  // namespace seed
