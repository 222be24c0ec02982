#pragma once

#include <Eigen/Core>

#include <cstddef>

namespace seed {

/// Dense real vector. All latent and gradient math is done in double.
using Vec64 = Eigen::VectorXd;

/// Dense row-major matrix; one sample (or one gradient) per row.
using Mat64 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Orthonormal row basis of a subspace, as produced by svd_basis().
struct Basis {
  Mat64 vectors;        // k x dim, orthonormal rows
  Vec64 singular_values;  // k retained values, non-increasing
  double energy_threshold = 0.95;

  std::size_t rank() const { return static_cast<std::size_t>(vectors.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }
  bool empty() const { return vectors.rows() == 0; }
};

/// 1 - <u,v> / (|u| |v|). Throws ZeroVector / DimMismatch.
double cosine_distance(const Eigen::Ref<const Vec64>& u, const Eigen::Ref<const Vec64>& v);

/// Number of leading singular values whose squared cumulative share reaches `energy`.
std::size_t energy_rank(const Eigen::Ref<const Vec64>& singular_values, double energy);

/// Thin SVD of `z`; keeps the leading right-singular vectors covering `energy`
/// of the squared spectrum. Throws DegenerateMatrix when the spectrum is zero.
Basis svd_basis(const Eigen::Ref<const Mat64>& z, double energy);

/// Least-squares projection of `z` onto span(basis).
Vec64 project_onto_span(const Basis& basis, const Eigen::Ref<const Vec64>& z);

/// max_{i,j} |<b_i,b_j> - delta_ij|.
double orthonormality_error(const Eigen::Ref<const Mat64>& rows);

}  // namespace seed
