#pragma once

#include <Eigen/Dense>
#include <vector>

#include "srl/errors.hpp"

namespace srl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Strictly increasing set of 0-based column indices into a matrix with
/// `source_cols` columns. Used for supports, equicorrelation sets and their
/// complements.
class ColumnSelection {
 public:
  ColumnSelection() = default;
  ColumnSelection(std::vector<Index> indices, Index source_cols);

  static ColumnSelection empty(Index source_cols);
  static ColumnSelection all(Index source_cols);

  const std::vector<Index>& indices() const { return indices_; }
  Index source_cols() const { return source_cols_; }
  Index size() const { return static_cast<Index>(indices_.size()); }
  bool is_empty() const { return indices_.empty(); }
  bool contains(Index i) const;

  ColumnSelection complement() const;
  bool operator==(const ColumnSelection& other) const = default;

 private:
  std::vector<Index> indices_;
  Index source_cols_ = 0;
};

/// Columns of A named by the selection, in order (m x |sel|).
Matrix select_columns(const Matrix& A, const ColumnSelection& sel);

/// Entries of x named by the selection, in order.
Vector select_entries(const Vector& x, const ColumnSelection& sel);

/// Embeds a packed |sel|-vector into R^{source_cols}, zero elsewhere.
Vector scatter(const Vector& packed, const ColumnSelection& sel);

struct SvdSummary {
  double sigma_max = 0.0;
  double sigma_min_nonzero = 0.0;
  Index numerical_rank = 0;
  double rank_tolerance = 0.0;
};

/// Scale-aware SVD cutoff: 1e-10 * sigma_max * max(rows, cols).
double default_rank_tolerance(const Matrix& M, double sigma_max);

SvdSummary svd_summary(const Matrix& M);

bool has_full_column_rank(const Matrix& M);

/// Moore-Penrose pseudoinverse via SVD; singular values below the rank
/// tolerance are treated as zero. The zero matrix maps to the zero matrix.
Matrix pseudoinverse(const Matrix& M);

/// True iff u numerically lies in rge M:
/// ||(I - M M^+) u|| <= tol * max(1, ||u||).
bool in_range(const Matrix& M, const Vector& u, double tol = 1e-10);

/// Orthogonal projector onto ker M^T (rows x rows), P = I - Q Q^T for Q an
/// orthonormal basis of rge M.
Matrix nullspace_projector(const Matrix& M);

/// Inverse of W = M^T (I - v v^T) M by the rank-one downdate formula,
/// W^{-1} = (M^T M)^{-1} + (M^+ v)(M^+ v)^T / (1 - v^T M M^+ v).
/// Requires M of full column rank, ||v|| = 1, and v not in rge M. The output
/// is validated against W itself; a max-norm residual above 1e-6 raises
/// SmwResidualError since 1/(1 - v^T M M^+ v) is the known blowup source.
Matrix smw_inverse(const Matrix& M, const Vector& v);

/// Upper bound 1/sigma_min(M)^2 + ||M^+ v||^2 / (1 - v^T M M^+ v) on the
/// largest eigenvalue of smw_inverse(M, v).
double smw_eigen_bound(const Matrix& M, const Vector& v);

bool all_finite(const Matrix& M);
bool all_finite(const Vector& v);

}  // namespace srl
