#include "srl/linalg.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace srl {

namespace {

Eigen::BDCSVD<Matrix> thin_svd(const Matrix& M) {
  return Eigen::BDCSVD<Matrix>(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

Index rank_from_singular_values(const Vector& sv, double tol) {
  Index r = 0;
  while (r < sv.size() && sv(r) > tol) ++r;
  return r;
}

}  // namespace

ColumnSelection::ColumnSelection(std::vector<Index> indices, Index source_cols)
    : indices_(std::move(indices)), source_cols_(source_cols) {
  if (source_cols_ < 0) throw Error("ColumnSelection: negative source_cols");
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    if (indices_[k] < 0 || indices_[k] >= source_cols_)
      throw Error("ColumnSelection: index out of range");
    if (k > 0 && indices_[k] <= indices_[k - 1])
      throw Error("ColumnSelection: indices must be strictly increasing");
  }
}

ColumnSelection ColumnSelection::empty(Index source_cols) {
  return ColumnSelection({}, source_cols);
}

ColumnSelection ColumnSelection::all(Index source_cols) {
  std::vector<Index> idx(static_cast<std::size_t>(source_cols));
  for (Index i = 0; i < source_cols; ++i) idx[static_cast<std::size_t>(i)] = i;
  return ColumnSelection(std::move(idx), source_cols);
}

bool ColumnSelection::contains(Index i) const {
  return std::binary_search(indices_.begin(), indices_.end(), i);
}

ColumnSelection ColumnSelection::complement() const {
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(source_cols_ - size()));
  std::size_t k = 0;
  for (Index i = 0; i < source_cols_; ++i) {
    if (k < indices_.size() && indices_[k] == i) {
      ++k;
    } else {
      out.push_back(i);
    }
  }
  return ColumnSelection(std::move(out), source_cols_);
}

Matrix select_columns(const Matrix& A, const ColumnSelection& sel) {
  if (sel.source_cols() != A.cols())
    throw Error("select_columns: selection does not match matrix");
  Matrix out(A.rows(), sel.size());
  for (Index k = 0; k < sel.size(); ++k)
    out.col(k) = A.col(sel.indices()[static_cast<std::size_t>(k)]);
  return out;
}

Vector select_entries(const Vector& x, const ColumnSelection& sel) {
  if (sel.source_cols() != x.size())
    throw Error("select_entries: selection does not match vector");
  Vector out(sel.size());
  for (Index k = 0; k < sel.size(); ++k)
    out(k) = x(sel.indices()[static_cast<std::size_t>(k)]);
  return out;
}

Vector scatter(const Vector& packed, const ColumnSelection& sel) {
  if (packed.size() != sel.size())
    throw Error("scatter: packed size does not match selection");
  Vector out = Vector::Zero(sel.source_cols());
  for (Index k = 0; k < sel.size(); ++k)
    out(sel.indices()[static_cast<std::size_t>(k)]) = packed(k);
  return out;
}

double default_rank_tolerance(const Matrix& M, double sigma_max) {
  return 1e-10 * sigma_max * static_cast<double>(std::max(M.rows(), M.cols()));
}

SvdSummary svd_summary(const Matrix& M) {
  SvdSummary s;
  if (M.size() == 0) {
    s.rank_tolerance = 0.0;
    return s;
  }
  const Vector sv = thin_svd(M).singularValues();
  s.sigma_max = sv.size() > 0 ? sv(0) : 0.0;
  s.rank_tolerance = default_rank_tolerance(M, s.sigma_max);
  s.numerical_rank = rank_from_singular_values(sv, s.rank_tolerance);
  s.sigma_min_nonzero = s.numerical_rank > 0 ? sv(s.numerical_rank - 1) : 0.0;
  return s;
}

bool has_full_column_rank(const Matrix& M) {
  if (M.cols() == 0) return true;
  if (M.rows() < M.cols()) return false;
  return svd_summary(M).numerical_rank == M.cols();
}

Matrix pseudoinverse(const Matrix& M) {
  if (M.size() == 0) return Matrix::Zero(M.cols(), M.rows());
  const auto svd = thin_svd(M);
  const Vector& sv = svd.singularValues();
  const double tol = default_rank_tolerance(M, sv.size() > 0 ? sv(0) : 0.0);
  const Index r = rank_from_singular_values(sv, tol);
  if (r == 0) return Matrix::Zero(M.cols(), M.rows());
  Vector inv = Vector::Zero(sv.size());
  for (Index i = 0; i < r; ++i) inv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

bool in_range(const Matrix& M, const Vector& u, double tol) {
  if (M.rows() != u.size()) throw Error("in_range: dimension mismatch");
  if (M.cols() == 0) return u.norm() <= tol * std::max(1.0, u.norm());
  const auto svd = thin_svd(M);
  const Vector& sv = svd.singularValues();
  const double rank_tol =
      default_rank_tolerance(M, sv.size() > 0 ? sv(0) : 0.0);
  const Index r = rank_from_singular_values(sv, rank_tol);
  const Matrix Q = svd.matrixU().leftCols(r);
  const double resid = (u - Q * (Q.transpose() * u)).norm();
  return resid <= tol * std::max(1.0, u.norm());
}

Matrix nullspace_projector(const Matrix& M) {
  const Index m = M.rows();
  if (m < 1) throw Error("nullspace_projector: empty matrix");
  if (M.cols() == 0) return Matrix::Identity(m, m);
  const auto svd = thin_svd(M);
  const Vector& sv = svd.singularValues();
  const double tol = default_rank_tolerance(M, sv.size() > 0 ? sv(0) : 0.0);
  const Index r = rank_from_singular_values(sv, tol);
  const Matrix Q = svd.matrixU().leftCols(r);
  return Matrix::Identity(m, m) - Q * Q.transpose();
}

namespace {

// Shared SMW ingredients with the preconditions checked once.
struct SmwParts {
  Matrix gram_inv;  // (M^T M)^{-1}
  Vector pinv_v;    // M^+ v
  double slack;     // 1 - v^T M M^+ v
  double sigma_min;
};

SmwParts smw_parts(const Matrix& M, const Vector& v) {
  if (M.rows() != v.size()) throw Error("smw: dimension mismatch");
  if (std::abs(v.norm() - 1.0) > 1e-12)
    throw Error("smw: v must be a unit vector");
  const auto svd = thin_svd(M);
  const Vector& sv = svd.singularValues();
  const double tol = default_rank_tolerance(M, sv.size() > 0 ? sv(0) : 0.0);
  const Index r = rank_from_singular_values(sv, tol);
  if (r < M.cols()) throw RankDeficientError("smw: M lost full column rank");

  Vector inv_sv(sv.size());
  for (Index i = 0; i < sv.size(); ++i) inv_sv(i) = 1.0 / sv(i);
  SmwParts parts;
  parts.sigma_min = sv(sv.size() - 1);
  parts.pinv_v =
      svd.matrixV() * inv_sv.asDiagonal() * (svd.matrixU().transpose() * v);
  // v^T M M^+ v = ||U^T v||^2 because M M^+ projects onto rge M.
  parts.slack = 1.0 - (svd.matrixU().transpose() * v).squaredNorm();
  if (parts.slack <= tol)
    throw InRangeError("smw: v numerically lies in rge M");
  parts.gram_inv = svd.matrixV() *
                   inv_sv.array().square().matrix().asDiagonal() *
                   svd.matrixV().transpose();
  return parts;
}

}  // namespace

Matrix smw_inverse(const Matrix& M, const Vector& v) {
  if (M.cols() == 0) return Matrix(0, 0);
  const SmwParts parts = smw_parts(M, v);
  Matrix W_inv = parts.gram_inv +
                 (parts.pinv_v * parts.pinv_v.transpose()) / parts.slack;
  W_inv = 0.5 * (W_inv + W_inv.transpose());
  const Matrix W =
      M.transpose() * M - (M.transpose() * v) * (v.transpose() * M);
  const double resid =
      (W * W_inv - Matrix::Identity(M.cols(), M.cols())).lpNorm<Eigen::Infinity>();
  if (resid > 1e-6)
    throw SmwResidualError("smw: inverse residual " + std::to_string(resid));
  return W_inv;
}

double smw_eigen_bound(const Matrix& M, const Vector& v) {
  const SmwParts parts = smw_parts(M, v);
  return 1.0 / (parts.sigma_min * parts.sigma_min) +
         parts.pinv_v.squaredNorm() / parts.slack;
}

bool all_finite(const Matrix& M) { return M.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace srl
