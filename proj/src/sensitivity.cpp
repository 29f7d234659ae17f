#include "srl/sensitivity.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace srl {

namespace {

// ||proj_{rge M} y|| via an orthonormal basis of rge M.
double range_projection_norm(const Matrix& M, const Vector& y) {
  if (M.cols() == 0) return 0.0;
  Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  const double tol = default_rank_tolerance(M, sv.size() > 0 ? sv(0) : 0.0);
  Index r = 0;
  while (r < sv.size() && sv(r) > tol) ++r;
  return (svd.matrixU().leftCols(r).transpose() * y).norm();
}

Vector normalized_residual(const PrimalDualPair& pair) {
  return pair.residual / pair.residual_norm;
}

void require_intermediate(const ProblemInstance& p, const PrimalDualPair& pair,
                          const SupportSets& sets) {
  if (!sets.residual_nonzero || pair.residual_norm <= residual_floor(p.b))
    throw PreconditionError("intermediate condition fails: zero residual");
  const Matrix Aj = select_columns(p.A, sets.equicorrelation_J);
  if (!sets.equicorrelation_J.is_empty() && !has_full_column_rank(Aj))
    throw PreconditionError("intermediate condition fails: A_J rank deficient");
  if (in_range(Aj, p.b))
    throw PreconditionError("intermediate condition fails: b in rge A_J");
}

}  // namespace

Vector analytic_solution(const ProblemInstance& p, const Vector& y,
                         const ColumnSelection& J) {
  if (J.is_empty()) return Vector::Zero(p.A.cols());
  const Matrix Aj = select_columns(p.A, J);
  const Matrix B = smw_inverse(Aj, y);
  const Vector rhs = Aj.transpose() * p.b - y.dot(p.b) * (Aj.transpose() * y);
  return scatter(B * rhs, J);
}

DirectionalDerivative directional_derivative(const ProblemInstance& p,
                                             const PrimalDualPair& pair,
                                             const SupportSets& sets,
                                             const Vector& q, double alpha) {
  require_intermediate(p, pair, sets);
  const Vector ybar = normalized_residual(pair);
  const Vector& rbar = pair.residual;
  const double lambda = p.lambda;
  const Index n = p.A.cols();
  const Vector corr = p.A.transpose() * ybar;

  const std::vector<Index>& I = sets.support_I.indices();
  const std::vector<Index>& J = sets.equicorrelation_J.indices();
  std::vector<Index> extras;  // J \ I, candidates to activate
  for (Index j : J)
    if (!sets.support_I.contains(j)) extras.push_back(j);

  const double dir_scale =
      std::max(1.0, q.norm() + std::abs(alpha) * pair.residual_norm / lambda);
  const double tol_g = 1e-9 * dir_scale * std::max(1.0, svd_summary(p.A).sigma_max);

  std::vector<Index> K = I;
  const std::size_t max_passes = extras.size() + 1;
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    const ColumnSelection Ksel(K, n);
    Vector w = Vector::Zero(n);
    if (!Ksel.is_empty()) {
      const Matrix Ak = select_columns(p.A, Ksel);
      const Matrix B = smw_inverse(Ak, ybar);
      const Vector proj_q = q - ybar.dot(q) * ybar;
      const Vector rhs =
          Ak.transpose() * proj_q - (alpha / lambda) * (Ak.transpose() * rbar);
      w = scatter(B * rhs, Ksel);
    }

    // g_i ~ A_i^T [(I - ybar ybar^T)(q - Aw) - (alpha/lambda) rbar], zero on K
    // by construction of the linear system.
    const Vector d = q - p.A * w;
    const Vector g = p.A.transpose() * (d - ybar.dot(d) * ybar) -
                     (alpha / lambda) * (p.A.transpose() * rbar);

    bool ok = true;
    std::vector<Index> to_add;
    for (Index j : extras) {
      const double s = corr(j) > 0 ? 1.0 : -1.0;
      if (Ksel.contains(j)) {
        // active extras need a consistent sign on w
        if (s * w(j) < -1e-11 * std::max(1.0, w.lpNorm<Eigen::Infinity>())) {
          ok = false;
        }
      } else if (s * g(j) > tol_g) {
        to_add.push_back(j);
        ok = false;
      }
    }
    if (ok) return DirectionalDerivative{w, Ksel};
    if (to_add.empty()) break;  // sign violation with nothing left to add
    K.insert(K.end(), to_add.begin(), to_add.end());
    std::sort(K.begin(), K.end());
  }
  throw DegenerateError("directional_derivative: active set did not settle");
}

JacobianStrong jacobian_strong(const ProblemInstance& p,
                               const PrimalDualPair& pair,
                               const SupportSets& sets,
                               const RegularityOptions& opts) {
  RegularityReport probe;
  check_strong(p, pair, sets, opts, probe);
  if (probe.strong != Flag::True)
    throw PreconditionError("strong condition fails");

  const Index n = p.A.cols();
  const Index m = p.A.rows();
  JacobianStrong out;
  if (sets.support_I.is_empty()) {
    out.jacobian_b = Matrix::Zero(n, m);
    out.jacobian_lambda = Vector::Zero(n);
    return out;
  }
  const Vector ybar = normalized_residual(pair);
  const Matrix Ai = select_columns(p.A, sets.support_I);
  const Matrix B = smw_inverse(Ai, ybar);
  const Matrix proj = Matrix::Identity(m, m) - ybar * ybar.transpose();
  const Matrix rows = B * (Ai.transpose() * proj);  // |I| x m
  out.jacobian_b = Matrix::Zero(n, m);
  const Vector dlam_I = -(B * (Ai.transpose() * pair.residual)) / p.lambda;
  out.jacobian_lambda = scatter(dlam_I, sets.support_I);
  for (Index k = 0; k < sets.support_I.size(); ++k)
    out.jacobian_b.row(sets.support_I.indices()[static_cast<std::size_t>(k)]) =
        rows.row(k);
  return out;
}

namespace {

double modulus_bound(const Matrix& Asel, const Vector& ybar, const Vector& rbar,
                   double lambda) {
  const SvdSummary sv = svd_summary(Asel);
  const double proj = range_projection_norm(Asel, ybar);
  const double lead =
      1.0 / (sv.sigma_min_nonzero * sv.sigma_min_nonzero) + 1.0 / (1.0 - proj);
  const double trail =
      sv.sigma_max + (Asel.transpose() * rbar).norm() / lambda;
  return lead * trail;
}

}  // namespace

SensitivityReport lipschitz_bounds(const ProblemInstance& p,
                                   const PrimalDualPair& pair,
                                   const SupportSets& sets,
                                   const RegularityReport& reg,
                                   const PrimalDualPair* lasso_pair,
                                   const RegularityOptions& opts) {
  SensitivityReport out;
  const bool nonzero = sets.residual_nonzero;
  const Vector ybar = nonzero ? normalized_residual(pair) : Vector();

  if (reg.intermediate == Flag::True && nonzero) {
    if (sets.equicorrelation_J.is_empty()) {
      out.L_SR_bound_J = 0.0;
    } else {
      out.L_SR_bound_J =
          modulus_bound(select_columns(p.A, sets.equicorrelation_J), ybar,
                      pair.residual, p.lambda);
    }
  }

  if (reg.strong == Flag::True && nonzero) {
    if (sets.support_I.is_empty()) {
      out.L_SR_bound_I = 0.0;
      out.L_SR_lambda_bound = 0.0;
      out.V = 0.0;
    } else {
      const Matrix Ai = select_columns(p.A, sets.support_I);
      out.L_SR_bound_I = modulus_bound(Ai, ybar, pair.residual, p.lambda);
      const double proj = range_projection_norm(Ai, ybar);
      const double V = proj * proj;
      out.V = V;
      const double pinv_r = (pseudoinverse(Ai) * pair.residual).norm();
      out.L_SR_lambda_bound = pinv_r / (p.lambda * std::abs(1.0 - V));
    }
    if (out.L_SR_bound_J.has_value()) {
      out.tighter_bound =
          *out.L_SR_bound_I <= *out.L_SR_bound_J ? "I" : "J";
    }
  }

  if (lasso_pair != nullptr) {
    SupportSets uc = detect_sets(p, *lasso_pair, opts.tol_support,
                                 opts.tol_equi_factor * p.lambda);
    if (uc.support_I.is_empty()) {
      out.L_UC_lambda_bound = 0.0;
    } else {
      const Matrix Ai = select_columns(p.A, uc.support_I);
      if (has_full_column_rank(Ai)) {
        out.L_UC_lambda_bound =
            (pseudoinverse(Ai) * lasso_pair->residual).norm() / p.lambda;
      }
    }
  }
  return out;
}

PhiPartials phi_partials(const Matrix& A, const Vector& b, double lambda,
                         const Vector& x) {
  const Vector r = A * x - b;
  const double rn = r.norm();
  if (rn <= residual_floor(b))
    throw ZeroResidualError("phi_partials: residual is numerically zero");
  const Vector rhat = r / rn;
  const Vector At_rhat = A.transpose() * rhat;
  PhiPartials out;
  out.d_b = -(A.transpose() - At_rhat * rhat.transpose()) / (lambda * rn);
  out.d_lambda = -At_rhat / (lambda * lambda);
  out.d_x = (A.transpose() * A - At_rhat * (rhat.transpose() * A)) /
            (lambda * rn);
  return out;
}

}  // namespace srl
