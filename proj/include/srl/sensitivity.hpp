#pragma once

#include <optional>
#include <string>

#include "srl/regularity.hpp"

namespace srl {

struct SensitivityReport {
  ColumnSelection K_set;
  std::optional<Vector> directional_derivative;
  std::optional<Matrix> jacobian_b;       // dx/db, n x m
  std::optional<Vector> jacobian_lambda;  // dx/dlambda at alpha = +1
  std::optional<double> L_SR_bound_J;     // J-based (b, lambda) bound
  std::optional<double> L_SR_bound_I;     // I-based (b, lambda) bound
  std::optional<double> L_SR_lambda_bound;
  std::optional<double> L_UC_lambda_bound;
  std::optional<double> V;                // ybar^T A_I A_I^+ ybar
  std::string tighter_bound;              // which of the two (b,lambda) bounds
};

/// Closed-form solution x with x_J = B A_J^T (I - y y^T) b and zeros off J,
/// where B inverts A_J^T (I - y y^T) A_J. Requires A_J of full column rank
/// and y outside rge A_J.
Vector analytic_solution(const ProblemInstance& p, const Vector& y,
                         const ColumnSelection& J);

struct DirectionalDerivative {
  Vector w;
  ColumnSelection K;
};

/// One-sided directional derivative of the solution map at (b, lambda) in
/// direction (q, alpha), valid under the intermediate condition. The active
/// set K with I <= K <= J is found by a greedy search validated against the
/// sign/complementarity conditions; failure raises DegenerateError.
DirectionalDerivative directional_derivative(const ProblemInstance& p,
                                             const PrimalDualPair& pair,
                                             const SupportSets& sets,
                                             const Vector& q, double alpha);

struct JacobianStrong {
  Matrix jacobian_b;       // n x m
  Vector jacobian_lambda;  // n
};

/// Full derivative of the solution map under the strong condition:
/// jacobian_b = L_I(B A_I^T (I - y y^T) .), jacobian_lambda =
/// -L_I(B A_I^T r)/lambda.
JacobianStrong jacobian_strong(const ProblemInstance& p,
                               const PrimalDualPair& pair,
                               const SupportSets& sets,
                               const RegularityOptions& opts = {});

/// Populates the Lipschitz bound fields gated by the regularity flags in the
/// given report; the LASSO solution (if provided) feeds the UC lambda bound.
SensitivityReport lipschitz_bounds(const ProblemInstance& p,
                                   const PrimalDualPair& pair,
                                   const SupportSets& sets,
                                   const RegularityReport& reg,
                                   const PrimalDualPair* lasso_pair = nullptr,
                                   const RegularityOptions& opts = {});

struct PhiPartials {
  Matrix d_b;       // n x m
  Vector d_lambda;  // n
  Matrix d_x;       // n x n
};

/// Partial derivatives of phi(A,b,lambda,x) = A^T(Ax-b) / (lambda ||Ax-b||)
/// with respect to b, lambda and x. Requires a nonzero residual.
PhiPartials phi_partials(const Matrix& A, const Vector& b, double lambda,
                         const Vector& x);

}  // namespace srl
