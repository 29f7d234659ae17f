#pragma once

#include <optional>

#include "srl/problem.hpp"

namespace srl {

/// Warm-start state for grid sweeps. Holds the raw splitting iterates, not
/// the feasibility-scaled certificate. A cached operator norm of A (if
/// positive) skips the SVD on re-solves against the same matrix.
struct SolverState {
  Vector x;
  Vector u;
  double opnorm = 0.0;
};

/// Solves min ||Ax-b|| + lambda ||x||_1 by primal-dual splitting, stopping on
/// the relative duality gap against the dual max <b,y> s.t. A^T y in
/// lambda B_inf, y in B. Returns the best iterate with converged=false after
/// max_iter.
PrimalDualPair solve_srlasso(const ProblemInstance& p, const SolverSettings& s,
                             const SolverState* warm = nullptr,
                             SolverState* state_out = nullptr);

/// Solves min (1/2)||Ax-b||^2 + lambda ||x||_1 with the same splitting; the
/// gap is measured via the LASSO dual (y = b - Ax, ||A^T y||_inf <= lambda).
PrimalDualPair solve_lasso(const ProblemInstance& p, const SolverSettings& s,
                           const SolverState* warm = nullptr,
                           SolverState* state_out = nullptr);

PrimalDualPair solve(Program program, const ProblemInstance& p,
                     const SolverSettings& s,
                     const SolverState* warm = nullptr,
                     SolverState* state_out = nullptr);

/// Normalized residual (b - Ax)/||Ax - b||, the unique dual solution when the
/// residual is nonzero. Throws ZeroResidualError below the residual floor.
Vector dual_from_primal(const ProblemInstance& p, const Vector& x);

/// (||Ax-b|| + lambda ||x||_1) - <b, y>. Throws DualInfeasibleError if y
/// violates ||y|| <= 1 + 1e-6 or ||A^T y||_inf <= lambda (1 + 1e-6).
double duality_gap(const ProblemInstance& p, const Vector& x, const Vector& y);

/// Exhaustive minimizer search for n <= 12: enumerates every support (and
/// sign pattern), forms stationary-point candidates in closed form, polishes
/// by a local proximal descent, validates first-order optimality, and returns
/// the smallest-objective candidate (ties: smallest support, then
/// lexicographic). Independent of solve_srlasso.
Vector brute_force_oracle(const ProblemInstance& p);

/// Objective ||Ax-b|| + lambda ||x||_1.
double srlasso_objective(const ProblemInstance& p, const Vector& x);

/// Objective (1/2)||Ax-b||^2 + lambda ||x||_1.
double lasso_objective(const ProblemInstance& p, const Vector& x);

}  // namespace srl
