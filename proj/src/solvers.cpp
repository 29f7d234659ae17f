#include "srl/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace srl {

void ProblemInstance::validate() const {
  if (lambda <= 0.0) throw Error("ProblemInstance: lambda must be positive");
  if (b.size() != A.rows()) throw Error("ProblemInstance: size of b != rows of A");
  if (!all_finite(A) || !all_finite(b))
    throw Error("ProblemInstance: entries must be finite");
}

void SolverSettings::validate() const {
  if (!(gap_tol > 0.0 && gap_tol < 1.0))
    throw Error("SolverSettings: gap_tol must lie in (0,1)");
  if (max_iter < 1) throw Error("SolverSettings: max_iter must be >= 1");
  if (step_ratio <= 0.0) throw Error("SolverSettings: step_ratio must be positive");
}

const char* program_name(Program p) { return p == Program::SR ? "sr" : "uc"; }

double srlasso_objective(const ProblemInstance& p, const Vector& x) {
  return (p.A * x - p.b).norm() + p.lambda * x.lpNorm<1>();
}

double lasso_objective(const ProblemInstance& p, const Vector& x) {
  return 0.5 * (p.A * x - p.b).squaredNorm() + p.lambda * x.lpNorm<1>();
}

namespace {

void soft_threshold_inplace(Vector& v, double t) {
  for (Index i = 0; i < v.size(); ++i) {
    const double a = v(i);
    v(i) = a > t ? a - t : (a < -t ? a + t : 0.0);
  }
}

double operator_norm(const Matrix& A) { return svd_summary(A).sigma_max; }

struct GapCheck {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  double residual_norm = 0.0;
  Vector y;  // feasible dual candidate
};

// Chambolle-Pock on min F(Ax) + lambda||x||_1 where F is either the distance
// ||.-b|| (SR) or the half squared distance (UC). The dual iterate u tends to
// -y for the certificate y of the respective dual problem; feasibility is
// enforced by scaling before the gap is evaluated.
PrimalDualPair primal_dual_solve(Program program, const ProblemInstance& p,
                                 const SolverSettings& s,
                                 const SolverState* warm,
                                 SolverState* state_out) {
  p.validate();
  s.validate();
  const Matrix& A = p.A;
  const Vector& b = p.b;
  const double lambda = p.lambda;
  const Index m = A.rows();
  const Index n = A.cols();

  PrimalDualPair out;
  if (b.norm() == 0.0) {
    out.x = Vector::Zero(n);
    out.y = Vector::Zero(m);
    out.residual = Vector::Zero(m);
    out.converged = true;
    if (state_out) *state_out = SolverState{out.x, Vector::Zero(m), 0.0};
    return out;
  }

  const double L = std::max(
      warm && warm->opnorm > 0.0 ? warm->opnorm : operator_norm(A), 1e-300);
  const double tau = std::sqrt(0.95 * s.step_ratio) / L;
  const double sigma = std::sqrt(0.95 / s.step_ratio) / L;

  Vector x = warm ? warm->x : Vector::Zero(n);
  Vector u = warm ? warm->u : Vector::Zero(m);
  Vector x_prev = x;
  Vector xbar = x;

  const long check_every = 16;
  auto evaluate = [&](const Vector& xc, const Vector& uc) {
    GapCheck g;
    const Vector r = b - A * xc;
    g.residual_norm = r.norm();
    const Vector Atu = A.transpose() * uc;
    if (program == Program::SR) {
      g.primal = r.norm() + lambda * xc.lpNorm<1>();
      const double scale =
          std::max({1.0, uc.norm(), Atu.lpNorm<Eigen::Infinity>() / lambda});
      g.y = -uc / scale;
      g.dual = b.dot(g.y);
    } else {
      g.primal = 0.5 * r.squaredNorm() + lambda * xc.lpNorm<1>();
      const double scale =
          std::max(1.0, Atu.lpNorm<Eigen::Infinity>() / lambda);
      g.y = -uc / scale;
      g.dual = b.dot(g.y) - 0.5 * g.y.squaredNorm();
    }
    g.gap = g.primal - g.dual;
    return g;
  };

  GapCheck last;
  long k = 0;
  bool converged = false;
  // In the exact-fit regime the primal interpolates long before the dual can
  // certify a gap; once the residual sits below the floor and the objective
  // has stalled, further iterations cannot change the answer.
  const double floor = residual_floor(b);
  double prev_primal = std::numeric_limits<double>::infinity();
  int stalled = 0;
  while (k < s.max_iter) {
    ++k;
    // dual ascent step + prox of F*
    u.noalias() += sigma * (A * xbar - b);
    if (program == Program::SR) {
      const double nu = u.norm();
      if (nu > 1.0) u /= nu;
    } else {
      u /= (1.0 + sigma);
    }
    // primal descent step + shrinkage
    x_prev = x;
    x.noalias() -= tau * (A.transpose() * u);
    soft_threshold_inplace(x, tau * lambda);
    xbar = 2.0 * x - x_prev;

    if (k % check_every == 0 || k == s.max_iter) {
      last = evaluate(x, u);
      if (last.gap <= s.gap_tol * std::max(1.0, std::abs(last.primal))) {
        converged = true;
        break;
      }
      if (last.residual_norm <= floor &&
          std::abs(last.primal - prev_primal) <=
              1e-3 * s.gap_tol * std::max(1.0, std::abs(last.primal))) {
        if (++stalled >= 5) break;
      } else {
        stalled = 0;
      }
      prev_primal = last.primal;
    }
  }
  if (k % check_every != 0 && !converged) last = evaluate(x, u);

  out.x = x;
  out.y = last.y;
  out.residual = b - A * x;
  out.residual_norm = out.residual.norm();
  out.primal_value = last.primal;
  out.dual_value = last.dual;
  out.gap = last.gap;
  out.iterations = k;
  out.converged = converged;
  if (state_out) *state_out = SolverState{x, u, L};
  return out;
}

}  // namespace

PrimalDualPair solve_srlasso(const ProblemInstance& p, const SolverSettings& s,
                             const SolverState* warm, SolverState* state_out) {
  return primal_dual_solve(Program::SR, p, s, warm, state_out);
}

PrimalDualPair solve_lasso(const ProblemInstance& p, const SolverSettings& s,
                           const SolverState* warm, SolverState* state_out) {
  return primal_dual_solve(Program::UC, p, s, warm, state_out);
}

PrimalDualPair solve(Program program, const ProblemInstance& p,
                     const SolverSettings& s, const SolverState* warm,
                     SolverState* state_out) {
  return primal_dual_solve(program, p, s, warm, state_out);
}

Vector dual_from_primal(const ProblemInstance& p, const Vector& x) {
  const Vector r = p.b - p.A * x;
  const double rn = r.norm();
  if (rn <= residual_floor(p.b))
    throw ZeroResidualError("dual_from_primal: residual is numerically zero");
  return r / rn;
}

double duality_gap(const ProblemInstance& p, const Vector& x,
                   const Vector& y) {
  if (y.norm() > 1.0 + 1e-6)
    throw DualInfeasibleError("duality_gap: ||y|| > 1");
  if ((p.A.transpose() * y).lpNorm<Eigen::Infinity>() >
      p.lambda * (1.0 + 1e-6))
    throw DualInfeasibleError("duality_gap: ||A^T y||_inf > lambda");
  return srlasso_objective(p, x) - p.b.dot(y);
}

namespace {

constexpr double kOracleTol = 1e-8;

std::vector<Index> effective_support(const Vector& x) {
  const double tol = 1e-12 * std::max(1.0, x.lpNorm<Eigen::Infinity>());
  std::vector<Index> supp;
  for (Index i = 0; i < x.size(); ++i)
    if (std::abs(x(i)) > tol) supp.push_back(i);
  return supp;
}

struct OracleCandidate {
  Vector x;
  double objective = std::numeric_limits<double>::infinity();
  std::vector<Index> support;
  bool valid = false;
};

// objective, then support size, then lexicographic support
bool better(const OracleCandidate& a, const OracleCandidate& b) {
  if (a.objective < b.objective - 1e-10) return true;
  if (a.objective > b.objective + 1e-10) return false;
  if (a.support.size() != b.support.size())
    return a.support.size() < b.support.size();
  return a.support < b.support;
}

bool first_order_optimal(const ProblemInstance& p, const Vector& x) {
  const Vector r = p.b - p.A * x;
  const double rn = r.norm();
  const double lambda = p.lambda;
  if (rn > residual_floor(p.b)) {
    const Vector corr = p.A.transpose() * (r / rn);
    if (corr.lpNorm<Eigen::Infinity>() > lambda * (1.0 + kOracleTol))
      return false;
    const double xtol = 1e-12 * std::max(1.0, x.lpNorm<Eigen::Infinity>());
    for (Index i = 0; i < x.size(); ++i) {
      if (std::abs(x(i)) <= xtol) continue;
      const double want = lambda * (x(i) > 0 ? 1.0 : -1.0);
      if (std::abs(corr(i) - want) > kOracleTol * std::max(1.0, lambda))
        return false;
    }
    return true;
  }
  // Zero residual: need some y in the unit ball with A^T y in the lambda-
  // scaled l1 subdifferential. Test the least-norm multiplier on the support.
  const std::vector<Index> supp = effective_support(x);
  if (supp.empty()) return true;  // x = 0 and b = 0
  const ColumnSelection S(supp, x.size());
  const Matrix As = select_columns(p.A, S);
  Vector v(S.size());
  for (Index k = 0; k < S.size(); ++k)
    v(k) = x(supp[static_cast<std::size_t>(k)]) > 0 ? 1.0 : -1.0;
  const Vector y = pseudoinverse(As).transpose() * (lambda * v);
  if (y.norm() > 1.0 + kOracleTol) return false;
  if ((As.transpose() * y - lambda * v).lpNorm<Eigen::Infinity>() >
      kOracleTol * std::max(1.0, lambda))
    return false;
  return (p.A.transpose() * y).lpNorm<Eigen::Infinity>() <=
         lambda * (1.0 + kOracleTol);
}

// Proximal descent on ||A_K u - b|| + lambda ||u||_1 restricted to the given
// columns; the step uses the local curvature bound ||A_K||^2 / ||r||.
Vector restricted_descent(const Matrix& Ak, const Vector& b, double lambda,
                          Vector u, double floor) {
  const double L2 = std::max(svd_summary(Ak).sigma_max, 1e-150);
  const double lip = L2 * L2;
  for (int it = 0; it < 300; ++it) {
    const Vector r = Ak * u - b;
    const double rn = r.norm();
    if (rn < 16.0 * floor) break;
    const double step = 0.9 * rn / lip;
    Vector u_new = u - (step / rn) * (Ak.transpose() * r);
    soft_threshold_inplace(u_new, step * lambda);
    if ((u_new - u).lpNorm<Eigen::Infinity>() <=
        1e-14 * std::max(1.0, u.lpNorm<Eigen::Infinity>())) {
      u = u_new;
      break;
    }
    u = u_new;
  }
  return u;
}

}  // namespace

Vector brute_force_oracle(const ProblemInstance& p) {
  p.validate();
  const Index n = p.A.cols();
  if (n > 12) throw TooLargeError("brute_force_oracle: n > 12");
  const Vector& b = p.b;
  const double lambda = p.lambda;
  const double floor = residual_floor(b);

  OracleCandidate best_valid;
  OracleCandidate best_any;
  auto consider = [&](const Vector& x) {
    OracleCandidate c;
    c.x = x;
    c.objective = srlasso_objective(p, x);
    c.support = effective_support(x);
    c.valid = first_order_optimal(p, x);
    if (better(c, best_any)) best_any = c;
    if (c.valid && better(c, best_valid)) best_valid = c;
  };

  consider(Vector::Zero(n));

  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<Index> idx;
    for (Index i = 0; i < n; ++i)
      if (mask & (1u << i)) idx.push_back(i);
    const ColumnSelection K(idx, n);
    const Matrix Ak = select_columns(p.A, K);
    const Index k = K.size();

    const auto svd =
        Eigen::BDCSVD<Matrix>(Ak, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double rank_tol = default_rank_tolerance(Ak, sv(0));
    const bool full_rank = sv(sv.size() - 1) > rank_tol && Ak.rows() >= k;

    Vector u_ls;
    if (full_rank) {
      u_ls = svd.solve(b);
      const Vector r_perp = b - Ak * u_ls;
      const double rpn = r_perp.norm();
      if (rpn <= floor) consider(scatter(u_ls, K));

      Matrix gram_inv = svd.matrixV() *
                        sv.array().square().inverse().matrix().asDiagonal() *
                        svd.matrixV().transpose();
      // Stationary points with nonzero residual, one per sign pattern:
      // x_K = A_K^+ b - lambda t (A_K^T A_K)^{-1} v with t = ||r_perp|| /
      // sqrt(1 - lambda^2 v^T (A_K^T A_K)^{-1} v).
      for (unsigned smask = 0; smask < (1u << k); ++smask) {
        Vector v(k);
        for (Index i = 0; i < k; ++i)
          v(i) = (smask & (1u << i)) ? 1.0 : -1.0;
        const Vector g = gram_inv * v;
        const double c = 1.0 - lambda * lambda * v.dot(g);
        if (c <= 1e-12) continue;
        const double t = rpn / std::sqrt(c);
        if (t <= floor) continue;
        const Vector u = u_ls - lambda * t * g;
        bool sign_ok = true;
        const double stol = 1e-12 * std::max(1.0, u.lpNorm<Eigen::Infinity>());
        for (Index i = 0; i < k; ++i)
          if (v(i) * u(i) < -stol) {
            sign_ok = false;
            break;
          }
        if (sign_ok) consider(scatter(u, K));
      }
    } else {
      u_ls = Vector::Zero(k);
    }

    consider(scatter(restricted_descent(Ak, b, lambda, u_ls, floor), K));
  }

  if (best_valid.valid &&
      best_valid.objective <= best_any.objective + 1e-10) {
    return best_valid.x;
  }
  return best_any.x;
}

}  // namespace srl
