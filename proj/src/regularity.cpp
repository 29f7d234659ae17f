#include "srl/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace srl {

const char* flag_name(Flag f) {
  switch (f) {
    case Flag::False: return "false";
    case Flag::True: return "true";
    default: return "indeterminate";
  }
}

SupportSets detect_sets(const ProblemInstance& p, const PrimalDualPair& pair,
                        double tol_support, double tol_equi) {
  SupportSets out;
  out.tol_support = tol_support;
  out.tol_equi = tol_equi;

  const Index n = p.A.cols();
  const double xscale = std::max(1.0, pair.x.lpNorm<Eigen::Infinity>());
  std::vector<Index> supp;
  for (Index i = 0; i < n; ++i)
    if (std::abs(pair.x(i)) > tol_support * xscale) supp.push_back(i);
  out.support_I = ColumnSelection(std::move(supp), n);

  // A pair converged at duality gap g can carry a residual of order g even
  // when the true optimum interpolates exactly, so the zero test must sit
  // above the certified gap, not only above the representation floor.
  const double zero_threshold =
      std::max(residual_floor(p.b), 10.0 * std::max(pair.gap, 0.0));
  out.residual_nonzero = pair.residual_norm > zero_threshold;
  if (out.residual_nonzero) {
    const Vector ybar = pair.residual / pair.residual_norm;
    const Vector corr = p.A.transpose() * ybar;
    std::vector<Index> equi;
    for (Index i = 0; i < n; ++i)
      if (std::abs(corr(i)) >= p.lambda - tol_equi) equi.push_back(i);
    out.equicorrelation_J = ColumnSelection(std::move(equi), n);
  } else {
    out.equicorrelation_J = ColumnSelection::empty(n);
  }
  return out;
}

namespace {

// Euclidean projection onto the l1 unit ball (Duchi et al. style).
Vector project_l1_ball(const Vector& v) {
  if (v.lpNorm<1>() <= 1.0) return v;
  Vector a = v.cwiseAbs();
  std::sort(a.data(), a.data() + a.size(), std::greater<double>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    cumsum += a(i);
    const double t = (cumsum - 1.0) / static_cast<double>(i + 1);
    if (i + 1 == a.size() || a(i + 1) <= t) {
      theta = t;
      break;
    }
  }
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) {
    const double mag = std::abs(v(i)) - theta;
    out(i) = mag > 0.0 ? (v(i) > 0.0 ? mag : -mag) : 0.0;
  }
  return out;
}

}  // namespace

AuxiliaryResult solve_auxiliary(const ProblemInstance& p,
                                const SupportSets& sets, const Vector& y,
                                const SolverSettings& s,
                                std::optional<double> decision_threshold) {
  if (std::abs(y.norm() - 1.0) > 1e-9)
    throw Error("solve_auxiliary: y must be a unit vector");
  if (!sets.residual_nonzero)
    throw ZeroResidualError("solve_auxiliary: residual is zero upstream");

  const Index m = p.A.rows();
  AuxiliaryResult out;
  const ColumnSelection Ic = sets.support_I.complement();
  if (Ic.is_empty()) {
    out.zstar = 0.0;
    out.lower_bound = 0.0;
    out.z = Vector::Zero(m);
    out.converged = true;
    return out;
  }

  const Matrix K = select_columns(p.A, Ic).transpose();  // |I^C| x m
  const Vector c = K * y;

  // Constraint subspace: z in ker [A_I y]^T.
  Matrix M(m, sets.support_I.size() + 1);
  if (sets.support_I.size() > 0)
    M.leftCols(sets.support_I.size()) = select_columns(p.A, sets.support_I);
  M.col(sets.support_I.size()) = y;
  const Matrix P = nullspace_projector(M);

  const Matrix Kt = K * P;
  const double L = svd_summary(Kt).sigma_max;
  if (L <= 1e-300 || P.lpNorm<Eigen::Infinity>() <= 1e-300) {
    // Feasible directions do not move the objective.
    out.zstar = c.lpNorm<Eigen::Infinity>();
    out.lower_bound = out.zstar;
    out.z = Vector::Zero(m);
    out.converged = true;
    return out;
  }

  // Dual lower bounds use feasible multipliers: u projected onto ker Kt^T and
  // rescaled into the l1 ball, so UB - LB certifies optimality of Z*.
  const Matrix N = nullspace_projector(Kt);

  const double tau = std::sqrt(0.95) / L;
  const double sigma = std::sqrt(0.95) / L;
  Vector zeta = Vector::Zero(m);
  Vector zeta_bar = zeta;
  Vector u = Vector::Zero(Ic.size());

  double best_ub = c.lpNorm<Eigen::Infinity>();
  Vector best_zeta = zeta;
  double best_lb = -std::numeric_limits<double>::infinity();
  bool converged = false;
  long k = 0;
  const long check_every = 16;
  while (k < s.max_iter) {
    ++k;
    u = project_l1_ball(u + sigma * (Kt * zeta_bar + c));
    const Vector zeta_prev = zeta;
    zeta.noalias() -= tau * (Kt.transpose() * u);
    zeta_bar = 2.0 * zeta - zeta_prev;

    if (k % check_every == 0 || k == s.max_iter) {
      const double ub = (Kt * zeta + c).lpNorm<Eigen::Infinity>();
      if (ub < best_ub) {
        best_ub = ub;
        best_zeta = zeta;
      }
      const Vector uf = N * u;
      const double l1 = uf.lpNorm<1>();
      const double lb = c.dot(uf / std::max(1.0, l1));
      best_lb = std::max(best_lb, lb);
      if (best_ub - best_lb <= s.gap_tol * std::max(1.0, best_ub)) {
        converged = true;
        break;
      }
      if (decision_threshold.has_value() &&
          (best_ub < *decision_threshold || best_lb >= *decision_threshold)) {
        converged = true;
        break;
      }
    }
  }

  out.zstar = best_ub;
  out.lower_bound = best_lb;
  out.z = P * best_zeta;
  out.converged = converged;
  out.iterations = k;
  return out;
}

namespace {

// Rank/range clause shared by the weak and strong conditions; vacuous for
// an empty support.
bool support_clause(const ProblemInstance& p, const ColumnSelection& I,
                    const RegularityOptions& opts, bool& rank_full,
                    bool& b_in_range) {
  const Matrix Ai = select_columns(p.A, I);
  rank_full = I.is_empty() ? true : has_full_column_rank(Ai);
  b_in_range = in_range(Ai, p.b, opts.range_tol);
  if (I.is_empty()) return true;
  return rank_full && !b_in_range;
}

}  // namespace

void check_weak(const ProblemInstance& p, const PrimalDualPair& pair,
                const SupportSets& sets, const SolverSettings& s,
                const RegularityOptions& opts, RegularityReport& report) {
  if (!sets.residual_nonzero) {
    report.weak = Flag::Indeterminate;
    report.zstar_infinite = true;
    return;
  }
  const bool structural = support_clause(p, sets.support_I, opts,
                                         report.rank_AI_full,
                                         report.b_in_range_AI);
  // Z* is reported whenever the residual is nonzero; the part (ii) value is
  // of interest on its own even where the rank clause fails.
  const Vector ybar = dual_from_primal(p, pair.x);
  const std::optional<double> threshold =
      opts.aux_decision_only
          ? std::optional<double>(p.lambda - opts.strictness_margin)
          : std::nullopt;
  const AuxiliaryResult aux = solve_auxiliary(p, sets, ybar, s, threshold);
  report.weak_witness_z = aux.z;
  report.weak_optimum_zstar = aux.zstar;
  if (!structural) {
    report.weak = Flag::False;
  } else if (aux.zstar < p.lambda - opts.strictness_margin) {
    // The witness alone certifies the condition even if the auxiliary
    // program was not solved to optimality.
    report.weak = Flag::True;
  } else {
    report.weak = aux.converged ? Flag::False : Flag::Indeterminate;
  }
}

void check_intermediate(const ProblemInstance& p, const PrimalDualPair& pair,
                        const SupportSets& sets, const RegularityOptions& opts,
                        RegularityReport& report) {
  (void)pair;
  if (!sets.residual_nonzero) {
    report.intermediate = Flag::False;
    return;
  }
  const ColumnSelection& J = sets.equicorrelation_J;
  const Matrix Aj = select_columns(p.A, J);
  report.rank_AJ_full = J.is_empty() ? true : has_full_column_rank(Aj);
  report.b_in_range_AJ = in_range(Aj, p.b, opts.range_tol);
  report.vacuous_empty_J = J.is_empty();
  report.intermediate = (report.rank_AJ_full && !report.b_in_range_AJ)
                            ? Flag::True
                            : Flag::False;
}

void check_strong(const ProblemInstance& p, const PrimalDualPair& pair,
                  const SupportSets& sets, const RegularityOptions& opts,
                  RegularityReport& report) {
  const ColumnSelection Ic = sets.support_I.complement();
  const double corr =
      Ic.is_empty() ? 0.0
                    : (select_columns(p.A, Ic).transpose() * pair.residual)
                          .lpNorm<Eigen::Infinity>();
  const double scale = p.lambda * pair.residual_norm;
  report.strong_margin = scale - corr;
  bool rank_full = false;
  bool b_in_range = false;
  const bool structural =
      support_clause(p, sets.support_I, opts, rank_full, b_in_range);
  report.rank_AI_full = rank_full;
  report.b_in_range_AI = b_in_range;
  report.strong = (structural &&
                   report.strong_margin > opts.strictness_margin * scale)
                      ? Flag::True
                      : Flag::False;
}

bool implication_audit(const RegularityReport& report) {
  if (report.weak == Flag::Indeterminate ||
      report.intermediate == Flag::Indeterminate ||
      report.strong == Flag::Indeterminate)
    throw IndeterminateError("implication_audit: indeterminate flag");
  const bool strong = report.strong == Flag::True;
  const bool inter = report.intermediate == Flag::True;
  const bool weak = report.weak == Flag::True;
  return (!strong || inter) && (!inter || weak);
}

RegularityReport assess_regularity(const ProblemInstance& p,
                                   const PrimalDualPair& pair,
                                   const SupportSets& sets,
                                   const SolverSettings& s,
                                   const RegularityOptions& opts) {
  RegularityReport report;
  check_intermediate(p, pair, sets, opts, report);
  check_strong(p, pair, sets, opts, report);
  check_weak(p, pair, sets, s, opts, report);
  return report;
}

}  // namespace srl
