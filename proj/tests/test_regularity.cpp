#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "srl/regularity.hpp"
#include "srl/solvers.hpp"
#include "testutil.hpp"

using namespace srl;

namespace {

ProblemInstance example1() {
  Matrix A(2, 3);
  A << 1, 0, 0, 0, 1, 1;
  Vector b(2);
  b << 1, 2;
  return {A, b, 2.0 / std::sqrt(5.0)};
}

ProblemInstance example2() {
  Matrix A(2, 3);
  A << 1, 0, 2, 0, 2, -2;
  Vector b(2);
  b << 1, 1;
  return {A, b, std::sqrt(2.0)};
}

struct Solved {
  PrimalDualPair pair;
  SupportSets sets;
};

Solved solve_and_detect(const ProblemInstance& p,
                        const SolverSettings& st = {}) {
  Solved out;
  out.pair = solve_srlasso(p, st);
  REQUIRE(out.pair.converged);
  out.sets = detect_sets(p, out.pair, 1e-6, 1e-6 * p.lambda);
  return out;
}

}  // namespace

TEST_CASE("support and equicorrelation sets on the worked examples") {
  {
    const ProblemInstance p = example1();
    const Solved s = solve_and_detect(p);
    CHECK(s.sets.support_I.is_empty());
    CHECK(s.sets.residual_nonzero);
    CHECK(s.sets.equicorrelation_J.indices() == std::vector<Index>{1, 2});
  }
  {
    const ProblemInstance p = example2();
    const Solved s = solve_and_detect(p);
    CHECK(s.sets.support_I.is_empty());
    CHECK(s.sets.equicorrelation_J.indices() == std::vector<Index>{1});
  }
}

TEST_CASE("zero residual makes J undefined and weak indeterminate") {
  // synthetic exact fit: the solution reproduces b exactly
  Matrix A(2, 3);
  A << 1, 0, 1, 0, 1, -1;
  Vector x0(3);
  x0 << 1.0, 2.0, 0.0;
  ProblemInstance p{A, A * x0, 1e-8};

  PrimalDualPair pair;
  pair.x = x0;
  pair.residual = Vector::Zero(2);
  pair.residual_norm = 0.0;
  pair.converged = true;
  const SupportSets sets = detect_sets(p, pair, 1e-6, 1e-6 * p.lambda);
  CHECK_FALSE(sets.residual_nonzero);
  CHECK(sets.equicorrelation_J.is_empty());

  RegularityReport report;
  check_weak(p, pair, sets, {}, {}, report);
  CHECK(report.weak == Flag::Indeterminate);
  CHECK(report.zstar_infinite);
  check_intermediate(p, pair, sets, {}, report);
  CHECK(report.intermediate == Flag::False);
  check_strong(p, pair, sets, {}, report);
  CHECK(report.strong == Flag::False);
  CHECK_THROWS_AS(implication_audit(report), IndeterminateError);

  CHECK_THROWS_AS(
      solve_auxiliary(p, sets, Vector::Unit(2, 0), SolverSettings{}),
      ZeroResidualError);
}

TEST_CASE("auxiliary program reaches the known optimum on example 1") {
  const ProblemInstance p = example1();
  const Solved s = solve_and_detect(p);
  const Vector ybar = dual_from_primal(p, s.pair.x);
  const AuxiliaryResult aux = solve_auxiliary(p, s.sets, ybar, {});
  CHECK(aux.converged);
  // hand witness z = (lambda/6) (2, -1) attains 5 lambda / 6, which is optimal
  CHECK(aux.zstar <= 5.0 * p.lambda / 6.0 + 1e-6);
  CHECK(aux.zstar >= 5.0 * p.lambda / 6.0 - 1e-6);
  // returned witness is feasible and achieves the reported value
  CHECK(std::abs(ybar.dot(aux.z)) <= 1e-9);
  const Vector attained = p.A.transpose() * (ybar + aux.z);
  CHECK(attained.lpNorm<Eigen::Infinity>() <= aux.zstar + 1e-8);
}

TEST_CASE("auxiliary program trivial cases") {
  const ProblemInstance p = example2();
  const Solved s = solve_and_detect(p);
  const Vector ybar = dual_from_primal(p, s.pair.x);

  SupportSets all = s.sets;
  all.support_I = ColumnSelection::all(3);
  const AuxiliaryResult aux = solve_auxiliary(p, all, ybar, {});
  CHECK(aux.converged);
  CHECK(aux.zstar == 0.0);
  CHECK(aux.z.isZero());

  // z = 0 is always feasible, so Z* is at most the unperturbed value
  const AuxiliaryResult aux2 = solve_auxiliary(p, s.sets, ybar, {});
  CHECK(aux2.zstar <=
        (p.A.transpose() * ybar).lpNorm<Eigen::Infinity>() + 1e-10);
  CHECK(aux2.zstar < p.lambda);
}

TEST_CASE("worked example 1: weak holds, intermediate fails") {
  const ProblemInstance p = example1();
  const Solved s = solve_and_detect(p);
  const RegularityReport report =
      assess_regularity(p, s.pair, s.sets, {}, {});
  CHECK(report.weak == Flag::True);
  CHECK(report.intermediate == Flag::False);
  CHECK_FALSE(report.rank_AJ_full);
  CHECK(report.strong == Flag::False);
  CHECK(implication_audit(report));
  CHECK(report.weak_optimum_zstar <= 5.0 * p.lambda / 6.0 + 1e-6);
}

TEST_CASE("worked example 2: intermediate holds, strong fails") {
  const ProblemInstance p = example2();
  const Solved s = solve_and_detect(p);
  const RegularityReport report =
      assess_regularity(p, s.pair, s.sets, {}, {});
  CHECK(report.weak == Flag::True);
  CHECK(report.intermediate == Flag::True);
  CHECK(report.rank_AJ_full);
  CHECK_FALSE(report.b_in_range_AJ);
  CHECK(report.strong == Flag::False);
  CHECK(std::abs(report.strong_margin) <= 1e-6);  // tight at the paper value
  CHECK(implication_audit(report));
}

TEST_CASE("strong holds when off-support columns are uniformly small") {
  Matrix A = Matrix::Zero(3, 4);
  A(0, 0) = 1.0;
  A(1, 1) = 1.0;
  A.col(2) << 0.02, 0.01, 0.02;
  A.col(3) << -0.01, 0.02, 0.01;
  Vector b(3);
  b << 2.0, -1.5, 0.4;
  const ProblemInstance p{A, b, 0.5};
  const Solved s = solve_and_detect(p);
  REQUIRE(s.sets.support_I.indices() == std::vector<Index>{0, 1});
  const RegularityReport report =
      assess_regularity(p, s.pair, s.sets, {}, {});
  CHECK(report.strong == Flag::True);
  CHECK(report.intermediate == Flag::True);
  CHECK(report.weak == Flag::True);
  CHECK(implication_audit(report));
}

TEST_CASE("strictly slack dual at zero solution: J empty is vacuous") {
  std::mt19937_64 rng(3);
  ProblemInstance p = testutil::random_instance(rng, 5, 8, 1.0);
  p.lambda = 1.5 * (p.A.transpose() * p.b).lpNorm<Eigen::Infinity>() /
             p.b.norm();
  const Solved s = solve_and_detect(p);
  REQUIRE(s.pair.x.isZero());
  CHECK(s.sets.equicorrelation_J.is_empty());
  const RegularityReport report =
      assess_regularity(p, s.pair, s.sets, {}, {});
  CHECK(report.vacuous_empty_J);
  CHECK(report.intermediate == Flag::True);
  CHECK(report.weak == Flag::True);
  CHECK(report.strong == Flag::True);
  CHECK(implication_audit(report));
}

TEST_CASE("implication audit truth table") {
  RegularityReport r;
  r.strong = Flag::True;
  r.intermediate = Flag::True;
  r.weak = Flag::True;
  CHECK(implication_audit(r));
  r.strong = Flag::False;
  CHECK(implication_audit(r));  // example-2 pattern
  r.strong = Flag::True;
  r.intermediate = Flag::False;
  CHECK_FALSE(implication_audit(r));
  r.intermediate = Flag::Indeterminate;
  CHECK_THROWS_AS(implication_audit(r), IndeterminateError);
}

TEST_CASE("implication chain and shrinking consistency on random instances") {
  std::mt19937_64 rng(77);
  SolverSettings st;
  int determinate = 0;
  int intermediate_count = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const Index m = 3 + static_cast<Index>(rng() % 10);
    const Index n = 3 + static_cast<Index>(rng() % 14);
    const double lambda =
        std::pow(10.0, -1.0 + 1.7 * std::generate_canonical<double, 53>(rng));
    const ProblemInstance p = testutil::random_instance(rng, m, n, lambda);
    const PrimalDualPair pair = solve_srlasso(p, st);
    if (!pair.converged) continue;
    const SupportSets sets = detect_sets(p, pair, 1e-6, 1e-6 * p.lambda);
    const RegularityReport report =
        assess_regularity(p, pair, sets, st, {});
    if (report.weak == Flag::Indeterminate) continue;
    ++determinate;
    CHECK(implication_audit(report));
    if (report.intermediate == Flag::True && sets.residual_nonzero) {
      ++intermediate_count;
      CHECK(report.weak_optimum_zstar < p.lambda - 1e-8);
      if (report.weak_witness_z.has_value()) {
        Matrix M(p.A.rows(), sets.support_I.size() + 1);
        if (sets.support_I.size() > 0)
          M.leftCols(sets.support_I.size()) =
              select_columns(p.A, sets.support_I);
        M.col(sets.support_I.size()) = dual_from_primal(p, pair.x);
        CHECK((M.transpose() * *report.weak_witness_z)
                  .lpNorm<Eigen::Infinity>() <= 1e-9);
      }
    }
  }
  CHECK(determinate >= 50);
  CHECK(intermediate_count >= 10);
}

TEST_CASE("weak certificate implies the oracle finds the same minimizer") {
  std::mt19937_64 rng(99);
  SolverSettings tight;
  tight.gap_tol = 1e-12;
  int weak_count = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Index m = 3 + static_cast<Index>(rng() % 5);
    const Index n = 3 + static_cast<Index>(rng() % 7);
    const double lambda =
        std::pow(10.0, -0.9 + 1.5 * std::generate_canonical<double, 53>(rng));
    const ProblemInstance p = testutil::random_instance(rng, m, n, lambda);
    const PrimalDualPair pair = solve_srlasso(p, tight);
    if (!pair.converged) continue;
    const SupportSets sets = detect_sets(p, pair, 1e-6, 1e-6 * p.lambda);
    const RegularityReport report =
        assess_regularity(p, pair, sets, tight, {});
    if (report.weak != Flag::True) continue;
    ++weak_count;
    const Vector x_bf = brute_force_oracle(p);
    CHECK((x_bf - pair.x).norm() <= 1e-6 * std::max(1.0, pair.x.norm()));
  }
  CHECK(weak_count >= 8);
}
