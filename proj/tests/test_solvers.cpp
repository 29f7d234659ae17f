#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

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

}  // namespace

TEST_CASE("worked example 1: zero solution at lambda = 2/sqrt(5)") {
  const ProblemInstance p = example1();
  const PrimalDualPair pair = solve_srlasso(p, {});
  CHECK(pair.converged);
  CHECK(pair.x.lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK(pair.primal_value == doctest::Approx(std::sqrt(5.0)).epsilon(1e-9));
  const Vector y_expected = p.b / p.b.norm();
  CHECK((pair.y - y_expected).norm() <= 1e-6);
  CHECK(std::abs(pair.gap) <= 1e-9 * pair.primal_value);
}

TEST_CASE("worked example 2: zero solution at lambda = sqrt(2)") {
  const ProblemInstance p = example2();
  const PrimalDualPair pair = solve_srlasso(p, {});
  CHECK(pair.converged);
  CHECK(pair.x.lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK((pair.y - p.b / p.b.norm()).norm() <= 1e-6);
}

TEST_CASE("zero right-hand side") {
  ProblemInstance p = example1();
  p.b.setZero();
  const PrimalDualPair pair = solve_srlasso(p, {});
  CHECK(pair.converged);
  CHECK(pair.x.isZero());
  CHECK(pair.primal_value == 0.0);
}

TEST_CASE("dual feasibility and gap certificate invariants") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 15; ++trial) {
    const Index m = 3 + static_cast<Index>(rng() % 10);
    const Index n = 2 + static_cast<Index>(rng() % 15);
    const double lambda = 0.05 + 2.0 * std::generate_canonical<double, 53>(rng);
    const ProblemInstance p = testutil::random_instance(rng, m, n, lambda);
    const PrimalDualPair pair = solve_srlasso(p, {});
    REQUIRE(pair.converged);
    CHECK(pair.y.norm() <= 1.0 + 1e-9);
    CHECK((p.A.transpose() * pair.y).lpNorm<Eigen::Infinity>() <=
          p.lambda * (1.0 + 1e-9));
    CHECK(std::abs(pair.gap) <=
          1e-9 * std::max(1.0, std::abs(pair.primal_value)));
    CHECK(pair.residual_norm ==
          doctest::Approx((p.b - p.A * pair.x).norm()).epsilon(1e-12));
    CHECK(pair.gap >= -1e-9 * std::max(1.0, pair.primal_value));
  }
}

TEST_CASE("soft-threshold sanity: zero is returned exactly") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    ProblemInstance p = testutil::random_instance(rng, 6, 9, 1.0);
    const double threshold =
        (p.A.transpose() * p.b).lpNorm<Eigen::Infinity>() / p.b.norm();
    p.lambda = threshold / (1.0 - 1e-9) + 1e-12;
    const PrimalDualPair pair = solve_srlasso(p, {});
    CHECK(pair.converged);
    CHECK(pair.x.isZero());
  }
}

TEST_CASE("residual invariance across random starts") {
  std::mt19937_64 rng(23);
  const ProblemInstance p = testutil::random_instance(rng, 8, 12, 0.4);
  Vector y_ref;
  for (int run = 0; run < 4; ++run) {
    SolverState start;
    start.x = testutil::random_vector(rng, 12, 2.0);
    Vector u = testutil::random_vector(rng, 8);
    start.u = u / std::max(1.0, u.norm());
    const PrimalDualPair pair = solve_srlasso(p, {}, &start);
    REQUIRE(pair.converged);
    REQUIRE(pair.residual_norm > residual_floor(p.b));
    const Vector ybar = pair.residual / pair.residual_norm;
    if (run == 0) {
      y_ref = ybar;
    } else {
      CHECK((ybar - y_ref).norm() <= 1e-6);
    }
  }
}

TEST_CASE("monotone behavior along a lambda grid") {
  std::mt19937_64 rng(31);
  const ProblemInstance base = testutil::random_instance(rng, 6, 10, 1.0);
  double prev_value = -1.0;
  double prev_l1 = std::numeric_limits<double>::infinity();
  for (double lambda : {0.05, 0.1, 0.3, 0.8, 1.5, 3.0}) {
    ProblemInstance p = base;
    p.lambda = lambda;
    const PrimalDualPair pair = solve_srlasso(p, {});
    REQUIRE(pair.converged);
    CHECK(pair.primal_value >= prev_value - 1e-8);
    CHECK(pair.x.lpNorm<1>() <= prev_l1 + 1e-8);
    prev_value = pair.primal_value;
    prev_l1 = pair.x.lpNorm<1>();
  }
}

TEST_CASE("scalar lasso is a soft threshold") {
  Matrix A(1, 1);
  A << 1.0;
  Vector b(1);
  b << 1.0;
  const ProblemInstance p{A, b, 0.25};
  SolverSettings st;
  st.gap_tol = 1e-13;  // gap scales like the squared distance here
  const PrimalDualPair pair = solve_lasso(p, st);
  CHECK(pair.converged);
  CHECK(pair.x(0) == doctest::Approx(0.75).epsilon(1e-5));
}

TEST_CASE("lasso returns zero above the critical lambda") {
  std::mt19937_64 rng(41);
  ProblemInstance p = testutil::random_instance(rng, 5, 8, 1.0);
  p.lambda = (p.A.transpose() * p.b).lpNorm<Eigen::Infinity>() * 1.000001;
  const PrimalDualPair pair = solve_lasso(p, {});
  CHECK(pair.converged);
  CHECK(pair.x.isZero());
}

TEST_CASE("lasso satisfies its optimality conditions") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 8; ++trial) {
    const ProblemInstance p =
        testutil::random_instance(rng, 10, 20, 0.2 + 0.1 * trial);
    const PrimalDualPair pair = solve_lasso(p, {});
    REQUIRE(pair.converged);
    const Vector corr = p.A.transpose() * (p.b - p.A * pair.x);
    CHECK(corr.lpNorm<Eigen::Infinity>() <= p.lambda * (1.0 + 1e-6));
    const double xtol = 1e-7 * std::max(1.0, pair.x.lpNorm<Eigen::Infinity>());
    for (Index i = 0; i < pair.x.size(); ++i) {
      if (std::abs(pair.x(i)) <= xtol) continue;
      const double want = p.lambda * (pair.x(i) > 0 ? 1.0 : -1.0);
      CHECK(std::abs(corr(i) - want) <= 1e-6 * std::max(1.0, p.lambda));
    }
  }
}

TEST_CASE("dual extraction") {
  const ProblemInstance p1 = example1();
  const Vector y1 = dual_from_primal(p1, Vector::Zero(3));
  CHECK(y1(0) == doctest::Approx(1.0 / std::sqrt(5.0)));
  CHECK(y1(1) == doctest::Approx(2.0 / std::sqrt(5.0)));

  const ProblemInstance p2 = example2();
  const Vector y2 = dual_from_primal(p2, Vector::Zero(3));
  CHECK(y2(0) == doctest::Approx(1.0 / std::sqrt(2.0)));

  // exact fit: x reproduces b
  Matrix A(2, 2);
  A << 1, 0, 0, 1;
  Vector b(2);
  b << 1, 1;
  const ProblemInstance p3{A, b, 1.0};
  CHECK_THROWS_AS(dual_from_primal(p3, b), ZeroResidualError);
}

TEST_CASE("duality gap values and infeasibility detection") {
  const ProblemInstance p = example1();
  const Vector x0 = Vector::Zero(3);
  CHECK(std::abs(duality_gap(p, x0, p.b / p.b.norm())) <= 1e-12);
  CHECK(duality_gap(p, x0, Vector::Zero(2)) ==
        doctest::Approx(p.b.norm()).epsilon(1e-12));
  CHECK_THROWS_AS(duality_gap(p, x0, Vector(2 * p.b / p.b.norm())),
                  DualInfeasibleError);
}

TEST_CASE("oracle reproduces the worked examples") {
  CHECK(brute_force_oracle(example1()).isZero(1e-10));
  CHECK(brute_force_oracle(example2()).isZero(1e-10));
}

TEST_CASE("oracle rejects large instances") {
  std::mt19937_64 rng(3);
  const ProblemInstance p = testutil::random_instance(rng, 4, 13, 1.0);
  CHECK_THROWS_AS(brute_force_oracle(p), TooLargeError);
}

TEST_CASE("oracle and solver agree on small random instances") {
  std::mt19937_64 rng(57);
  for (int trial = 0; trial < 25; ++trial) {
    const Index m = 2 + static_cast<Index>(rng() % 5);
    const Index n = 2 + static_cast<Index>(rng() % 5);
    const double lambda =
        std::pow(10.0, -1.3 + 2.0 * std::generate_canonical<double, 53>(rng));
    const ProblemInstance p = testutil::random_instance(rng, m, n, lambda);
    const Vector x_bf = brute_force_oracle(p);
    SolverSettings st;
    const PrimalDualPair pair = solve_srlasso(p, st);
    REQUIRE(pair.converged);
    const double f_bf = srlasso_objective(p, x_bf);
    const double f_cp = srlasso_objective(p, pair.x);
    CHECK(f_cp <= f_bf + 1e-7 * std::max(1.0, f_bf));
    CHECK(f_bf <= f_cp + 1e-7 * std::max(1.0, f_cp));
  }
}
