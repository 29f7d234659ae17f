#pragma once

#include "srl/linalg.hpp"

namespace srl {

/// One square-root LASSO / LASSO instance: min ||Ax-b|| + lambda ||x||_1
/// (or the squared-fidelity variant).
struct ProblemInstance {
  Matrix A;
  Vector b;
  double lambda = 0.0;

  Index rows() const { return A.rows(); }
  Index cols() const { return A.cols(); }
  void validate() const;
};

/// Below this the residual is treated as zero and the normalized dual
/// residual is undefined.
inline double residual_floor(const Vector& b) {
  return 1e-12 * std::max(1.0, b.norm());
}

struct SolverSettings {
  double gap_tol = 1e-9;
  long max_iter = 200000;
  double step_ratio = 1.0;  // primal/dual step balance

  void validate() const;
};

struct PrimalDualPair {
  Vector x;
  Vector y;         // dual certificate (SR: ||y|| <= 1; UC: the dual residual)
  Vector residual;  // b - A x
  double residual_norm = 0.0;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  long iterations = 0;
  bool converged = false;
};

enum class Program { SR, UC };

const char* program_name(Program p);

}  // namespace srl
