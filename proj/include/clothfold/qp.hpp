#pragma once

#include <string>

#include "clothfold/types.hpp"

namespace clothfold::qp {

/// Convex quadratic program
///   min  1/2 q' P q - q' f
///   s.t. A_eq q  = b_eq
///        A_in q >= b_in
/// P must be symmetric positive definite on the nullspace of A_eq.
struct QpProblem {
  Mat p_matrix;
  Vec f_vector;
  Mat eq_matrix;   // m_e x n (may be 0 x n)
  Vec eq_rhs;
  Mat ineq_matrix; // m_i x n (may be 0 x n)
  Vec ineq_rhs;

  int dim() const { return static_cast<int>(f_vector.size()); }
  void check_dimensions() const;  // throws std::invalid_argument
};

enum class QpStatus { Solved, MaxIterations, Infeasible };

struct QpSolution {
  Vec q_star;
  Vec eq_multipliers;    // lambda, stationarity P q - f + A_eq' lambda - A_in' mu = 0
  Vec ineq_multipliers;  // mu >= 0
  QpStatus status = QpStatus::Infeasible;
  int iterations = 0;
  int dropped_equality_rows = 0;  // redundant rows removed during reduction
};

struct QpOptions {
  double tol = 1e-8;
  int max_iter = 200;
};

QpSolution solve(const QpProblem& problem, const QpOptions& opts = {});

/// KKT residual report for a candidate solution.
struct KktReport {
  double eq_residual = 0.0;        // ||A_eq q - b_eq||_inf
  double ineq_violation = 0.0;     // max(0, max_i (b_in - A_in q)_i)
  double dual_violation = 0.0;     // max(0, -min_i mu_i)
  double stationarity = 0.0;       // ||P q - f + A_eq' l - A_in' mu||_inf
  double complementarity = 0.0;    // max_i |mu_i (A_in q - b_in)_i|
  bool ok = false;

  double worst() const;
  std::string to_string() const;
};

KktReport verify_kkt(const QpProblem& problem, const QpSolution& solution, double tol);

}  // namespace clothfold::qp
