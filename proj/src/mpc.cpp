#include "clothfold/mpc.hpp"

#include <cmath>
#include <sstream>

namespace clothfold {

OcpBuilder::OcpBuilder(const KoopmanModel& model, const Vec& phi_target,
                       const OcpConfig& config)
    : model_(&model), config_(config) {
  const int t_hor = config_.horizon;
  if (t_hor < 1) throw std::invalid_argument("OcpBuilder: horizon must be >= 1");
  if (config_.q_prime < 0.0 || config_.r_weight <= 0.0)
    throw std::invalid_argument("OcpBuilder: weights must satisfy q' >= 0, r > 0");
  const ControlConstraintSet& cs = config_.constraints;
  if (!(cs.s > 0.0)) throw std::invalid_argument("OcpBuilder: slew bound s must be positive");
  if (!std::isfinite(cs.y_min) || !std::isfinite(cs.h_min))
    throw std::invalid_argument("OcpBuilder: y_min / h_min must be set");
  for (int c = 0; c < 3; ++c) {
    const double lo = std::max(cs.w_lower[c], cs.w_lower[c + 3]);
    const double hi = std::min(cs.v_upper[c], cs.v_upper[c + 3]);
    if (lo > 0.0 || hi < 0.0 || lo > hi)
      throw std::invalid_argument("OcpBuilder: box bounds must satisfy w < 0 < v");
  }

  z_target_ = lift(model, phi_target);
  const int m = model.lifted_dim();
  b3_ = model.b_matrix.leftCols(3) + model.b_matrix.rightCols(3);
  q_cost_ = config_.q_prime * (model.recon_matrix.transpose() * model.recon_matrix);

  // Controls-to-lifted-states map: block row t holds A^{t-1-i} B3 at column i.
  const int n_var = 3 * (t_hor + 1);
  Mat powers(m, 3 * t_hor);  // A^s B3 for s = 0..T-1
  powers.leftCols(3) = b3_;
  for (int s = 1; s < t_hor; ++s)
    powers.middleCols(3 * s, 3) = model.a_matrix * powers.middleCols(3 * (s - 1), 3);

  Mat g = Mat::Zero((t_hor + 1) * m, n_var);
  for (int t = 1; t <= t_hor; ++t)
    for (int i = 0; i < t; ++i)
      g.block(t * m, 3 * i, m, 3) = powers.middleCols(3 * (t - 1 - i), 3);

  Mat qg(g.rows(), n_var);
  for (int t = 0; t <= t_hor; ++t)
    qg.middleRows(t * m, m) = q_cost_ * g.middleRows(t * m, m);

  hessian_ = 2.0 * (g.transpose() * qg);
  hessian_.diagonal().array() += 4.0 * config_.r_weight;
  hessian_ = 0.5 * (hessian_ + hessian_.transpose());  // exact symmetry

  // Fixed inequality rows: floors (4 per t), slew (6 per t), box (6 per t).
  const int n_rows = 16 * (t_hor + 1);
  ineq_ = Mat::Zero(n_rows, n_var);
  int row = 0;
  for (int t = 0; t <= t_hor; ++t) {
    for (int i = 0; i <= t; ++i) {
      ineq_(row + 0, 3 * i + 1) = 1.0;  // corner y prefix
      ineq_(row + 1, 3 * i + 1) = 1.0;  // neighbor y prefix
      ineq_(row + 2, 3 * i + 2) = 1.0;  // corner z prefix
      ineq_(row + 3, 3 * i + 2) = 1.0;  // neighbor z prefix
    }
    row += 4;
  }
  for (int t = 0; t <= t_hor; ++t) {
    for (int c = 0; c < 3; ++c) {
      ineq_(row + c, 3 * t + c) = 1.0;
      ineq_(row + 3 + c, 3 * t + c) = -1.0;
      if (t > 0) {
        ineq_(row + c, 3 * (t - 1) + c) = -1.0;
        ineq_(row + 3 + c, 3 * (t - 1) + c) = 1.0;
      }
    }
    row += 6;
  }
  for (int t = 0; t <= t_hor; ++t) {
    for (int c = 0; c < 3; ++c) {
      ineq_(row + c, 3 * t + c) = 1.0;
      ineq_(row + 3 + c, 3 * t + c) = -1.0;
    }
    row += 6;
  }
}

qp::QpProblem OcpBuilder::build(const Vec& phi_now, const Vec6& u_prev,
                                const Vec6& u_prev2) const {
  const int t_hor = config_.horizon;
  const int m = model_->lifted_dim();
  const int n_var = 3 * (t_hor + 1);

  // Linear term via the adjoint recursion over the free response.
  Vec z = lift(*model_, phi_now);
  Mat y_terms(m, t_hor + 1);  // Q (A^t z0 - z_r)
  y_terms.col(0) = q_cost_ * (z - z_target_);
  for (int t = 1; t <= t_hor; ++t) {
    z = model_->a_matrix * z;
    y_terms.col(t) = q_cost_ * (z - z_target_);
  }
  Vec f = Vec::Zero(n_var);
  Vec adjoint = y_terms.col(t_hor);
  for (int j = t_hor - 1; j >= 0; --j) {
    f.segment(3 * j, 3) = -2.0 * (b3_.transpose() * adjoint);
    adjoint = y_terms.col(j) + model_->a_matrix.transpose() * adjoint;
  }

  const ControlConstraintSet& cs = config_.constraints;
  Vec rhs = Vec::Zero(16 * (t_hor + 1));
  int row = 0;
  for (int t = 0; t <= t_hor; ++t) {
    rhs[row + 0] = cs.y_min - u_prev[1];
    rhs[row + 1] = cs.y_min - u_prev[4];
    rhs[row + 2] = cs.h_min - u_prev[2];
    rhs[row + 3] = cs.h_min - u_prev[5];
    row += 4;
  }
  const Vec3 du_prev = (u_prev - u_prev2).head<3>();
  for (int t = 0; t <= t_hor; ++t) {
    for (int c = 0; c < 3; ++c) {
      rhs[row + c] = t == 0 ? du_prev[c] - cs.s : -cs.s;
      rhs[row + 3 + c] = t == 0 ? -du_prev[c] - cs.s : -cs.s;
    }
    row += 6;
  }
  for (int t = 0; t <= t_hor; ++t) {
    for (int c = 0; c < 3; ++c) {
      rhs[row + c] = std::max(cs.w_lower[c], cs.w_lower[c + 3]);
      rhs[row + 3 + c] = -std::min(cs.v_upper[c], cs.v_upper[c + 3]);
    }
    row += 6;
  }

  qp::QpProblem problem;
  problem.p_matrix = hessian_;
  problem.f_vector = std::move(f);
  problem.eq_matrix = Mat::Zero(0, n_var);
  problem.eq_rhs = Vec::Zero(0);
  problem.ineq_matrix = ineq_;
  problem.ineq_rhs = std::move(rhs);
  return problem;
}

std::vector<Vec6> OcpBuilder::expand(const Vec& w_stacked) const {
  const int t_hor = config_.horizon;
  if (w_stacked.size() != 3 * (t_hor + 1))
    throw std::invalid_argument("OcpBuilder::expand: size mismatch");
  std::vector<Vec6> plan(t_hor + 1);
  for (int t = 0; t <= t_hor; ++t) {
    Vec6 du;
    du.head<3>() = w_stacked.segment(3 * t, 3);
    du.tail<3>() = w_stacked.segment(3 * t, 3);
    plan[t] = du;
  }
  return plan;
}

qp::QpProblem build_ocp(const KoopmanModel& model, const Vec& phi_now, const Vec& phi_target,
                        const Vec6& u_prev, const Vec6& u_prev2, const OcpConfig& config) {
  return OcpBuilder(model, phi_target, config).build(phi_now, u_prev, u_prev2);
}

std::vector<Vec6> solve_ocp(const qp::QpProblem& problem, const OcpBuilder& builder,
                            qp::QpSolution* diagnostics) {
  const qp::QpOptions opts{builder.config().qp_tol, builder.config().qp_max_iter};
  qp::QpSolution sol = qp::solve(problem, opts);
  if (diagnostics) *diagnostics = sol;
  if (sol.status != qp::QpStatus::Solved) {
    std::ostringstream os;
    os << "solve_ocp: QP "
       << (sol.status == qp::QpStatus::Infeasible ? "infeasible" : "hit iteration cap");
    throw std::runtime_error(os.str());
  }
  return builder.expand(sol.q_star);
}

MpcResult mpc_loop(Simulator& som, const KoopmanModel& model, const Vec& phi_target,
                   OcpConfig config, int total_steps, int settle_steps) {
  if (!som.has_grasp())
    throw std::invalid_argument("mpc_loop: simulator needs a grasp");
  if (settle_steps < 0 || total_steps < settle_steps)
    throw std::invalid_argument("mpc_loop: need 0 <= settle_steps <= total_steps");

  MpcResult result;
  result.settle_steps = settle_steps;
  result.state_trajectory.reserve(total_steps + 1);
  result.state_trajectory.push_back(som.state());

  for (int i = 0; i < settle_steps; ++i) {
    result.state_trajectory.push_back(som.step(Vec6::Zero()));
    result.all_controls.push_back(Vec6::Zero());
  }

  const Vec6 u0 = som.prescribed_positions();
  if (std::isnan(config.constraints.y_min)) config.constraints.y_min = u0[1];
  if (std::isnan(config.constraints.h_min)) config.constraints.h_min = std::min(u0[2], u0[5]);
  result.applied_constraints = config.constraints;
  result.initial_positions = u0;

  OcpBuilder builder(model, phi_target, config);
  Vec6 u_prev = u0, u_prev2 = u0;

  const int mpc_steps = total_steps - settle_steps;
  result.completed = true;
  for (int kappa = 0; kappa < mpc_steps; ++kappa) {
    qp::QpProblem problem = builder.build(som.state().phi, u_prev, u_prev2);
    qp::QpSolution sol = qp::solve(problem, {config.qp_tol, config.qp_max_iter});

    MpcStepDiagnostics diag;
    diag.qp_iterations = sol.iterations;
    diag.status = sol.status;
    if (sol.status != qp::QpStatus::Solved) {
      result.completed = false;
      result.failure_step = kappa;
      result.failure_reason = sol.status == qp::QpStatus::Infeasible
                                  ? "OCP infeasible"
                                  : "OCP hit iteration cap";
      result.diagnostics.push_back(diag);
      break;
    }
    diag.objective = 0.5 * sol.q_star.dot(problem.p_matrix * sol.q_star) -
                     sol.q_star.dot(problem.f_vector);
    diag.kkt = qp::verify_kkt(problem, sol, config.qp_tol * 10.0);

    const std::vector<Vec6> plan = builder.expand(sol.q_star);
    const Vec6 du = plan.front();
    try {
      result.state_trajectory.push_back(som.step(du));
    } catch (const StepFailure& failure) {
      result.completed = false;
      result.failure_step = kappa;
      result.failure_reason = failure.what();
      result.diagnostics.push_back(diag);
      break;
    }
    result.all_controls.push_back(du);
    result.executed_controls.push_back(du);
    result.planned_sequences.push_back(plan);
    result.diagnostics.push_back(diag);

    u_prev2 = u_prev;
    u_prev += du;
  }
  return result;
}

double ComplianceReport::worst() const {
  return std::max({floor_violation, smoothness_violation, orientation_violation,
                   box_violation});
}

ComplianceReport verify_mpc_constraints(const MpcResult& result) {
  ComplianceReport report;
  const ControlConstraintSet& cs = result.applied_constraints;
  Vec6 cum = result.initial_positions;
  Vec6 prev_du = Vec6::Zero();  // history bootstrap: zero prior velocity
  for (const Vec6& du : result.executed_controls) {
    cum += du;
    report.floor_violation = std::max({report.floor_violation, cs.y_min - cum[1],
                                       cs.y_min - cum[4], cs.h_min - cum[2],
                                       cs.h_min - cum[5]});
    report.smoothness_violation =
        std::max(report.smoothness_violation,
                 (du - prev_du).cwiseAbs().maxCoeff() - cs.s);
    report.orientation_violation = std::max(
        report.orientation_violation,
        (du.head<3>() - du.tail<3>()).cwiseAbs().maxCoeff());
    report.box_violation =
        std::max({report.box_violation, (cs.w_lower - du).maxCoeff(),
                  (du - cs.v_upper).maxCoeff()});
    prev_du = du;
  }
  report.floor_violation = std::max(report.floor_violation, 0.0);
  report.smoothness_violation = std::max(report.smoothness_violation, 0.0);
  report.box_violation = std::max(report.box_violation, 0.0);
  return report;
}

}  // namespace clothfold
