#pragma once

#include <limits>
#include <string>
#include <vector>

#include "clothfold/koopman.hpp"
#include "clothfold/qp.hpp"
#include "clothfold/simulator.hpp"
#include "clothfold/types.hpp"

namespace clothfold {

/// Control-set shaping for the OCP.
///   (i)  cumulative floors: controlled points may not retreat behind y_min
///        nor drop below h_min (x unconstrained),
///   (ii) per-step slew bound s on consecutive control differences,
///   (iii) both controlled points move by the same displacement,
///   (iv) box bounds w <= du_t <= v.
struct ControlConstraintSet {
  double y_min = std::numeric_limits<double>::quiet_NaN();  // filled from the settled pose when NaN
  double h_min = std::numeric_limits<double>::quiet_NaN();
  double s = 5e-3;
  Vec6 w_lower = Vec6::Constant(-0.02);
  Vec6 v_upper = Vec6::Constant(0.02);
};

struct OcpConfig {
  int horizon = 50;        // T; the OCP spans t = 0..T
  double q_prime = 1.0;    // state weight, expands to Q' = q_prime I on 3N
  double r_weight = 500.0; // control weight per R^6 step
  ControlConstraintSet constraints;
  double qp_tol = 1e-8;
  int qp_max_iter = 4000;
};

/// Condenses the lifted linear dynamics into a dense QP over the stacked
/// per-step shared displacements w_t in R^3 (constraint (iii) is eliminated
/// by this variable reduction; controls expand to du = [w; w]).
/// The Hessian and constraint matrix are fixed per (model, target, config);
/// only the linear term and bounds move with the plant state.
class OcpBuilder {
 public:
  OcpBuilder(const KoopmanModel& model, const Vec& phi_target, const OcpConfig& config);

  /// Assembles the QP at the current state. u_prev/u_prev2 are the last two
  /// absolute positions of the controlled points (used for the slew
  /// boundary term and the cumulative floors).
  qp::QpProblem build(const Vec& phi_now, const Vec6& u_prev, const Vec6& u_prev2) const;

  /// Expands a stacked solution to per-step R^6 controls (T+1 of them).
  std::vector<Vec6> expand(const Vec& w_stacked) const;

  int horizon() const { return config_.horizon; }
  const OcpConfig& config() const { return config_; }
  const Mat& hessian() const { return hessian_; }

 private:
  const KoopmanModel* model_;
  OcpConfig config_;
  Vec z_target_;
  Mat b3_;         // m x 3 reduced input map
  Mat hessian_;    // 3(T+1) x 3(T+1)
  Mat ineq_;       // fixed inequality rows
  Mat q_cost_;     // m x m lifted state cost recon' Q' recon
};

qp::QpProblem build_ocp(const KoopmanModel& model, const Vec& phi_now, const Vec& phi_target,
                        const Vec6& u_prev, const Vec6& u_prev2, const OcpConfig& config);

/// Solves an OCP QP and expands the plan; throws std::runtime_error when the
/// solver fails.
std::vector<Vec6> solve_ocp(const qp::QpProblem& problem, const OcpBuilder& builder,
                            qp::QpSolution* diagnostics = nullptr);

struct MpcStepDiagnostics {
  int qp_iterations = 0;
  qp::QpStatus status = qp::QpStatus::Solved;
  double objective = 0.0;
  qp::KktReport kkt;
};

struct MpcResult {
  std::vector<ClothState> state_trajectory;       // total_steps + 1 states (settle included)
  std::vector<Vec6> all_controls;                 // total_steps controls (zeros while settling)
  std::vector<Vec6> executed_controls;            // MPC phase only
  std::vector<std::vector<Vec6>> planned_sequences;
  std::vector<MpcStepDiagnostics> diagnostics;
  ControlConstraintSet applied_constraints;       // with y_min / h_min resolved
  Vec6 initial_positions = Vec6::Zero();          // controlled points after settling
  int settle_steps = 0;
  bool completed = false;
  int failure_step = -1;
  std::string failure_reason;
};

/// Receding-horizon loop against the simulator: settle, then repeatedly
/// build the OCP at the current plant state, solve it, and execute only the
/// first planned control.
MpcResult mpc_loop(Simulator& som, const KoopmanModel& model, const Vec& phi_target,
                   OcpConfig config, int total_steps, int settle_steps);

struct ComplianceReport {
  double floor_violation = 0.0;
  double smoothness_violation = 0.0;
  double orientation_violation = 0.0;
  double box_violation = 0.0;
  double worst() const;
  bool ok(double tol) const { return worst() <= tol; }
};

/// Post-hoc check of the four constraint families on the executed controls,
/// including the prefix-sum floors.
ComplianceReport verify_mpc_constraints(const MpcResult& result);

}  // namespace clothfold
