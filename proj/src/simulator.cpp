#include "clothfold/simulator.hpp"

#include <cmath>
#include <sstream>

#include "clothfold/qp.hpp"

namespace clothfold {

GraspSpec make_corner_grasp(const ClothMesh& mesh) {
  GraspSpec grasp;
  grasp.node_indices = {mesh.node_index(0, 0), mesh.node_index(0, 1)};
  const int n = mesh.node_count();
  grasp.prescribed_positions = {node_position(mesh.rest_positions, grasp.node_indices[0], n),
                                node_position(mesh.rest_positions, grasp.node_indices[1], n)};
  return grasp;
}

Simulator::Simulator(ClothMesh mesh, ClothParams params, SimOptions opts,
                     std::optional<std::array<int, 2>> prescribed_nodes)
    : mesh_(std::move(mesh)),
      params_(params),
      opts_(opts),
      ops_(build_operators(mesh_)),
      prescribed_nodes_(prescribed_nodes) {
  params_.validate();
  if (opts_.dt <= 0.0) throw std::invalid_argument("Simulator: dt must be positive");
  if (prescribed_nodes_) {
    const auto [a, b] = *prescribed_nodes_;
    const int n = mesh_.node_count();
    if (a < 0 || b < 0 || a >= n || b >= n || a == b)
      throw std::invalid_argument("Simulator: invalid prescribed node pair");
  }

  const double dt = opts_.dt;
  Mat system = (dt * dt * params_.kappa) * ops_.stiffness;
  system.diagonal() += (params_.rho + dt * params_.alpha_damp) * ops_.mass;
  implicit_system_.compute(system);
  if (implicit_system_.info() != Eigen::Success)
    throw std::invalid_argument("Simulator: implicit system is not positive definite");

  normal_impulse_ = Vec::Zero(mesh_.node_count());
  reset(rest_state());
}

Simulator Simulator::with_grasp(ClothMesh mesh, ClothParams params, SimOptions opts,
                                const GraspSpec& grasp) {
  const auto [a, b] = grasp.node_indices;
  const int cols = mesh.cols, rows = mesh.rows;
  auto on_boundary = [&](int k) {
    const int r = k / cols, c = k % cols;
    return r == 0 || c == 0 || r == rows - 1 || c == cols - 1;
  };
  const int dr = std::abs(a / cols - b / cols), dc = std::abs(a % cols - b % cols);
  if (dr + dc != 1 || !on_boundary(a) || !on_boundary(b))
    throw std::invalid_argument("GraspSpec: nodes must be boundary-adjacent");

  Simulator sim(std::move(mesh), params, opts, grasp.node_indices);
  sim.prescribed_targets_ = grasp.prescribed_positions;
  return sim;
}

ClothState Simulator::rest_state() const {
  ClothState s;
  s.phi = mesh_.rest_positions;
  s.phi_dot = Vec::Zero(mesh_.dof());
  s.time = 0.0;
  return s;
}

void Simulator::reset(const ClothState& state) {
  if (state.phi.size() != mesh_.dof() || state.phi_dot.size() != mesh_.dof())
    throw std::invalid_argument("Simulator::reset: state size mismatch");
  state_ = state;
  normal_impulse_.setZero();
  if (prescribed_nodes_) {
    const int n = mesh_.node_count();
    prescribed_targets_ = {node_position(state_.phi, (*prescribed_nodes_)[0], n),
                           node_position(state_.phi, (*prescribed_nodes_)[1], n)};
  }
}

Vec6 Simulator::prescribed_positions() const {
  Vec6 out;
  out << prescribed_targets_[0], prescribed_targets_[1];
  return out;
}

Vec Simulator::unconstrained_step(const ClothState& state) const {
  const int n = mesh_.node_count();
  const double dt = opts_.dt;
  Vec v_plus(3 * n);
  for (int c = 0; c < 3; ++c) {
    Vec rhs = params_.rho * ops_.mass.cwiseProduct(state.phi_dot.segment(c * n, n)) -
              dt * params_.kappa * (ops_.stiffness * state.phi.segment(c * n, n));
    if (c == 2) rhs -= dt * params_.delta * params_.gravity * ops_.mass;
    v_plus.segment(c * n, n) = implicit_system_.solve(rhs);
  }
  return state.phi + dt * v_plus;
}

void Simulator::assemble_grasp_rows(const Vec& phi, Mat& a, Vec& b) const {
  const int n = mesh_.node_count();
  a = Mat::Zero(prescribed_nodes_ ? 6 : 0, 3 * n);
  b = Vec::Zero(prescribed_nodes_ ? 6 : 0);
  if (!prescribed_nodes_) return;
  for (int g = 0; g < 2; ++g) {
    const int node = (*prescribed_nodes_)[g];
    for (int c = 0; c < 3; ++c) {
      a(3 * g + c, c * n + node) = 1.0;
      b[3 * g + c] = prescribed_targets_[g][c] - phi[c * n + node];
    }
  }
}

Vec Simulator::friction_impulses(const Vec& phi_dot_iterate, const ContactSet& active) const {
  const int n = mesh_.node_count();
  Vec out = Vec::Zero(3 * n);
  if (params_.mu <= 0.0) return out;
  for (const ContactRowInfo& row : active.rows) {
    if (row.kind != ContactKind::Table) continue;
    const int k = row.node_a;
    const double vx = phi_dot_iterate[k], vy = phi_dot_iterate[n + k];
    const double speed = std::hypot(vx, vy);
    if (speed < 1e-12) continue;
    const double cap = ops_.mass[k] * speed;  // full-stop impulse
    const double magnitude = std::min(params_.mu * normal_impulse_[k], cap);
    out[k] -= magnitude * vx / speed;
    out[n + k] -= magnitude * vy / speed;
  }
  return out;
}

double Simulator::constraint_violation(const Vec& phi) const {
  const auto inext = inextensibility(mesh_, phi);
  double viol = inext.values.size() > 0 ? inext.values.cwiseAbs().maxCoeff() : 0.0;
  const auto cs = contacts(mesh_, phi, opts_.contact);
  viol = std::max(viol, -cs.min_residual);
  if (prescribed_nodes_) {
    const int n = mesh_.node_count();
    for (int g = 0; g < 2; ++g) {
      const int node = (*prescribed_nodes_)[g];
      for (int c = 0; c < 3; ++c)
        viol = std::max(viol, std::abs(prescribed_targets_[g][c] - phi[c * n + node]));
    }
  }
  return std::max(viol, 0.0);
}

ClothState Simulator::project_step(const Vec& phi0, const ClothState& prev_state) {
  const int n = mesh_.node_count();
  const int dof = 3 * n;
  const double dt = opts_.dt;

  Vec phi = phi0;
  Vec new_normal_impulse = Vec::Zero(n);
  bool solved_any_qp = false;
  double viol = 0.0;

  Mat mass3 = Mat::Zero(dof, dof);
  for (int c = 0; c < 3; ++c)
    mass3.diagonal().segment(c * n, n) = ops_.mass;

  for (int outer = 0;; ++outer) {
    const auto inext = inextensibility(mesh_, phi);
    auto cs = contacts(mesh_, phi, opts_.contact);

    viol = inext.values.size() > 0 ? inext.values.cwiseAbs().maxCoeff() : 0.0;
    viol = std::max(viol, std::max(0.0, -cs.min_residual));
    Mat grasp_jac;
    Vec grasp_rhs;
    assemble_grasp_rows(phi, grasp_jac, grasp_rhs);
    if (grasp_rhs.size() > 0)
      viol = std::max(viol, grasp_rhs.cwiseAbs().maxCoeff());

    if (viol <= opts_.projection_tol) break;
    if (outer >= opts_.max_outer) {
      std::ostringstream os;
      os << "project_step: no convergence after " << opts_.max_outer
         << " iterations (violation " << viol << ")";
      throw StepFailure(os.str(), prev_state.time, viol);
    }

    const Vec phi_dot_iter = (phi - prev_state.phi) / dt;

    qp::QpProblem problem;
    problem.p_matrix = mass3;
    problem.f_vector = mass3 * (phi0 - phi) + dt * friction_impulses(phi_dot_iter, cs);

    const int n_c = static_cast<int>(inext.values.size());
    const int n_g = static_cast<int>(grasp_rhs.size());
    problem.eq_matrix = Mat::Zero(n_c + n_g, dof);
    problem.eq_matrix.topRows(n_c) = inext.jacobian;
    if (n_g > 0) problem.eq_matrix.bottomRows(n_g) = grasp_jac;
    problem.eq_rhs = Vec::Zero(n_c + n_g);
    problem.eq_rhs.head(n_c) = -inext.values;
    if (n_g > 0) problem.eq_rhs.tail(n_g) = grasp_rhs;

    problem.ineq_matrix = cs.jacobian;
    problem.ineq_rhs = -cs.values;

    const qp::QpOptions qp_opts{opts_.qp_tol, opts_.qp_max_iter};
    qp::QpSolution sol = qp::solve(problem, qp_opts);

    if (sol.status != qp::QpStatus::Solved) {
      // Relaxation ladder: layer contacts are the usual culprit for an
      // inconsistent linearization; drop them, then slacken the contacts.
      auto cs_table = contacts(mesh_, phi, [&] {
        ContactOptions o = opts_.contact;
        o.layer_contacts = false;
        return o;
      }());
      problem.ineq_matrix = cs_table.jacobian;
      problem.ineq_rhs = -cs_table.values;
      sol = qp::solve(problem, qp_opts);
      for (double slack = 1e-6; sol.status != qp::QpStatus::Solved && slack <= 1e-2;
           slack *= 100.0) {
        problem.ineq_rhs.array() -= slack;
        sol = qp::solve(problem, qp_opts);
      }
      if (sol.status != qp::QpStatus::Solved) {
        std::ostringstream os;
        os << "project_step: QP "
           << (sol.status == qp::QpStatus::Infeasible ? "infeasible" : "did not converge")
           << " at t=" << prev_state.time << " (outer " << outer << ", violation " << viol
           << ")";
        throw StepFailure(os.str(), prev_state.time, viol);
      }
      cs = std::move(cs_table);
    }

    phi += sol.q_star;
    solved_any_qp = true;

    new_normal_impulse.setZero();
    for (int r = 0; r < static_cast<int>(cs.rows.size()); ++r)
      if (cs.rows[r].kind == ContactKind::Table)
        new_normal_impulse[cs.rows[r].node_a] += sol.ineq_multipliers[r] / dt;
  }

  if (solved_any_qp)
    normal_impulse_ = new_normal_impulse;
  else
    normal_impulse_.setZero();

  ClothState next;
  next.phi = phi;
  next.phi_dot = (phi - prev_state.phi) / dt;
  next.time = prev_state.time + dt;
  return next;
}

ClothState Simulator::step(const Vec6& du) {
  if (!du.allFinite()) throw std::invalid_argument("Simulator::step: control not finite");
  if (prescribed_nodes_) {
    prescribed_targets_[0] += du.head<3>();
    prescribed_targets_[1] += du.tail<3>();
  }
  const Vec phi0 = unconstrained_step(state_);
  state_ = project_step(phi0, state_);
  return state_;
}

std::vector<ClothState> Simulator::rollout(const std::vector<Vec6>& controls) {
  if (controls.empty()) throw std::invalid_argument("Simulator::rollout: empty controls");
  std::vector<ClothState> states;
  states.reserve(controls.size() + 1);
  states.push_back(state_);
  for (const Vec6& du : controls) states.push_back(step(du));
  return states;
}

Simulator::RolloutResult Simulator::try_rollout(const std::vector<Vec6>& controls) {
  RolloutResult result;
  result.states.reserve(controls.size() + 1);
  result.states.push_back(state_);
  for (int i = 0; i < static_cast<int>(controls.size()); ++i) {
    try {
      result.states.push_back(step(controls[i]));
      result.controls.push_back(controls[i]);
    } catch (const StepFailure& failure) {
      result.completed = false;
      result.failure_index = i;
      result.failure_reason = failure.what();
      return result;
    }
  }
  return result;
}

ClothState Simulator::settle(int n_steps) {
  for (int i = 0; i < n_steps; ++i) step(Vec6::Zero());
  return state_;
}

double Simulator::kinetic_energy(const ClothState& state) const {
  const int n = mesh_.node_count();
  double e = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto v = state.phi_dot.segment(c * n, n);
    e += v.cwiseProduct(ops_.mass.cwiseProduct(v)).sum();
  }
  return 0.5 * params_.rho * e;
}

double Simulator::mechanical_energy(const ClothState& state) const {
  const int n = mesh_.node_count();
  double bending = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto x = state.phi.segment(c * n, n);
    bending += x.dot(ops_.stiffness * x);
  }
  const double gravitational =
      params_.delta * params_.gravity *
      ops_.mass.dot(state.phi.segment(2 * n, n) -
                    Vec::Constant(n, opts_.contact.table_z));
  return kinetic_energy(state) + 0.5 * params_.kappa * bending + gravitational;
}

double Simulator::max_edge_strain(const Vec& phi) const {
  const int n = mesh_.node_count();
  double worst = 0.0;
  for (const Edge& e : mesh_.edges) {
    const double len = (node_position(phi, e.a, n) - node_position(phi, e.b, n)).norm();
    worst = std::max(worst, std::abs(len / e.rest_length - 1.0));
  }
  return worst;
}

}  // namespace clothfold
