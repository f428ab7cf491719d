#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

#include "clothfold/constraints.hpp"
#include "clothfold/mesh.hpp"
#include "clothfold/operators.hpp"
#include "clothfold/params.hpp"
#include "clothfold/types.hpp"

namespace clothfold {

struct ClothState {
  Vec phi;      // 3N positions, m
  Vec phi_dot;  // 3N velocities, m/s
  double time = 0.0;
};

/// Vertical-gripper grasp: the corner node and the boundary node directly
/// adjacent to it, each with a prescribed target position.
struct GraspSpec {
  std::array<int, 2> node_indices{0, 1};
  std::array<Vec3, 2> prescribed_positions{Vec3::Zero(), Vec3::Zero()};
};

/// Grasp of corner (0,0) and its boundary neighbor (0,1), targets at rest.
GraspSpec make_corner_grasp(const ClothMesh& mesh);

struct SimOptions {
  double dt = 0.01;
  ContactOptions contact;
  double projection_tol = 1e-6;
  int max_outer = 10;
  double qp_tol = 1e-8;
  int qp_max_iter = 2000;
};

class StepFailure : public std::runtime_error {
 public:
  StepFailure(std::string what, double time, double constraint_violation)
      : std::runtime_error(std::move(what)),
        time(time),
        constraint_violation(constraint_violation) {}
  double time;
  double constraint_violation;
};

/// Constrained cloth plant. Advances the state with an implicit unconstrained
/// step followed by iterative QP projection onto the inextensibility, grasp
/// and contact constraints.
///
/// A simulator owns mutable per-step caches (contact-force memory for
/// friction), so instances are single-owner; run independent instances for
/// parallel rollouts.
class Simulator {
 public:
  Simulator(ClothMesh mesh, ClothParams params, SimOptions opts,
            std::optional<std::array<int, 2>> prescribed_nodes);

  static Simulator with_grasp(ClothMesh mesh, ClothParams params, SimOptions opts,
                              const GraspSpec& grasp);

  /// Resets to a state; prescribed targets snap to the grasped nodes'
  /// current positions and the friction memory clears.
  void reset(const ClothState& state);

  /// Flat rest state on the table.
  ClothState rest_state() const;

  const ClothState& state() const { return state_; }
  Vec6 prescribed_positions() const;
  bool has_grasp() const { return prescribed_nodes_.has_value(); }
  const ClothMesh& mesh() const { return mesh_; }
  const ClothOperators& operators() const { return ops_; }
  const ClothParams& params() const { return params_; }
  const SimOptions& options() const { return opts_; }

  /// One control step: displaces the prescribed targets by du (first three
  /// entries for the corner, last three for its neighbor), then integrates.
  /// Throws StepFailure when the projection cannot reach tolerance.
  ClothState step(const Vec6& du);

  /// Sequential steps; returns the trajectory including the initial state.
  /// On failure the partial trajectory is returned in `partial` of the
  /// exception-free variant below.
  std::vector<ClothState> rollout(const std::vector<Vec6>& controls);

  struct RolloutResult {
    std::vector<ClothState> states;
    std::vector<Vec6> controls;
    bool completed = true;
    int failure_index = -1;
    std::string failure_reason;
  };
  RolloutResult try_rollout(const std::vector<Vec6>& controls);

  /// n steps with zero control.
  ClothState settle(int n_steps);

  // --- stepping primitives, exposed for verification ---

  /// Implicit-Euler prediction ignoring every constraint.
  Vec unconstrained_step(const ClothState& state) const;

  /// Iterative QP projection of phi0 onto the constraint manifold.
  ClothState project_step(const Vec& phi0, const ClothState& prev_state);

  /// Tangential Coulomb impulses for nodes in active table contact, capped
  /// at the full-stop impulse. Opposes the iterate's tangential velocity.
  Vec friction_impulses(const Vec& phi_dot_iterate, const ContactSet& active) const;

  double kinetic_energy(const ClothState& state) const;
  /// Kinetic + bending + gravitational (virtual-mass weighted) energy.
  double mechanical_energy(const ClothState& state) const;

  /// Largest relative deviation of any edge length from rest.
  double max_edge_strain(const Vec& phi) const;

  /// max(|C|, grasp residual, max(0, -H)) at a configuration.
  double constraint_violation(const Vec& phi) const;

 private:
  void assemble_grasp_rows(const Vec& phi, Mat& a, Vec& b) const;

  ClothMesh mesh_;
  ClothParams params_;
  SimOptions opts_;
  ClothOperators ops_;
  Eigen::LLT<Mat> implicit_system_;  // (rho + dt alpha) M + dt^2 kappa K
  std::optional<std::array<int, 2>> prescribed_nodes_;
  std::array<Vec3, 2> prescribed_targets_{Vec3::Zero(), Vec3::Zero()};
  ClothState state_;
  Vec normal_impulse_;  // per node, previous step's table-contact estimate
};

}  // namespace clothfold
