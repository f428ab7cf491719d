#pragma once

#include <span>

#include "clothfold/mesh.hpp"
#include "clothfold/simulator.hpp"
#include "clothfold/types.hpp"

namespace clothfold {

struct AlignmentResult {
  double mean_distance = 0.0;
  Mat3 rotation = Mat3::Identity();
  bool degenerate = false;  // covariance too small, identity fallback used
};

/// Mean per-node distance after centroid translation and the optimal
/// (determinant-corrected) SVD rotation applied to the target cloud.
AlignmentResult align_meshes(const Vec& phi_final, const Vec& phi_target);

double mesh_error(const Vec& phi_final, const Vec& phi_target);

/// Cumulative quadratic cost over the first t_max steps:
///   sum_k q' ||phi_k - phi_ref||^2 + r ||du_k||^2.
/// State terms run k = 0..t_max; the control term at k = t_max is included
/// when available.
double running_cost(std::span<const ClothState> trajectory, std::span<const Vec6> controls,
                    const Vec& phi_target, double q_prime, double r_weight, int t_max);

/// Projected-footprint area ratio: occupied xy cells of the pose divided by
/// occupied cells of the flat rest pose, on a lattice of cell_scale times
/// the mesh cell size.
double folding_ratio(const Vec& phi, const ClothMesh& mesh, double cell_scale = 0.25);

/// |achieved - target| / target.
double fold_error(double ratio_achieved, double ratio_target);

struct FoldMetrics {
  double mesh_error = 0.0;
  double running_cost = 0.0;
  double fold_ratio = 0.0;
  double fold_ratio_target = 0.0;
  double fold_error = 0.0;
};

}  // namespace clothfold
