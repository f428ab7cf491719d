#pragma once

#include <vector>

#include "clothfold/mesh.hpp"
#include "clothfold/types.hpp"

namespace clothfold {

/// Inextensibility residuals and Jacobian. One squared-length constraint per
/// grid edge plus one per quad diagonal:
///   C_e(phi) = ||p_i - p_j||^2 - l_e^2
/// Rows are ordered edges first, then diagonals.
struct InextensibilityResult {
  Vec values;    // n_C, m^2
  Mat jacobian;  // n_C x 3N
};

InextensibilityResult inextensibility(const ClothMesh& mesh, const Vec& phi);

struct ContactOptions {
  double table_z = 0.0;
  double margin = 5e-3;      // residuals below this are emitted
  double thickness = 2e-3;   // required layer separation, m
  bool layer_contacts = true;
  // Candidate layer pairs must be non-adjacent and closer in xy than
  // xy_radius_factor times the cell diagonal.
  double xy_radius_factor = 0.5;
};

enum class ContactKind { Table, Layer };

struct ContactRowInfo {
  ContactKind kind;
  int node_a;      // table: the node; layer: the upper node
  int node_b = -1; // layer: the lower node
};

/// Unilateral contact residuals H >= 0 and Jacobian, restricted to rows
/// within the activation margin. `min_residual` is a lower bound over all
/// candidate constraints (emitted or not).
struct ContactSet {
  Vec values;    // n_H, m
  Mat jacobian;  // n_H x 3N
  std::vector<ContactRowInfo> rows;
  double min_residual = 0.0;
};

ContactSet contacts(const ClothMesh& mesh, const Vec& phi, const ContactOptions& opts);

inline ContactSet contacts(const ClothMesh& mesh, const Vec& phi, double table_z) {
  ContactOptions opts;
  opts.table_z = table_z;
  return contacts(mesh, phi, opts);
}

/// Bundle of both constraint families evaluated at one configuration.
struct ConstraintBlock {
  Vec c_values;
  Mat c_jacobian;
  Vec h_values;
  Mat h_jacobian;
};

ConstraintBlock evaluate_constraints(const ClothMesh& mesh, const Vec& phi,
                                     const ContactOptions& opts);

}  // namespace clothfold
