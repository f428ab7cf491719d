#include "clothfold/constraints.hpp"

#include <cmath>
#include <limits>

namespace clothfold {

InextensibilityResult inextensibility(const ClothMesh& mesh, const Vec& phi) {
  const int n = mesh.node_count();
  const int n_c = static_cast<int>(mesh.edges.size() + mesh.diagonals.size());

  InextensibilityResult out;
  out.values = Vec::Zero(n_c);
  out.jacobian = Mat::Zero(n_c, 3 * n);

  auto fill_row = [&](int row, int a, int b, double rest_sq) {
    const Vec3 pa = node_position(phi, a, n);
    const Vec3 pb = node_position(phi, b, n);
    const Vec3 d = pa - pb;
    out.values[row] = d.squaredNorm() - rest_sq;
    for (int c = 0; c < 3; ++c) {
      out.jacobian(row, c * n + a) = 2.0 * d[c];
      out.jacobian(row, c * n + b) = -2.0 * d[c];
    }
  };

  int row = 0;
  for (const Edge& e : mesh.edges) fill_row(row++, e.a, e.b, e.rest_length_sq);
  for (const Diagonal& d : mesh.diagonals) fill_row(row++, d.a, d.b, d.rest_length_sq);
  return out;
}

ContactSet contacts(const ClothMesh& mesh, const Vec& phi, const ContactOptions& opts) {
  const int n = mesh.node_count();

  struct PendingRow {
    ContactRowInfo info;
    double value;
  };
  std::vector<PendingRow> pending;
  double min_residual = std::numeric_limits<double>::infinity();

  for (int k = 0; k < n; ++k) {
    const double h = phi[2 * n + k] - opts.table_z;
    min_residual = std::min(min_residual, h);
    if (h < opts.margin) pending.push_back({{ContactKind::Table, k, -1}, h});
  }

  if (opts.layer_contacts) {
    const double radius = opts.xy_radius_factor *
                          std::hypot(mesh.cell_dx(), mesh.cell_dy());
    const double radius_sq = radius * radius;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        if (mesh.nodes_adjacent(i, j)) continue;
        const double dxy = phi[i] - phi[j];
        const double dyy = phi[n + i] - phi[n + j];
        if (dxy * dxy + dyy * dyy >= radius_sq) continue;
        const double zi = phi[2 * n + i], zj = phi[2 * n + j];
        // Constrain the vertical gap, oriented by the current stacking order.
        const int top = zi >= zj ? i : j;
        const int bottom = zi >= zj ? j : i;
        const double h = std::abs(zi - zj) - opts.thickness;
        min_residual = std::min(min_residual, h);
        if (h < opts.margin) pending.push_back({{ContactKind::Layer, top, bottom}, h});
      }
    }
  }

  ContactSet out;
  const int n_h = static_cast<int>(pending.size());
  out.values = Vec::Zero(n_h);
  out.jacobian = Mat::Zero(n_h, 3 * n);
  out.rows.reserve(n_h);
  for (int r = 0; r < n_h; ++r) {
    out.values[r] = pending[r].value;
    out.rows.push_back(pending[r].info);
    if (pending[r].info.kind == ContactKind::Table) {
      out.jacobian(r, 2 * n + pending[r].info.node_a) = 1.0;
    } else {
      out.jacobian(r, 2 * n + pending[r].info.node_a) = 1.0;
      out.jacobian(r, 2 * n + pending[r].info.node_b) = -1.0;
    }
  }
  out.min_residual = n_h == 0 && !std::isfinite(min_residual) ? opts.margin : min_residual;
  return out;
}

ConstraintBlock evaluate_constraints(const ClothMesh& mesh, const Vec& phi,
                                     const ContactOptions& opts) {
  ConstraintBlock block;
  auto inext = inextensibility(mesh, phi);
  block.c_values = std::move(inext.values);
  block.c_jacobian = std::move(inext.jacobian);
  auto cs = contacts(mesh, phi, opts);
  block.h_values = std::move(cs.values);
  block.h_jacobian = std::move(cs.jacobian);
  return block;
}

}  // namespace clothfold
