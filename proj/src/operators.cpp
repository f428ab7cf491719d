#include "clothfold/operators.hpp"

namespace clothfold {

Vec mass_matrix(const ClothMesh& mesh) {
  Vec mass = Vec::Zero(mesh.node_count());
  for (const Quad& q : mesh.quads) {
    const double share = 0.25 * q.rest_area;
    for (int k : q.nodes) mass[k] += share;
  }
  return mass;
}

Mat grid_laplacian(const ClothMesh& mesh) {
  const int n = mesh.node_count();
  Mat lap = Mat::Zero(n, n);
  for (int r = 1; r + 1 < mesh.rows; ++r) {
    for (int c = 1; c + 1 < mesh.cols; ++c) {
      const int k = mesh.node_index(r, c);
      lap(k, k) = -1.0;
      lap(k, mesh.node_index(r - 1, c)) = 0.25;
      lap(k, mesh.node_index(r + 1, c)) = 0.25;
      lap(k, mesh.node_index(r, c - 1)) = 0.25;
      lap(k, mesh.node_index(r, c + 1)) = 0.25;
    }
  }
  return lap;
}

Mat bending_stiffness(const ClothMesh& mesh, const Vec& mass) {
  const Mat lap = grid_laplacian(mesh);
  return lap.transpose() * mass.asDiagonal() * lap;
}

ClothOperators build_operators(const ClothMesh& mesh) {
  ClothOperators ops;
  ops.mass = mass_matrix(mesh);
  ops.laplacian = grid_laplacian(mesh);
  ops.stiffness = ops.laplacian.transpose() * ops.mass.asDiagonal() * ops.laplacian;
  return ops;
}

}  // namespace clothfold
