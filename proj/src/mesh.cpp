#include "clothfold/mesh.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace clothfold {

bool ClothMesh::nodes_adjacent(int i, int j) const {
  const int ri = i / cols, ci = i % cols;
  const int rj = j / cols, cj = j % cols;
  return std::abs(ri - rj) <= 1 && std::abs(ci - cj) <= 1;
}

ClothMesh build_mesh(int rows, int cols, double width, double height, double z0) {
  if (rows < 2 || cols < 2)
    throw std::invalid_argument("build_mesh: grid needs at least 2 nodes per side");
  if (width <= 0.0 || height <= 0.0)
    throw std::invalid_argument("build_mesh: width and height must be positive");

  ClothMesh mesh;
  mesh.rows = rows;
  mesh.cols = cols;
  mesh.width = width;
  mesh.height = height;

  const int n = rows * cols;
  const double dx = width / (cols - 1);
  const double dy = height / (rows - 1);

  mesh.rest_positions = Vec::Zero(3 * n);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int k = mesh.node_index(r, c);
      mesh.rest_positions[k] = c * dx;
      mesh.rest_positions[n + k] = r * dy;
      mesh.rest_positions[2 * n + k] = z0;
    }
  }

  auto rest_sq = [&](int a, int b) {
    const Vec3 pa = node_position(mesh.rest_positions, a, n);
    const Vec3 pb = node_position(mesh.rest_positions, b, n);
    return (pa - pb).squaredNorm();
  };

  // Horizontal then vertical edges.
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c) {
      const int a = mesh.node_index(r, c), b = mesh.node_index(r, c + 1);
      const double sq = rest_sq(a, b);
      mesh.edges.push_back({a, b, std::sqrt(sq), sq});
    }
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r + 1 < rows; ++r) {
      const int a = mesh.node_index(r, c), b = mesh.node_index(r + 1, c);
      const double sq = rest_sq(a, b);
      mesh.edges.push_back({a, b, std::sqrt(sq), sq});
    }

  for (int r = 0; r + 1 < rows; ++r)
    for (int c = 0; c + 1 < cols; ++c) {
      Quad q;
      q.nodes = {mesh.node_index(r, c), mesh.node_index(r, c + 1),
                 mesh.node_index(r + 1, c + 1), mesh.node_index(r + 1, c)};
      q.rest_area = dx * dy;
      mesh.quads.push_back(q);
      const int a = mesh.node_index(r, c), b = mesh.node_index(r + 1, c + 1);
      const double sq = rest_sq(a, b);
      mesh.diagonals.push_back({a, b, std::sqrt(sq), sq});
    }

  return mesh;
}

}  // namespace clothfold
