#pragma once

#include <array>
#include <vector>

#include "clothfold/types.hpp"

namespace clothfold {

struct Edge {
  int a, b;
  double rest_length;     // m
  double rest_length_sq;  // m^2, computed directly from rest coordinates
};

struct Quad {
  std::array<int, 4> nodes;  // counter-clockwise: (r,c), (r,c+1), (r+1,c+1), (r+1,c)
  double rest_area;          // m^2
};

struct Diagonal {
  int a, b;
  double rest_length;
  double rest_length_sq;
};

/// Regular quadrilateral grid. x spans `width` across columns, y spans
/// `height` across rows; the rest pose lies in the z = z0 plane.
struct ClothMesh {
  int rows = 0;
  int cols = 0;
  double width = 0.0;
  double height = 0.0;
  Vec rest_positions;  // 3N, layout (x|y|z)
  std::vector<Edge> edges;
  std::vector<Quad> quads;
  std::vector<Diagonal> diagonals;

  int node_count() const { return rows * cols; }
  int dof() const { return 3 * node_count(); }
  int node_index(int r, int c) const { return r * cols + c; }
  double cell_dx() const { return width / (cols - 1); }
  double cell_dy() const { return height / (rows - 1); }

  /// True when the two nodes share a quad (grid Chebyshev distance <= 1).
  bool nodes_adjacent(int i, int j) const;
};

ClothMesh build_mesh(int rows, int cols, double width, double height, double z0 = 0.0);

}  // namespace clothfold
