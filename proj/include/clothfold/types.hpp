#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace clothfold {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;

// Stacked state layout is (x_0..x_{N-1} | y_0..y_{N-1} | z_0..z_{N-1}).
inline int x_index(int node, int /*n_nodes*/) { return node; }
inline int y_index(int node, int n_nodes) { return n_nodes + node; }
inline int z_index(int node, int n_nodes) { return 2 * n_nodes + node; }

inline Vec3 node_position(const Vec& phi, int node, int n_nodes) {
  return {phi[node], phi[n_nodes + node], phi[2 * n_nodes + node]};
}

inline void set_node_position(Vec& phi, int node, int n_nodes, const Vec3& p) {
  phi[node] = p.x();
  phi[n_nodes + node] = p.y();
  phi[2 * n_nodes + node] = p.z();
}

}  // namespace clothfold
