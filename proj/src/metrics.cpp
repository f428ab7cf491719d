#include "clothfold/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace clothfold {

AlignmentResult align_meshes(const Vec& phi_final, const Vec& phi_target) {
  if (phi_final.size() != phi_target.size() || phi_final.size() % 3 != 0)
    throw std::invalid_argument("align_meshes: state size mismatch");
  const int n = static_cast<int>(phi_final.size()) / 3;

  Mat a(3, n), b(3, n);
  for (int k = 0; k < n; ++k) {
    a.col(k) = node_position(phi_final, k, n);
    b.col(k) = node_position(phi_target, k, n);
  }
  const Vec3 ca = a.rowwise().mean();
  const Vec3 cb = b.rowwise().mean();
  a.colwise() -= ca;
  b.colwise() -= cb;

  AlignmentResult out;
  const Mat3 cross = a * b.transpose();  // sum a_k b_k'
  if (cross.norm() < 1e-14) {
    out.degenerate = true;  // coincident clouds, keep identity
  } else {
    Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 d = Mat3::Identity();
    d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    out.rotation = svd.matrixU() * d * svd.matrixV().transpose();  // applied to target
  }

  double total = 0.0;
  for (int k = 0; k < n; ++k) total += (a.col(k) - out.rotation * b.col(k)).norm();
  out.mean_distance = total / n;
  return out;
}

double mesh_error(const Vec& phi_final, const Vec& phi_target) {
  return align_meshes(phi_final, phi_target).mean_distance;
}

double running_cost(std::span<const ClothState> trajectory, std::span<const Vec6> controls,
                    const Vec& phi_target, double q_prime, double r_weight, int t_max) {
  if (t_max < 0 || static_cast<int>(trajectory.size()) < t_max + 1)
    throw std::invalid_argument("running_cost: trajectory shorter than t_max");
  if (static_cast<int>(controls.size()) < t_max)
    throw std::invalid_argument("running_cost: controls shorter than t_max");

  double cost = 0.0;
  for (int k = 0; k <= t_max; ++k) {
    cost += q_prime * (trajectory[k].phi - phi_target).squaredNorm();
    if (k < static_cast<int>(controls.size()))
      cost += r_weight * controls[k].squaredNorm();
  }
  return cost;
}

namespace {

struct CellHash {
  std::size_t operator()(const std::pair<long, long>& c) const {
    return std::hash<long long>()((static_cast<long long>(c.first) << 32) ^
                                  static_cast<long long>(c.second & 0xffffffffLL));
  }
};

using CellSet = std::unordered_set<std::pair<long, long>, CellHash>;

void rasterize_triangle(CellSet& cells, double cell, const Eigen::Vector2d& p0,
                        const Eigen::Vector2d& p1, const Eigen::Vector2d& p2) {
  const double min_x = std::min({p0.x(), p1.x(), p2.x()});
  const double max_x = std::max({p0.x(), p1.x(), p2.x()});
  const double min_y = std::min({p0.y(), p1.y(), p2.y()});
  const double max_y = std::max({p0.y(), p1.y(), p2.y()});

  const long ix0 = static_cast<long>(std::floor(min_x / cell));
  const long ix1 = static_cast<long>(std::floor(max_x / cell));
  const long iy0 = static_cast<long>(std::floor(min_y / cell));
  const long iy1 = static_cast<long>(std::floor(max_y / cell));

  const Eigen::Vector2d e1 = p1 - p0, e2 = p2 - p0;
  const double det = e1.x() * e2.y() - e1.y() * e2.x();
  if (std::abs(det) < 1e-18) return;  // degenerate footprint

  for (long ix = ix0; ix <= ix1; ++ix) {
    for (long iy = iy0; iy <= iy1; ++iy) {
      const Eigen::Vector2d c((ix + 0.5) * cell, (iy + 0.5) * cell);
      const Eigen::Vector2d d = c - p0;
      const double s = (d.x() * e2.y() - d.y() * e2.x()) / det;
      const double t = (e1.x() * d.y() - e1.y() * d.x()) / det;
      if (s >= -1e-12 && t >= -1e-12 && s + t <= 1.0 + 1e-12) cells.insert({ix, iy});
    }
  }
}

CellSet footprint(const Vec& phi, const ClothMesh& mesh, double cell) {
  const int n = mesh.node_count();
  CellSet cells;
  for (const Quad& q : mesh.quads) {
    Eigen::Vector2d p[4];
    for (int i = 0; i < 4; ++i) {
      p[i] = {phi[q.nodes[i]], phi[n + q.nodes[i]]};
    }
    rasterize_triangle(cells, cell, p[0], p[1], p[2]);
    rasterize_triangle(cells, cell, p[0], p[2], p[3]);
  }
  return cells;
}

}  // namespace

double folding_ratio(const Vec& phi, const ClothMesh& mesh, double cell_scale) {
  const double cell = cell_scale * std::min(mesh.cell_dx(), mesh.cell_dy());
  const auto current = footprint(phi, mesh, cell);
  const auto rest = footprint(mesh.rest_positions, mesh, cell);
  if (rest.empty()) throw std::invalid_argument("folding_ratio: empty rest footprint");
  return static_cast<double>(current.size()) / static_cast<double>(rest.size());
}

double fold_error(double ratio_achieved, double ratio_target) {
  if (ratio_target <= 0.0)
    throw std::invalid_argument("fold_error: target ratio must be positive");
  return std::abs(ratio_achieved - ratio_target) / ratio_target;
}

}  // namespace clothfold
