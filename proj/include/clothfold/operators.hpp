#pragma once

#include "clothfold/mesh.hpp"
#include "clothfold/types.hpp"

namespace clothfold {

/// Precomputed mesh operators: lumped mass, discrete Laplacian and the
/// bending stiffness K = L^T diag(mass) L (symmetric PSD, annihilates
/// constant and affine fields).
struct ClothOperators {
  Vec mass;       // N, node masses in m^2 (scaled by rho or delta at use site)
  Mat stiffness;  // N x N
  Mat laplacian;  // N x N
};

/// Lumped node masses: one fourth of the summed areas of incident quads.
Vec mass_matrix(const ClothMesh& mesh);

/// Degree-normalized grid Laplacian. Rows of interior nodes hold the
/// mean-of-neighbors stencil; boundary rows are zero so that any flat
/// (affine) configuration carries no bending energy.
Mat grid_laplacian(const ClothMesh& mesh);

Mat bending_stiffness(const ClothMesh& mesh, const Vec& mass);

ClothOperators build_operators(const ClothMesh& mesh);

}  // namespace clothfold
