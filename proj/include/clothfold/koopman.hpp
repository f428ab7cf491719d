#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "clothfold/types.hpp"

namespace clothfold {

/// Gaussian RBF kernel spec: k(x, y) = exp(-||x - y||^2 / (2 l^2)),
/// with a Tikhonov jitter added to the landmark Gram matrix diagonal.
struct KernelSpec {
  double lengthscale = 1.0;
  double jitter_alpha = 1e-8;
};

/// Median pairwise distance over randomly sampled state pairs.
double median_lengthscale(const Mat& states, int n_pairs, std::uint64_t seed);

/// Transition triples (phi_i, du_i, phi_i^+) harvested from the simulator.
/// Samples are stored column-wise.
struct TrainingSet {
  Mat inputs_phi;   // 3N x n
  Mat inputs_u;     // 6  x n
  Mat outputs_phi;  // 3N x n

  int size() const { return static_cast<int>(inputs_phi.cols()); }
  int state_dim() const { return static_cast<int>(inputs_phi.rows()); }
  void check() const;  // throws on shape mismatch or empty set
};

class DegenerateKernelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Kernel Koopman surrogate with landmark compression. The lifted state
/// z in R^m evolves linearly: z+ = A z + B du, and reconstructs through
/// phi_hat = center + recon_matrix z.
struct KoopmanModel {
  Mat landmarks;     // 3N x m, mean-centered states
  KernelSpec kernel;
  Vec center;        // 3N training mean, re-added on reconstruction
  Mat lift_matrix;   // m x m, symmetric PSD pseudo-inverse square root of the landmark Gram
  Mat a_matrix;      // m x m
  Mat b_matrix;      // m x 6
  Mat recon_matrix;  // 3N x m
  double gamma = 0.0;
  double lambda_rec = 0.0;
  std::uint64_t seed = 0;

  int lifted_dim() const { return static_cast<int>(lift_matrix.rows()); }
  int state_dim() const { return static_cast<int>(landmarks.rows()); }
};

/// Uniform subsample (without replacement) of the training inputs,
/// deterministic given the seed; columns keep their original order.
Mat select_landmarks(const TrainingSet& data, int m, std::uint64_t seed);

KoopmanModel fit(const TrainingSet& data, const Mat& landmarks, const KernelSpec& kernel,
                 double gamma, double lambda_rec, std::uint64_t seed = 0);

Vec lift(const KoopmanModel& model, const Vec& phi);
Vec predict(const KoopmanModel& model, const Vec& z, const Vec6& du);
Vec reconstruct(const KoopmanModel& model, const Vec& z);

/// Lift once, iterate the lifted dynamics, reconstruct every step.
/// Returns controls.size() + 1 states starting with reconstruct(lift(phi0)).
std::vector<Vec> multi_step_forecast(const KoopmanModel& model, const Vec& phi0,
                                     const std::vector<Vec6>& controls);

}  // namespace clothfold
