#include "clothfold/koopman.hpp"

#include <cmath>

#include "clothfold/rng.hpp"

namespace clothfold {

namespace {

constexpr double kEigenvalueCutoffRatio = 1e-10;

/// Gram matrix of the Gaussian RBF between column sets A (d x na) and B (d x nb).
Mat rbf_gram(const Mat& a, const Mat& b, double lengthscale) {
  const Vec a_sq = a.colwise().squaredNorm();
  const Vec b_sq = b.colwise().squaredNorm();
  Mat dist_sq = (-2.0 * a.transpose() * b);
  dist_sq.colwise() += a_sq;
  dist_sq.rowwise() += b_sq.transpose();
  const double inv = 1.0 / (2.0 * lengthscale * lengthscale);
  return (-inv * dist_sq.cwiseMax(0.0)).array().exp();
}

struct SymmetricPseudo {
  Mat pinv;       // pseudo-inverse
  Mat pinv_sqrt;  // (A^dagger)^{1/2}
  Mat sqrt;       // A^{1/2} with negatives clamped to zero
};

SymmetricPseudo symmetric_pseudo(const Mat& a, const char* where) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(a);
  if (eig.info() != Eigen::Success)
    throw DegenerateKernelError(std::string(where) + ": eigendecomposition failed");
  const Vec& vals = eig.eigenvalues();
  const double cutoff = kEigenvalueCutoffRatio * std::max(vals.maxCoeff(), 0.0);
  if (vals.maxCoeff() <= 0.0 || (vals.array() > cutoff).count() == 0)
    throw DegenerateKernelError(std::string(where) + ": all eigenvalues below cutoff");

  const int m = static_cast<int>(vals.size());
  Vec inv = Vec::Zero(m), inv_sqrt = Vec::Zero(m), sqrt_v = Vec::Zero(m);
  for (int i = 0; i < m; ++i) {
    if (vals[i] > cutoff) {
      inv[i] = 1.0 / vals[i];
      inv_sqrt[i] = 1.0 / std::sqrt(vals[i]);
    }
    if (vals[i] > 0.0) sqrt_v[i] = std::sqrt(vals[i]);
  }
  const Mat& v = eig.eigenvectors();
  SymmetricPseudo out;
  out.pinv = v * inv.asDiagonal() * v.transpose();
  out.pinv_sqrt = v * inv_sqrt.asDiagonal() * v.transpose();
  out.sqrt = v * sqrt_v.asDiagonal() * v.transpose();
  return out;
}

}  // namespace

void TrainingSet::check() const {
  if (inputs_phi.cols() == 0) throw std::invalid_argument("TrainingSet: empty");
  if (inputs_u.cols() != inputs_phi.cols() || outputs_phi.cols() != inputs_phi.cols())
    throw std::invalid_argument("TrainingSet: sample count mismatch");
  if (outputs_phi.rows() != inputs_phi.rows())
    throw std::invalid_argument("TrainingSet: state dimension mismatch");
  if (inputs_u.rows() != 6)
    throw std::invalid_argument("TrainingSet: controls must have 6 rows");
}

double median_lengthscale(const Mat& states, int n_pairs, std::uint64_t seed) {
  const int n = static_cast<int>(states.cols());
  if (n < 2) throw std::invalid_argument("median_lengthscale: need at least two states");
  Rng rng(seed);
  std::vector<double> dists;
  dists.reserve(n_pairs);
  for (int i = 0; i < n_pairs; ++i) {
    const int a = static_cast<int>(rng.below(n));
    int b = static_cast<int>(rng.below(n));
    if (a == b) b = (b + 1) % n;
    dists.push_back((states.col(a) - states.col(b)).norm());
  }
  std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
  double med = dists[dists.size() / 2];
  if (med <= 0.0) med = 1.0;  // all sampled states coincide
  return med;
}

Mat select_landmarks(const TrainingSet& data, int m, std::uint64_t seed) {
  data.check();
  const int n = data.size();
  if (m < 1 || m > n)
    throw std::invalid_argument("select_landmarks: m must be in [1, n_train]");
  Rng rng(seed);
  const std::vector<int> picks = rng.sample_without_replacement(n, m);
  Mat landmarks(data.state_dim(), m);
  for (int i = 0; i < m; ++i) landmarks.col(i) = data.inputs_phi.col(picks[i]);
  return landmarks;
}

KoopmanModel fit(const TrainingSet& data, const Mat& landmarks, const KernelSpec& kernel,
                 double gamma, double lambda_rec, std::uint64_t seed) {
  data.check();
  if (gamma <= 0.0) throw std::invalid_argument("fit: gamma must be positive");
  if (lambda_rec <= 0.0) throw std::invalid_argument("fit: lambda_rec must be positive");
  if (kernel.lengthscale <= 0.0)
    throw std::invalid_argument("fit: kernel lengthscale must be positive");
  if (landmarks.rows() != data.state_dim())
    throw std::invalid_argument("fit: landmark dimension mismatch");

  const int n = data.size();
  const int m = static_cast<int>(landmarks.cols());

  KoopmanModel model;
  model.kernel = kernel;
  model.gamma = gamma;
  model.lambda_rec = lambda_rec;
  model.seed = seed;
  model.center = data.inputs_phi.rowwise().mean();

  model.landmarks = landmarks.colwise() - model.center;
  const Mat x_in = data.inputs_phi.colwise() - model.center;
  const Mat x_out = data.outputs_phi.colwise() - model.center;

  Mat k_m = rbf_gram(model.landmarks, model.landmarks, kernel.lengthscale);
  k_m.diagonal().array() += kernel.jitter_alpha;
  const SymmetricPseudo km_dec = symmetric_pseudo(k_m, "fit(K_m)");
  model.lift_matrix = km_dec.pinv_sqrt;

  const Mat k_nm = rbf_gram(x_in, model.landmarks, kernel.lengthscale);  // n x m

  // Joint regressor over lifted state and control.
  Mat e(n, m + 6);
  e.leftCols(m) = k_nm;
  e.rightCols(6) = data.inputs_u.transpose();

  Mat mid = e.transpose() * e;
  mid.topLeftCorner(m, m) += gamma * n * k_m;
  mid.bottomRightCorner(6, 6) += gamma * n * Mat::Identity(6, 6);
  const SymmetricPseudo mid_dec = symmetric_pseudo(mid, "fit(regressor)");

  Mat right = Mat::Zero(m + 6, m + 6);
  right.topLeftCorner(m, m) = km_dec.sqrt;
  right.bottomRightCorner(6, 6) = Mat::Identity(6, 6);

  const Mat transition =
      model.lift_matrix * (k_nm.transpose() * e) * mid_dec.pinv * right;  // m x (m+6)
  model.a_matrix = transition.leftCols(m);
  model.b_matrix = transition.rightCols(6);

  Mat rec_inner = k_nm.transpose() * k_nm + (lambda_rec * n) * k_m;
  const SymmetricPseudo rec_dec = symmetric_pseudo(rec_inner, "fit(reconstruction)");
  model.recon_matrix = x_out * (k_nm * (rec_dec.pinv * km_dec.sqrt));

  return model;
}

Vec lift(const KoopmanModel& model, const Vec& phi) {
  if (phi.size() != model.state_dim())
    throw std::invalid_argument("lift: state dimension mismatch");
  const Vec centered = phi - model.center;
  const Mat k_col = rbf_gram(model.landmarks, centered, model.kernel.lengthscale);
  return model.lift_matrix * k_col.col(0);
}

Vec predict(const KoopmanModel& model, const Vec& z, const Vec6& du) {
  if (z.size() != model.lifted_dim())
    throw std::invalid_argument("predict: lifted dimension mismatch");
  return model.a_matrix * z + model.b_matrix * du;
}

Vec reconstruct(const KoopmanModel& model, const Vec& z) {
  if (z.size() != model.lifted_dim())
    throw std::invalid_argument("reconstruct: lifted dimension mismatch");
  return model.center + model.recon_matrix * z;
}

std::vector<Vec> multi_step_forecast(const KoopmanModel& model, const Vec& phi0,
                                     const std::vector<Vec6>& controls) {
  std::vector<Vec> states;
  states.reserve(controls.size() + 1);
  Vec z = lift(model, phi0);
  states.push_back(reconstruct(model, z));
  for (const Vec6& du : controls) {
    z = predict(model, z, du);
    states.push_back(reconstruct(model, z));
  }
  return states;
}

}  // namespace clothfold
