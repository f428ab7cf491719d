#include "clothfold/params.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace clothfold {

void ClothParams::validate() const {
  if (rho <= 0.0) throw std::invalid_argument("ClothParams: rho must be positive");
  if (kappa <= 0.0) throw std::invalid_argument("ClothParams: kappa must be positive");
  if (alpha_damp <= 0.0) throw std::invalid_argument("ClothParams: alpha must be positive");
  if (delta <= 0.0 || delta > rho)
    throw std::invalid_argument("ClothParams: delta must lie in (0, rho]");
  if (mu < 0.0) throw std::invalid_argument("ClothParams: mu must be non-negative");
}

AprioriParams a_priori_params(double rho, double area_s, double speed_v) {
  AprioriParams out;
  out.delta_raw = -0.0223 - 0.0178 * area_s + 0.0714 * speed_v + 0.7664 * rho;
  out.alpha_raw = 0.2082 - 0.1481 * area_s + 1.1804 * speed_v + 1.7440 * rho;

  out.delta = out.delta_raw;
  out.alpha = out.alpha_raw;
  if (rho > 0.0) {
    const double delta_floor = 1e-3 * rho;
    out.delta = std::clamp(out.delta_raw, delta_floor, rho);
  }
  out.alpha = std::max(out.alpha_raw, 1e-6);
  out.clamped = out.delta != out.delta_raw || out.alpha != out.alpha_raw;
  return out;
}

double compute_V(std::span<const Vec> velocity_trajectory) {
  if (velocity_trajectory.empty())
    throw std::invalid_argument("compute_V: empty velocity trajectory");

  std::vector<double> squared_speeds;
  for (const Vec& v : velocity_trajectory) {
    const int n = static_cast<int>(v.size()) / 3;
    if (3 * n != v.size() || n == 0)
      throw std::invalid_argument("compute_V: velocity vectors must have 3N entries");
    squared_speeds.reserve(squared_speeds.size() + n);
    for (int k = 0; k < n; ++k) {
      const double vx = v[k], vy = v[n + k], vz = v[2 * n + k];
      squared_speeds.push_back(vx * vx + vy * vy + vz * vz);
    }
  }

  // Mean of the top half (ties included by count, not value).
  const auto count = squared_speeds.size();
  const auto keep = (count + 1) / 2;
  std::nth_element(squared_speeds.begin(), squared_speeds.begin() + (count - keep),
                   squared_speeds.end());
  double sum = 0.0;
  for (auto it = squared_speeds.begin() + (count - keep); it != squared_speeds.end(); ++it)
    sum += *it;
  return sum / static_cast<double>(keep);
}

}  // namespace clothfold
