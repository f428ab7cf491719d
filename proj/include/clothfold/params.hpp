#pragma once

#include <span>

#include "clothfold/types.hpp"

namespace clothfold {

/// Physical parameters of the inextensible cloth model.
struct ClothParams {
  double rho = 0.1804;    // density, kg/m^2
  double delta = 0.15;    // virtual (gravitational) mass, kg/m^2, 0 < delta <= rho
  double kappa = 0.05;    // bending constant
  double alpha_damp = 1.4;  // Rayleigh damping, 1/s
  double mu = 0.3;        // Coulomb friction coefficient
  double gravity = 9.8;   // m/s^2

  void validate() const;  // throws std::invalid_argument on violation
};

struct AprioriParams {
  double delta_raw = 0.0;  // affine formula output before clamping
  double alpha_raw = 0.0;
  double delta = 0.0;  // clamped into (0, rho]
  double alpha = 0.0;  // clamped positive
  bool clamped = false;
};

/// Affine calibration formulas for the virtual mass and damping as functions
/// of density, normalized area and the speed statistic V. Raw outputs are
/// clamped to the model's admissible ranges when rho > 0.
AprioriParams a_priori_params(double rho, double area_s, double speed_v);

/// Speed statistic feeding a_priori_params: mean of the top half of all
/// squared node speeds pooled over every (node, time) sample.
double compute_V(std::span<const Vec> velocity_trajectory);

}  // namespace clothfold
