#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "clothfold/koopman.hpp"
#include "clothfold/metrics.hpp"
#include "clothfold/mpc.hpp"
#include "clothfold/simulator.hpp"

namespace clothfold {

/// Whole-pipeline configuration with desk-scale defaults. Serialized as
/// key = value lines; keys carry their unit as a suffix.
struct PipelineConfig {
  int format_version = 1;

  // mesh / cloth
  int mesh_rows = 9;
  int mesh_cols = 7;
  double width_m = 0.59;
  double height_m = 0.42;
  double rho_kg_m2 = 0.1804;
  double kappa = 0.05;
  double mu = 0.3;
  double area_s = 2.0;    // normalized area measure for the calibration formulas
  double speed_v = 1.0;   // m^2/s^2
  std::optional<double> delta_override;
  std::optional<double> alpha_override;

  // integration / contact
  double dt_s = 0.01;
  double table_z_m = 0.0;
  double contact_margin_m = 5e-3;
  double thickness_m = 2e-3;
  double projection_tol = 1e-6;
  int max_outer = 10;

  // koopman
  int n_landmarks = 158;
  double gamma = 1e-6;
  std::optional<double> lambda_rec;          // defaults to gamma
  double jitter_alpha = 1e-8;
  std::optional<double> lengthscale_override;

  // training data
  int n_train_traj = 30;
  double traj_duration_s = 1.5;
  double apex_min_m = 0.15;
  double apex_max_m = 0.35;
  double tilt_min = 0.1;
  double tilt_max = 0.3;
  double landing_jitter = 0.2;
  // zero-control steps at the head of each training window, anchoring the
  // settled pose as a fixed point of the learned dynamics
  int rest_prefix_steps = 5;

  // mpc
  int horizon = 50;
  double q_prime_inv_m2 = 1.0;
  double r_weight_inv_m2 = 500.0;
  double smooth_s_m = 5e-3;
  double box_bound_m = 0.02;
  int settle_steps = 30;
  int total_steps = 150;

  // targets
  int n_targets = 5;
  double target_duration_s = 3.0;
  int target_settle_steps = 60;
};

PipelineConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const PipelineConfig& config);

ClothParams make_params(const PipelineConfig& config);
ClothMesh make_mesh(const PipelineConfig& config);
SimOptions make_sim_options(const PipelineConfig& config);
OcpConfig make_ocp_config(const PipelineConfig& config);
Simulator make_simulator(const PipelineConfig& config);  // corner grasp attached
KernelSpec make_kernel(const PipelineConfig& config, const TrainingSet& data,
                       std::uint64_t seed);

/// Stepwise record of a rollout: states plus the control applied at each
/// step (the last record carries a zero control).
struct Trajectory {
  double dt = 0.01;
  std::vector<ClothState> states;
  std::vector<Vec6> controls;  // states.size() - 1 entries
};

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj);
Trajectory load_trajectory(const std::filesystem::path& path);

void save_dataset(const std::filesystem::path& path, const TrainingSet& data);
TrainingSet load_dataset(const std::filesystem::path& path);

void save_model(const std::filesystem::path& path, const KoopmanModel& model);
KoopmanModel load_model(const std::filesystem::path& path);

void save_metrics_summary(const std::filesystem::path& path, const FoldMetrics& metrics,
                          const std::string& run_name);

/// Serializes doubles with round-trip-exact precision.
std::string format_double(double v);

}  // namespace clothfold
