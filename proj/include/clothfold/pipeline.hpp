#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "clothfold/io.hpp"
#include "clothfold/koopman.hpp"
#include "clothfold/metrics.hpp"
#include "clothfold/mpc.hpp"

namespace clothfold {

/// Parabolic grasp trajectory: ballistic arc from start to end with a given
/// apex, bowed laterally toward the cloth center.
struct ParabolaSpec {
  Vec3 start = Vec3::Zero();
  Vec3 end = Vec3::Zero();
  double apex_height = 0.2;        // m, above the table plane
  double tilt_toward_center = 0.2; // fraction of cloth width at mid-flight
  double duration = 1.5;           // s
  double dt = 0.01;

  int step_count() const;
  void validate() const;
};

/// Way-points p(t_0..t_n) of the arc; lateral bow is applied along +-x
/// toward center_x.
std::vector<Vec3> sample_parabola(const ParabolaSpec& spec, double center_x);

/// First differences of the arc, duplicated over both controlled points.
std::vector<Vec6> parabola_controls(const ParabolaSpec& spec, double center_x);

struct TrainingDataResult {
  TrainingSet data;
  std::vector<Trajectory> trajectories;
  int skipped = 0;
};

/// Rolls out n_traj sampled parabolic folds from the settled pose and
/// harvests every consecutive transition triple. Trajectories that fail to
/// integrate are skipped; more than 20% skips is an error.
TrainingDataResult generate_training_data(const PipelineConfig& config, int n_traj,
                                          std::uint64_t seed);

/// Unseen folded targets: slow bi-manual (two-corner) folds rolled out by
/// the simulator and settled. Deterministic per (config, seed).
std::vector<ClothState> generate_targets(const PipelineConfig& config, int n_targets,
                                         std::uint64_t seed);

/// One full MPC fold to a target; returns the result plus metrics.
struct FoldRunResult {
  MpcResult mpc;
  FoldMetrics metrics;
  bool ok = false;
  std::string error;
};

FoldRunResult run_fold(const PipelineConfig& config, const KoopmanModel& model,
                       const ClothState& target, int horizon_override = -1);

struct SweepRow {
  std::string parameter;
  double value = 0.0;
  std::uint64_t seed = 0;
  int target_index = 0;
  double mesh_error = 0.0;
  double fold_ratio = 0.0;
  double fold_error = 0.0;
  bool ok = false;
};

enum class SweepParameter { Landmarks, Horizon };

/// Full fold per (value, seed, target); failures are recorded and the sweep
/// continues. Rows come back in deterministic order regardless of the
/// worker count (CLOTHFOLD_WORKERS).
std::vector<SweepRow> sweep(const PipelineConfig& config, SweepParameter parameter,
                            const std::vector<double>& values, int n_targets,
                            const std::vector<std::uint64_t>& seeds);

void save_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);
std::vector<SweepRow> load_sweep_csv(const std::filesystem::path& path);

/// Median of a non-empty vector (average of middle pair for even sizes).
double median(std::vector<double> values);

int worker_count();

}  // namespace clothfold
