#pragma once

#include "lrda/assimilation.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace lrda {

enum class ModelKind { AdvectionDiffusion, Lorenz95 };
enum class RunMode { LowRank, FullRank, Both };

/// Full description of one twin experiment. Presets fill these fields; a
/// config file or command line flags may override them.
struct ExperimentConfig {
  std::string name{"custom"};
  ModelKind model{ModelKind::AdvectionDiffusion};
  Index n{100};
  double dt{1e-3};
  double diffusion{0.1};
  double advection{1.4};
  double forcing{8.0};
  Index spinup{1000};  // discarded model steps before the truth window (Lorenz)
  Index window{199};
  Index forecast{800};
  Index obs_stride{1};
  Index obs_offset{0};
  bool obs_noise{false};
  bool background_expdecay{false};  // else scaled identity
  double background_sigma2{0.1};
  double background_length{50.0};
  double model_error_sigma2{1e-4};
  double obs_sigma2{0.01};
  std::vector<Index> ranks{20};
  int n_outer{1};
  Index max_iter{20};
  double tol{1e-6};
  double trunc_tol{1e-8};
  std::optional<Index> restart{};  // stub: the solver rejects restarted runs
  std::vector<std::string> preconditioners{"identity"};
  RunMode mode{RunMode::Both};
  std::uint64_t seed{20230517};
};

std::vector<std::string> preset_names();
ExperimentConfig preset_config(const std::string& name);

/// Flat key=value format, '#' comments; unknown keys are errors.
ExperimentConfig load_config_file(const std::filesystem::path& path);

PreconditionerSpec preconditioner_by_name(const std::string& name);

/// Builds the seeded twin experiment: truth, background and observations.
AssimilationProblem build_problem(const ExperimentConfig& cfg);

/// Runs the configured experiment and writes rmse.csv, residual.csv,
/// storage.csv and state_final.csv under out_dir (per-rank subdirectories
/// when several ranks are requested). Byte-identical outputs for identical
/// config and seed.
void run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace lrda
