#pragma once

#include <string>
#include <vector>

#include "nfqs/evolution.hpp"
#include "nfqs/io.hpp"
#include "nfqs/pimc.hpp"
#include "nfqs/variational.hpp"

namespace nfqs {

// Fully resolved experiment description: preset defaults overlaid by the
// config file, overlaid by CLI flags. Validated before any compute starts.
struct ExperimentConfig {
  std::string experiment;  // ground | evolve | pimc | exact | check
  std::string architecture = "qnvp";
  std::string preset = "quick";
  uint64_t seed = 1;
  std::string out_dir = "runs/out";
  int n_threads = 0;

  HamiltonianSpec ham = HamiltonianSpec::make_trap(0.0);
  int depth = 2;
  int hidden = 32;
  int qcnf_steps = 16;

  TrainConfig train;
  EvolveConfig evolve;
  PrepConfig prep;
  PimcConfig pimc;

  Grid1D grid{-6.0, 12.0, 2048};
  double dt_grid = 5e-4;
  std::vector<double> snapshot_times{1.0, 3.0, 5.0};

  std::vector<double> sweep_g2;  // ground sweep mode when non-empty
  std::vector<int> sweep_depth;
  std::vector<double> pimc_g2;  // pimc sweep mode when non-empty
  int n_restarts = 1;

  void validate() const;
};

// Applies preset defaults for the experiment, then the config file fields.
// Unknown keys are rejected.
ExperimentConfig resolve_config(const json& file_config,
                                const std::string& experiment,
                                const std::string& preset_flag);

json config_to_json(const ExperimentConfig& cfg);

struct RunSummary {
  bool ok = true;
  json data;
};

RunSummary run_ground(const ExperimentConfig& cfg);
RunSummary run_evolve(const ExperimentConfig& cfg);
RunSummary run_pimc(const ExperimentConfig& cfg);
RunSummary run_exact(const ExperimentConfig& cfg);
RunSummary run_check(const ExperimentConfig& cfg);

}  // namespace nfqs
