#pragma once

#include <functional>
#include <limits>

#include "nfqs/error_bounds.hpp"
#include "nfqs/flow.hpp"
#include "nfqs/grid.hpp"
#include "nfqs/hamiltonian.hpp"
#include "nfqs/variational.hpp"

namespace nfqs {

struct EvolveConfig {
  double dt = 0.1;
  int n_steps = 50;
  double loss_threshold = 1e-4;
  int max_inner_iters = 5000;
  double inner_lr = 1e-3;
  int batch = 1 << 12;
  uint64_t seed = 0;
  int refresh_every = 50;   // fresh residual batch cadence (inner iterations)
  int theta_samples = 1 << 14;
  int energy_samples = 1 << 12;
  int n_threads = 0;
  int norm_check_every = 10;
  double theta_x0 = 2.0;
  Grid1D norm_grid{-6.0, 12.0, 2048};

  void validate() const {
    if (!(dt > 0)) throw ConfigError("EvolveConfig: dt must be > 0");
    if (!(loss_threshold > 0)) throw ConfigError("EvolveConfig: loss_threshold must be > 0");
    if (n_steps < 0) throw ConfigError("EvolveConfig: n_steps must be >= 0");
    if (batch < 2) throw ConfigError("EvolveConfig: batch must be >= 2");
    if (max_inner_iters < 1) throw ConfigError("EvolveConfig: max_inner_iters must be >= 1");
  }
};

struct StepRecord {
  int step = 0;
  double t = 0.0;
  double final_loss = 0.0;
  int inner_iters = 0;
  bool converged = true;
  double theta = 0.0, theta_err = 0.0;
  double energy = 0.0, energy_err = 0.0;
  double norm_quad = std::numeric_limits<double>::quiet_NaN();
};

struct EvolutionTrace {
  std::vector<StepRecord> steps;  // steps[0] is the initial state
  ErrorLedger ledger;
  bool all_converged = true;
};

// Monte Carlo estimate of the discretized Schrodinger residual
// integral |(psi' - psi)/dt + i (H psi + H psi')/2|^2, importance-sampled
// from |psi_old|^2. Both states are evaluated with the same pointwise
// evaluator so that exact identities cancel exactly.
double loss_evolution(const FlowModel& psi_new, const FlowModel& psi_old,
                      const HamiltonianSpec& ham, double dt,
                      const SampleBatch& batch);

using StepCallback = std::function<void(const FlowModel&, const StepRecord&)>;

// Implicit-midpoint evolution: per step, warm-start psi' from psi and run
// Adam on loss_evolution until the threshold is confirmed on a fresh batch.
EvolutionTrace evolve(const FlowModel& flow0, const HamiltonianSpec& ham,
                      const EvolveConfig& cfg, const StepCallback& on_step = {});

struct PrepConfig {
  int batch = 1 << 8;
  int max_steps = 8000;
  double learning_rate = 3e-3;
  uint64_t seed = 1;
  double fidelity_gate = 0.999;   // hard requirement
  double fidelity_stop = 0.9996;  // early-stop target
  int check_every = 200;
  int n_threads = 0;
  double init_scale = 0.1;
  Grid1D fid_grid{-8.0, 8.0, 1024};
};

// Variational preparation of the false-vacuum gaussian under V = x^2/2,
// gated on quadrature fidelity against pi^{-1/4} e^{-x^2/2}.
FlowModel prepare_initial_tunneling(const FlowModel& flow0, const PrepConfig& cfg);

double flow_fidelity_vs_gaussian(const FlowModel& flow, const Grid1D& g,
                                 double center = 0.0);

}  // namespace nfqs
