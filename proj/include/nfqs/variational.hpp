#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nfqs/flow.hpp"
#include "nfqs/hamiltonian.hpp"

namespace nfqs {

struct TrainConfig {
  int batch = 1 << 10;
  int steps = 30000;
  double learning_rate = 3e-4;
  int eval_samples = 1 << 15;
  uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double init_scale = -1.0;  // <= 0: architecture default
  int n_threads = 0;         // 0: NFQS_THREADS or hardware
  int record_every = 10;

  void validate() const {
    if (batch < 2) throw ConfigError("TrainConfig: batch must be >= 2");
    if (learning_rate < 0) throw ConfigError("TrainConfig: learning_rate must be >= 0");
    if (steps < 0) throw ConfigError("TrainConfig: steps must be >= 0");
  }
};

struct EnergyEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int64_t n_samples = 0;
  double spread = 0.0;  // per-sample standard deviation
};

struct TrainingCurve {
  std::vector<int> step;
  std::vector<double> loss;
};

struct TrainResult {
  FlowModel model;
  TrainingCurve curve;
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

// Batch mean of kinetic + potential density over samples from the flow's own
// |psi|^2 (self-normalized estimate of <psi|H|psi>).
double loss_ground(const FlowModel& flow, const HamiltonianSpec& ham,
                   const SampleBatch& batch);

// Loss and its parameter gradient on a fixed set of base points (row-major
// n_samples x n_dof); differentiates through sampler and density.
LossGrad loss_ground_grad(const FlowModel& flow, const HamiltonianSpec& ham,
                          std::span<const double> ys, int n_samples,
                          int n_threads = 0);

// Adam minimization of loss_ground on fresh batches each step.
TrainResult train_ground(const FlowModel& flow0, const HamiltonianSpec& ham,
                         const TrainConfig& cfg);

// Laplacian-form local energy <Re (H psi)/psi> over n fresh samples; i.i.d.
// samples, so std_error = spread / sqrt(n).
EnergyEstimate evaluate_energy(const FlowModel& flow, const HamiltonianSpec& ham,
                               int64_t n, Rng& rng, int n_threads = 0);

}  // namespace nfqs
