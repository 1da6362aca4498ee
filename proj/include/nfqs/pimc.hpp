#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nfqs/hamiltonian.hpp"
#include "nfqs/variational.hpp"

namespace nfqs {

// Primitive-action path-integral Monte Carlo for the trap Hamiltonian.
struct PimcConfig {
  double beta = 10.0;
  double dtau = 0.1;
  int n_sweeps = 20000;
  int n_therm = 2000;
  int n_chains = 2;
  uint64_t seed = 0;
  double move_width = 0.5;  // tuned during thermalization
  double com_width = 0.3;
  int n_threads = 0;

  int n_slices() const { return static_cast<int>(std::round(beta / dtau)); }
  void validate() const {
    if (beta <= 0 || dtau <= 0) throw ConfigError("PimcConfig: beta, dtau must be > 0");
    const int n = n_slices();
    if (n < 2) throw ConfigError("PimcConfig: need at least 2 slices");
    if (std::fabs(n * dtau - beta) > 1e-9 * beta)
      throw ConfigError("PimcConfig: beta must be a multiple of dtau");
    if (n_sweeps < 16) throw ConfigError("PimcConfig: too few sweeps");
  }
};

struct PimcResult {
  EnergyEstimate energy;         // virial estimator
  EnergyEstimate energy_thermo;  // thermodynamic cross-check
  double acceptance = 0.0;
  bool tuning_warning = false;
  double beta = 0.0, dtau = 0.0, g2 = 0.0;
  int64_t n_sweeps = 0;
};

PimcResult pimc_energy(const TrapSpec& spec, const PimcConfig& cfg);

// Internals exposed for the detailed-balance and bookkeeping properties.
double pimc_total_action(const TrapSpec& spec, double dtau,
                         std::span<const double> path, int n_slices);
double pimc_bead_delta_action(const TrapSpec& spec, double dtau,
                              std::span<const double> path, int n_slices,
                              int slice, int particle,
                              std::span<const double> new_pos);

// Exact energy of the discretized (primitive-action) harmonic oscillator,
// per degree of freedom; the Trotter-bias oracle.
double harmonic_primitive_energy(double beta, int n_slices, double mass = 1.0,
                                 double omega = 1.0);

}  // namespace nfqs
