#pragma once

#include <cstdint>
#include <vector>

#include "nfqs/flow.hpp"
#include "nfqs/grid.hpp"

namespace nfqs {

// ||e|| = sqrt(2 E), capped at the maximum distance of two unit vectors.
double state_error_norm(double e_bound);

// ||O|| (2||e|| + ||e||^2)
double observable_bound(double op_norm, double e_norm);

// Running accumulator for the a-posteriori evolution error. The rigorous
// column integrates dt*sqrt(L); the random-walk column adds the same
// increments incoherently (diagnostic only, never a rigorous bar). e0 is the
// measured initial-state overlap deficit, added to the rigorous budget.
struct ErrorLedger {
  enum class Mode { kRigorous, kRandomWalk };
  Mode mode = Mode::kRigorous;
  double e0 = 0.0;
  std::vector<double> times;
  std::vector<double> sqrt_loss;
  std::vector<double> cum_rigorous;
  std::vector<double> cum_rw_sq;

  void accumulate(double t, double dt, double final_loss);

  int size() const { return static_cast<int>(times.size()); }
  double bound_rigorous(int i) const { return cum_rigorous[i] + e0; }
  double bound_random_walk(int i) const;
  double e_norm(int i) const { return state_error_norm(bound_rigorous(i)); }
  double theta_bound(int i) const { return observable_bound(1.0, e_norm(i)); }
};

struct ThetaEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int64_t n_samples = 0;
};

// Monte Carlo estimate of <theta(x - x0)> with a binomial error bar.
ThetaEstimate theta_expectation(const FlowModel& flow, double x0, int64_t n,
                                Rng& rng);

// 1 - Re <psi_flow | psi_oracle> by trapezoid quadrature on the oracle grid.
// Phase-sensitive by definition; no global-phase alignment is applied.
double overlap_error_vs_oracle(const FlowModel& flow, const GridState& oracle);

}  // namespace nfqs
