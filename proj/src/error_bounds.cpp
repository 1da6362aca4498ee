#include "nfqs/error_bounds.hpp"

#include <cmath>

namespace nfqs {

double state_error_norm(double e_bound) {
  if (e_bound < 0) throw Error("state_error_norm: negative error functional");
  return std::min(2.0, std::sqrt(2.0 * e_bound));
}

double observable_bound(double op_norm, double e_norm) {
  if (op_norm < 0 || e_norm < 0) throw Error("observable_bound: negative input");
  return op_norm * (2.0 * e_norm + e_norm * e_norm);
}

void ErrorLedger::accumulate(double t, double dt, double final_loss) {
  if (final_loss < 0) throw Error("ErrorLedger: negative loss rejected");
  const double sl = std::sqrt(final_loss);
  const double prev_rig = cum_rigorous.empty() ? 0.0 : cum_rigorous.back();
  const double prev_rw = cum_rw_sq.empty() ? 0.0 : cum_rw_sq.back();
  times.push_back(t);
  sqrt_loss.push_back(sl);
  cum_rigorous.push_back(prev_rig + dt * sl);
  cum_rw_sq.push_back(prev_rw + dt * sl * dt * sl);
}

double ErrorLedger::bound_random_walk(int i) const {
  return std::sqrt(cum_rw_sq[i]);
}

ThetaEstimate theta_expectation(const FlowModel& flow, double x0, int64_t n,
                                Rng& rng) {
  if (flow.n_dof() != 1) throw ConfigError("theta_expectation: 1D flows only");
  int64_t hits = 0;
  std::vector<double> y(1);
  for (int64_t i = 0; i < n; ++i) {
    y[0] = rng.normal();
    const PsiEval e = psi_forward(flow, y);
    if (e.x[0] > x0) ++hits;
  }
  ThetaEstimate t;
  t.n_samples = n;
  t.value = static_cast<double>(hits) / static_cast<double>(n);
  t.std_error = std::sqrt(std::max(t.value * (1.0 - t.value), 1.0 / n) /
                          static_cast<double>(n));
  return t;
}

double overlap_error_vs_oracle(const FlowModel& flow, const GridState& oracle) {
  if (oracle.grid.dx() > 0.02)
    throw ConfigError("overlap_error_vs_oracle: grid mesh coarser than 0.02");
  const int n = oracle.grid.n_points;
  double re = 0.0;
  std::vector<double> x(1);
  for (int i = 0; i < n; ++i) {
    x[0] = oracle.grid.x(i);
    const auto p = psi_value_at(flow, x);
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    // conj(psi_flow) * psi_oracle
    re += w * (p.re * oracle.psi[i].real() + p.im * oracle.psi[i].imag());
  }
  return 1.0 - re * oracle.grid.dx();
}

}  // namespace nfqs
