#include "nfqs/checks.hpp"

#include <cmath>

#include "nfqs/evolution.hpp"
#include "nfqs/flow.hpp"
#include "nfqs/grid.hpp"
#include "nfqs/hamiltonian.hpp"
#include "nfqs/variational.hpp"

namespace nfqs {

namespace {

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
}

// (a) analytic coupling-layer logdet vs dense finite-difference Jacobian
CheckResult check_qnvp_logdet(Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + static_cast<int>(rng.raw() % 7);  // 2..8
    const int d = 1 + static_cast<int>(rng.raw() % 3);
    FlowModel m = make_qnvp_model(n, d, 8);
    Rng init = rng.split(t);
    init_flow_params(m, 0.3, init);
    std::vector<double> y(n);
    for (auto& v : y) v = rng.normal();
    const double disc = qnvp_logdet_discrepancy(m, y);
    const double denom = std::max(1.0, std::fabs(psi_forward(m, y).log_det));
    worst = std::max(worst, disc / denom);
  }
  return check_compare("qnvp_logdet_vs_fd_jacobian", worst, 1e-6);
}

// (b) trace-evolved logdet vs the full Jacobian ODE at n_steps = 256
CheckResult check_qcnf_logdet(Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 6; ++t) {
    const int n = 2 + static_cast<int>(rng.raw() % 2);  // 2..3
    FlowModel m = make_qcnf_model(n, 8, 256);
    Rng init = rng.split(100 + t);
    init_flow_params(m, 0.4, init);
    std::vector<double> y(n);
    for (auto& v : y) v = rng.normal();
    worst = std::max(worst,
                     std::fabs(psi_forward(m, y).log_det - qcnf_logdet_jacobian_ode(m, y)));
  }
  return check_compare("qcnf_logdet_vs_jacobian_ode", worst, 1e-5);
}

// (c) parameter gradients against central differences
CheckResult check_gradients(Rng& rng) {
  double worst = 0.0;
  // flow log|psi| gradients
  for (int t = 0; t < 6; ++t) {
    FlowModel m = t % 2 == 0 ? make_qnvp_model(3, 2, 6) : make_qcnf_model(1, 6, 8);
    Rng init = rng.split(200 + t);
    init_flow_params(m, 0.3, init);
    std::vector<double> y(m.n_dof());
    for (auto& v : y) v = rng.normal();
    const auto g = flow_logabs_param_grad(m, y);
    for (int probe = 0; probe < 12; ++probe) {
      const size_t k = rng.raw() % m.params.size();
      auto mp = m, mm = m;
      mp.params[k] += 1e-6;
      mm.params[k] -= 1e-6;
      const double fd =
          (psi_forward(mp, y).log_abs - psi_forward(mm, y).log_abs) / 2e-6;
      if (std::fabs(fd) < 1e-10 && std::fabs(g[k]) < 1e-10) continue;
      worst = std::max(worst, std::fabs(g[k] - fd) /
                                  std::max(1.0, std::max(std::fabs(g[k]), std::fabs(fd))));
    }
  }
  // potential gradients
  auto trap = HamiltonianSpec::make_trap(3.0);
  for (int t = 0; t < 5; ++t) {
    std::vector<double> x(9);
    for (auto& v : x) v = rng.normal();
    const auto pv = trap_potential(trap.trap, x);
    for (int k = 0; k < 9; ++k) {
      auto xp = x, xm = x;
      xp[k] += 1e-6;
      xm[k] -= 1e-6;
      const double fd =
          (trap_potential(trap.trap, xp).v - trap_potential(trap.trap, xm).v) / 2e-6;
      worst = std::max(worst, rel_err(pv.grad[k], fd));
    }
  }
  TunnelSpec ts;
  for (double x : {-0.8, 0.6, 2.1, 4.0}) {
    const double fd = (tunnel_potential(ts, x + 1e-6).v -
                       tunnel_potential(ts, x - 1e-6).v) / 2e-6;
    worst = std::max(worst, rel_err(tunnel_potential(ts, x).grad[0], fd));
  }
  return check_compare("analytic_gradients_vs_central_differences", worst, 1e-4);
}

// (d) 1D flow normalization by quadrature
CheckResult check_normalization(Rng& rng) {
  double worst = 0.0;
  for (int t = 0; t < 3; ++t) {
    FlowModel m = make_qcnf_model(1, 8, 16);
    Rng init = rng.split(300 + t);
    init_flow_params(m, 0.3, init);
    const int ng = 8192;
    const double lo = -12.0, hi = 12.0, dx = (hi - lo) / (ng - 1);
    double total = 0.0;
    std::vector<double> x(1);
    for (int i = 0; i < ng; ++i) {
      x[0] = lo + i * dx;
      const double w = (i == 0 || i == ng - 1) ? 0.5 : 1.0;
      total += w * std::exp(2.0 * psi_at(m, x).log_abs);
    }
    worst = std::max(worst, std::fabs(total * dx - 1.0));
  }
  return check_compare("flow_normalization_quadrature_1d", worst, 1e-3);
}

// (e) one evolution step of the exact harmonic ground state moves it only by
// a global phase: 1 - |<psi'|psi>| < 10 L_th dt^2
CheckResult check_eigenstate_stationarity(uint64_t seed, int n_threads) {
  FlowModel psi;
  psi.kind = FlowKind::kQcnf;
  psi.qcnf.n_dof = 1;
  psi.qcnf.n_steps = 16;
  psi.qcnf.f_spec = MlpSpec{1, 2, {}, Activation::kIdentity, false};
  psi.params.assign(psi.qcnf.param_count(), 0.0);
  psi.params[0] = -0.5 * std::log(2.0);

  EvolveConfig cfg;
  cfg.dt = 0.1;
  cfg.n_steps = 1;
  cfg.loss_threshold = 1e-4;
  cfg.batch = 256;
  cfg.max_inner_iters = 1000;
  cfg.inner_lr = 1e-2;
  cfg.seed = seed;
  cfg.n_threads = n_threads;
  cfg.theta_samples = 1 << 8;
  cfg.energy_samples = 1 << 8;
  cfg.norm_grid = Grid1D{-8.0, 8.0, 512};

  FlowModel after = psi;
  auto ham = HamiltonianSpec::make_harmonic(1);
  evolve(psi, ham, cfg, [&](const FlowModel& m, const StepRecord&) { after = m; });

  Grid1D g{-8.0, 8.0, 2048};
  const double overlap =
      std::abs(grid_overlap(grid_state_from_flow(after, g), grid_state_from_flow(psi, g)));
  return check_compare("eigenstate_stationarity_one_step", 1.0 - overlap,
                       10.0 * cfg.loss_threshold * cfg.dt * cfg.dt);
}

// (f) grid oracle landmarks
CheckResult check_grid_ground() {
  Grid1D g{-8.0, 8.0, 8192};
  auto gr = grid_ground_state(HamiltonianSpec::make_harmonic(1), g);
  return check_compare("grid_harmonic_ground_energy", std::fabs(gr.energy - 0.5), 1e-6);
}

CheckResult check_grid_coherent() {
  Grid1D g{-8.0, 8.0, 4096};
  auto ham = HamiltonianSpec::make_harmonic(1);
  GridState s = grid_state_gaussian(g, 1.0);
  const double dt = 5e-4;
  double worst = 0.0;
  double t = 0.0;
  for (int k = 0; k < 8; ++k) {
    grid_evolve(s, ham, dt, static_cast<int>(std::round(0.75 / dt)));
    t += 0.75;
    worst = std::max(worst, std::fabs(grid_mean_x(s) - std::cos(t)));
  }
  return check_compare("grid_coherent_state_mean_x", worst, 1e-4);
}

}  // namespace

std::vector<CheckResult> run_core_checks(uint64_t seed, int n_threads) {
  Rng rng(seed);
  std::vector<CheckResult> out;
  out.push_back(check_qnvp_logdet(rng));
  out.push_back(check_qcnf_logdet(rng));
  out.push_back(check_gradients(rng));
  out.push_back(check_normalization(rng));
  out.push_back(check_eigenstate_stationarity(seed, n_threads));
  out.push_back(check_grid_ground());
  out.push_back(check_grid_coherent());
  return out;
}

nlohmann::json checks_to_json(const std::vector<CheckResult>& checks) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) {
    arr.push_back({{"name", c.name},
                   {"value", c.value},
                   {"tolerance", c.tolerance},
                   {"pass", c.pass}});
  }
  return {{"checks", arr}, {"all_pass", all_pass(checks)}};
}

bool all_pass(const std::vector<CheckResult>& checks) {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

}  // namespace nfqs
