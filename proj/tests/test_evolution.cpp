#include <doctest.h>

#include <cmath>
#include <complex>

#include "nfqs/evolution.hpp"

using namespace nfqs;

namespace {

// Exact harmonic ground state as a linear QCNF: dz/dt = -(ln 2 / 2) z.
FlowModel exact_harmonic_qcnf() {
  FlowModel m;
  m.kind = FlowKind::kQcnf;
  m.qcnf.n_dof = 1;
  m.qcnf.n_steps = 16;
  m.qcnf.f_spec = MlpSpec{1, 2, {}, Activation::kIdentity, false};
  m.params.assign(m.qcnf.param_count(), 0.0);
  m.params[0] = -0.5 * std::log(2.0);
  return m;
}

// Same state with a constant extra phase rate: psi' = e^{i delta} psi.
FlowModel with_phase_shift(const FlowModel& m, double delta) {
  FlowModel s = m;
  // linear net layout: W (2x1) then b (2); dtheta/dt row is index 1
  s.params[3] += delta;
  return s;
}

}  // namespace

TEST_CASE("evolution loss identities for the harmonic eigenstate") {
  auto psi = exact_harmonic_qcnf();
  auto ham = HamiltonianSpec::make_harmonic(1);
  const double dt = 0.1;
  const double e0 = 0.5;
  Rng rng(7);
  auto batch = sample_batch(psi, 512, rng);

  SUBCASE("psi' = psi leaves the hamiltonian term: loss = E0^2") {
    const double loss = loss_evolution(psi, psi, ham, dt, batch);
    CHECK(loss == doctest::Approx(e0 * e0).epsilon(1e-6));
  }

  SUBCASE("cayley step solves the discretized equation exactly") {
    const double delta = 2.0 * std::atan(-e0 * dt / 2.0);
    auto psi_new = with_phase_shift(psi, delta);
    const double loss = loss_evolution(psi_new, psi, ham, dt, batch);
    CHECK(loss < 1e-10);
  }

  SUBCASE("continuum phase advance leaves the known quartic residual") {
    auto psi_new = with_phase_shift(psi, -e0 * dt);
    const double loss = loss_evolution(psi_new, psi, ham, dt, batch);
    const double expect = std::pow(e0, 6) * std::pow(dt, 4) / 144.0;
    CHECK(loss == doctest::Approx(expect).epsilon(0.05));
  }
}

TEST_CASE("one accepted step changes an eigenstate only by a global phase") {
  auto psi = exact_harmonic_qcnf();
  auto ham = HamiltonianSpec::make_harmonic(1);
  EvolveConfig cfg;
  cfg.dt = 0.1;
  cfg.n_steps = 1;
  cfg.loss_threshold = 1e-4;
  cfg.batch = 256;
  cfg.max_inner_iters = 800;
  cfg.inner_lr = 1e-2;
  cfg.seed = 3;
  cfg.theta_samples = 1 << 10;
  cfg.energy_samples = 1 << 8;
  cfg.norm_check_every = 1;
  cfg.norm_grid = Grid1D{-8.0, 8.0, 1024};

  FlowModel after = psi;
  auto trace = evolve(psi, ham, cfg, [&](const FlowModel& m, const StepRecord&) {
    after = m;
  });
  REQUIRE(trace.steps.size() == 2);
  CHECK(trace.steps[1].converged);
  CHECK(trace.steps[1].final_loss <= cfg.loss_threshold);

  // quadrature overlap |<psi'|psi>| on a fine grid
  Grid1D g{-8.0, 8.0, 2048};
  auto s_old = grid_state_from_flow(psi, g);
  auto s_new = grid_state_from_flow(after, g);
  const double mod_overlap = std::abs(grid_overlap(s_new, s_old));
  CHECK(1.0 - mod_overlap < 10.0 * cfg.loss_threshold * cfg.dt * cfg.dt);

  // energy stays put and the state stays normalized
  CHECK(trace.steps[1].energy == doctest::Approx(0.5).epsilon(0.01));
  CHECK(trace.steps[1].norm_quad == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("zero steps produce only the initial record") {
  auto psi = exact_harmonic_qcnf();
  auto ham = HamiltonianSpec::make_harmonic(1);
  EvolveConfig cfg;
  cfg.n_steps = 0;
  cfg.theta_samples = 1 << 8;
  cfg.energy_samples = 1 << 8;
  cfg.norm_grid = Grid1D{-8.0, 8.0, 512};
  auto trace = evolve(psi, ham, cfg);
  CHECK(trace.steps.size() == 1);
  CHECK(trace.ledger.size() == 0);
  CHECK(trace.steps[0].theta == doctest::Approx((1 - std::erf(2.0)) / 2).epsilon(0.5));
}

TEST_CASE("initial state preparation reaches the false vacuum") {
  auto m0 = make_qcnf_model(1, 16, 16);
  PrepConfig cfg;
  cfg.batch = 128;
  cfg.max_steps = 2500;
  cfg.learning_rate = 5e-3;
  cfg.seed = 11;
  cfg.check_every = 100;
  auto m = prepare_initial_tunneling(m0, cfg);

  const double fid = flow_fidelity_vs_gaussian(m, Grid1D{-8.0, 8.0, 2048});
  CHECK(fid > 0.999);

  Rng rng(13);
  auto ham = HamiltonianSpec::make_harmonic(1);
  auto est = evaluate_energy(m, ham, 1 << 12, rng);
  CHECK(est.mean == doctest::Approx(0.5).epsilon(0.01));

  auto th = theta_expectation(m, 2.0, 1 << 16, rng);
  const double tail = (1 - std::erf(2.0)) / 2;
  // fidelity ~0.9996 allows tail-probability shifts of order 1e-3
  CHECK(std::fabs(th.value - tail) < 3.0 * th.std_error + 1.5e-3);
}

TEST_CASE("unreachable fidelity gate raises") {
  auto m0 = make_qcnf_model(1, 8, 16);
  PrepConfig cfg;
  cfg.batch = 32;
  cfg.max_steps = 3;  // far too few steps to converge
  cfg.seed = 5;
  CHECK_THROWS_AS(prepare_initial_tunneling(m0, cfg), InitialStateNotReached);
}
