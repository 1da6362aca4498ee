#include <doctest.h>

#include <cmath>

#include "nfqs/pimc.hpp"
#include "nfqs/rng.hpp"

using namespace nfqs;

TEST_CASE("discrete harmonic reference energy") {
  // continuum limit is (1/2) coth(beta/2)
  const double cont = 0.5 / std::tanh(5.0);
  const double e100 = harmonic_primitive_energy(10.0, 100);
  const double e200 = harmonic_primitive_energy(10.0, 200);
  CHECK(std::fabs(e100 - cont) < 2e-3);
  CHECK(std::fabs(e200 - cont) < std::fabs(e100 - cont));
  // bias scales like dtau^2
  CHECK(std::fabs(e100 - cont) / std::fabs(e200 - cont) == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("single 1d oscillator") {
  TrapSpec sp;
  sp.n_particles = 1;
  sp.space_dim = 1;
  sp.g2 = 0.0;
  PimcConfig cfg;
  cfg.n_sweeps = 6000;
  cfg.n_therm = 1000;
  cfg.n_chains = 2;
  cfg.seed = 5;
  auto r = pimc_energy(sp, cfg);
  CHECK(std::fabs(r.energy.mean - 0.5) < 3.0 * r.energy.std_error + 5e-4);
  CHECK_FALSE(r.tuning_warning);
}

TEST_CASE("nine dof noninteracting trap matches the discrete oracle") {
  TrapSpec sp;
  sp.g2 = 0.0;
  PimcConfig cfg;
  cfg.n_sweeps = 4000;
  cfg.n_therm = 800;
  cfg.n_chains = 2;
  cfg.seed = 12;
  auto r = pimc_energy(sp, cfg);
  const double exact = 9.0 * harmonic_primitive_energy(10.0, cfg.n_slices());
  CHECK(std::fabs(r.energy.mean - exact) < 3.0 * r.energy.std_error);
  // estimator agreement
  const double comb = std::sqrt(r.energy.std_error * r.energy.std_error +
                                r.energy_thermo.std_error * r.energy_thermo.std_error);
  CHECK(std::fabs(r.energy.mean - r.energy_thermo.mean) < 3.0 * comb);
  // virial has the smaller variance for the trapped system
  CHECK(r.energy.std_error < r.energy_thermo.std_error);
}

TEST_CASE("repulsive coupling raises the energy") {
  TrapSpec sp;
  sp.g2 = 4.0;
  PimcConfig cfg;
  cfg.n_sweeps = 3000;
  cfg.n_therm = 800;
  cfg.n_chains = 2;
  cfg.seed = 31;
  auto r = pimc_energy(sp, cfg);
  CHECK(r.energy.mean - 3.0 * r.energy.std_error > 4.5);
}

TEST_CASE("beta sufficiency for the 1d oscillator") {
  TrapSpec sp;
  sp.n_particles = 1;
  sp.space_dim = 1;
  PimcConfig a, b;
  a.n_sweeps = b.n_sweeps = 6000;
  a.n_therm = b.n_therm = 1000;
  a.seed = 41;
  b.seed = 43;
  b.beta = 15.0;
  auto ra = pimc_energy(sp, a);
  auto rb = pimc_energy(sp, b);
  const double comb = std::sqrt(ra.energy.std_error * ra.energy.std_error +
                                rb.energy.std_error * rb.energy.std_error);
  CHECK(std::fabs(ra.energy.mean - rb.energy.mean) < 3.0 * comb + 1e-3);
}

TEST_CASE("incremental action bookkeeping and reversal symmetry") {
  TrapSpec sp;
  sp.g2 = 2.0;
  const int ns = 8;
  const int nd = sp.n_dof();
  Rng rng(9);
  std::vector<double> path(ns * nd);
  for (auto& v : path) v = rng.normal();
  for (int trial = 0; trial < 20; ++trial) {
    const int k = static_cast<int>(rng.raw() % ns);
    const int p = static_cast<int>(rng.raw() % 3);
    std::vector<double> newpos(3);
    for (int c = 0; c < 3; ++c) newpos[c] = path[k * nd + p * 3 + c] + 0.4 * rng.normal();

    const double ds = pimc_bead_delta_action(sp, 0.1, path, ns, k, p, newpos);
    // full-action difference
    auto moved = path;
    for (int c = 0; c < 3; ++c) moved[k * nd + p * 3 + c] = newpos[c];
    const double full = pimc_total_action(sp, 0.1, moved, ns) -
                        pimc_total_action(sp, 0.1, path, ns);
    CHECK(ds == doctest::Approx(full).epsilon(1e-9));

    // reverse move cancels exactly
    std::vector<double> oldpos(3);
    for (int c = 0; c < 3; ++c) oldpos[c] = path[k * nd + p * 3 + c];
    const double ds_rev = pimc_bead_delta_action(sp, 0.1, moved, ns, k, p, oldpos);
    CHECK(ds + ds_rev == doctest::Approx(0.0).epsilon(1e-12));

    path = moved;
  }
}
