// Acceptance suite: exercises every top-level requirement at its stated
// tolerance and prints one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nfqs/checks.hpp"
#include "nfqs/experiments.hpp"
#include "nfqs/pimc.hpp"

using namespace nfqs;
namespace fs = std::filesystem;

namespace {

struct Criterion {
  int id;
  std::string name;
  bool pass;
  std::string detail;
};

std::vector<Criterion> g_results;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  g_results.push_back({id, name, pass, detail});
  std::printf("[criterion %d] %s: %s (%s)\n", id, pass ? "PASS" : "FAIL",
              name.c_str(), detail.c_str());
  std::fflush(stdout);
}

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

fs::path work_dir(const std::string& tag) {
  auto p = fs::temp_directory_path() / ("nfqs_acceptance_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------------------

void criterion_6_property_suites() {
  const double t0 = now_s();
  const auto checks = run_core_checks(1, 0);
  const double dt = now_s() - t0;
  bool ok = all_pass(checks) && dt <= 300.0;
  std::string detail;
  for (const auto& c : checks)
    detail += fmt("%s %.2e<=%.0e; ", c.name.c_str(), c.value, c.tolerance);
  detail += fmt("wall %.0fs", dt);
  report(6, "property suites", ok, detail);
}

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

void criterion_7_loss_identities() {
  auto psi = exact_harmonic_qcnf();
  auto ham = HamiltonianSpec::make_harmonic(1);
  const double dt = 0.1, e0 = 0.5;
  Rng rng(11);
  auto batch = sample_batch(psi, 1024, rng);

  auto cayley = psi;
  cayley.params[3] += 2.0 * std::atan(-e0 * dt / 2.0);
  const double loss_cayley = loss_evolution(cayley, psi, ham, dt, batch);

  auto continuum = psi;
  continuum.params[3] += -e0 * dt;
  const double loss_cont = loss_evolution(continuum, psi, ham, dt, batch);
  const double expect = std::pow(e0, 6) * std::pow(dt, 4) / 144.0;

  const bool ok = loss_cayley < 1e-10 &&
                  std::fabs(loss_cont - expect) <= 0.05 * expect;
  report(7, "exact-loss identities", ok,
         fmt("cayley %.2e < 1e-10; quartic %.4e vs %.4e (|rel|=%.3f)", loss_cayley,
             loss_cont, expect, std::fabs(loss_cont / expect - 1.0)));
}

PimcResult run_pimc_g2(double g2, int sweeps, uint64_t seed) {
  TrapSpec sp;
  sp.g2 = g2;
  PimcConfig cfg;
  cfg.n_sweeps = sweeps;
  cfg.n_therm = std::max(1000, sweeps / 10);
  cfg.n_chains = 2;
  cfg.seed = seed;
  return pimc_energy(sp, cfg);
}

PimcResult g_pimc0;

void criterion_3_pimc_oracle() {
  const double t0 = now_s();
  g_pimc0 = run_pimc_g2(0.0, 20000, 4);
  const double dt = now_s() - t0;
  const double exact_disc = 9.0 * harmonic_primitive_energy(10.0, 100);
  const double dev = std::fabs(g_pimc0.energy.mean - 4.5);
  const double bias = std::fabs(exact_disc - 4.5);
  const bool ok = dev <= 3.0 * g_pimc0.energy.std_error + bias &&
                  dev <= 0.01 * 4.5 && dt <= 600.0;
  report(3, "pimc oracle at g2=0", ok,
         fmt("E=%.4f+-%.4f vs 4.5, discrete-action bias %.1e, wall %.0fs",
             g_pimc0.energy.mean, g_pimc0.energy.std_error, bias, dt));
}

struct GroundOut {
  EnergyEstimate energy;
  double wall = 0.0;
};

GroundOut ground_quick(double g2, int depth, uint64_t seed) {
  json j{{"hamiltonian", {{"type", "trap"}, {"g2", g2}}},
         {"model", {{"depth", depth}, {"hidden", 32}}},
         {"seed", seed},
         {"out", work_dir(fmt("ground_g2%g_d%d", g2, depth)).string()}};
  auto cfg = resolve_config(j, "ground", "quick");
  const double t0 = now_s();
  auto sum = run_ground(cfg);
  GroundOut out;
  out.wall = now_s() - t0;
  const auto& rec = sum.data.at("runs").at(0);
  out.energy.mean = rec.at("energy").get<double>();
  out.energy.std_error = rec.at("std_error").get<double>();
  return out;
}

void criterion_1_noninteracting_ground() {
  const auto out = ground_quick(0.0, 2, 1);
  const double rel = std::fabs(out.energy.mean - 4.5) / 4.5;
  const bool ok = rel <= 0.02 && out.wall <= 900.0;
  report(1, "noninteracting trap ground state", ok,
         fmt("E=%.4f+-%.4f, |rel|=%.4f <= 0.02, wall %.0fs <= 900", out.energy.mean,
             out.energy.std_error, rel, out.wall));
}

void criterion_2_interacting_ground() {
  const auto out = ground_quick(4.0, 4, 1);
  const auto pim = run_pimc_g2(4.0, 12000, 6);
  const double comb =
      std::sqrt(out.energy.std_error * out.energy.std_error +
                pim.energy.std_error * pim.energy.std_error);
  const bool variational = out.energy.mean >= pim.energy.mean - 3.0 * comb;
  const double rel = std::fabs(out.energy.mean - pim.energy.mean) / pim.energy.mean;
  const bool ok = variational && rel <= 0.10;
  report(2, "interacting trap vs pimc", ok,
         fmt("E_var=%.4f+-%.4f, E_pimc=%.4f+-%.4f, |rel|=%.3f <= 0.10, bound %s",
             out.energy.mean, out.energy.std_error, pim.energy.mean,
             pim.energy.std_error, rel, variational ? "ok" : "VIOLATED"));
}

void criteria_4_5_tunneling() {
  auto dir = work_dir("evolve");
  json j{{"seed", 2}, {"out", dir.string()}};
  auto cfg = resolve_config(j, "evolve", "quick");
  const double t0 = now_s();
  RunSummary sum;
  try {
    sum = run_evolve(cfg);
  } catch (const std::exception& e) {
    report(4, "tunneling evolution", false, std::string("exception: ") + e.what());
    report(5, "error-bound validity", false, "evolution did not complete");
    return;
  }
  const double wall = now_s() - t0;

  // parse the trace
  std::ifstream f(dir / "trace.csv");
  std::string line;
  std::getline(f, line);
  std::stringstream hs(line);
  std::vector<std::string> cols;
  std::string c;
  while (std::getline(hs, c, ',')) cols.push_back(c);
  std::map<std::string, int> ci;
  for (size_t i = 0; i < cols.size(); ++i) ci[cols[i]] = static_cast<int>(i);
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    std::stringstream ls(line);
    std::vector<double> row;
    while (std::getline(ls, c, ',')) row.push_back(std::stod(c));
    rows.push_back(row);
  }

  bool theta_ok = true, bound_finite = true, monotone = true, bound_ok = true;
  double prev_bound = 0.0;
  std::string theta_detail;
  for (const auto& r : rows) {
    const double t = r[ci["t"]];
    const double br = r[ci["bound_rigorous"]];
    const double tb = r[ci["theta_bound"]];
    if (!std::isfinite(br) || !std::isfinite(tb)) bound_finite = false;
    if (br + 1e-15 < prev_bound) monotone = false;
    prev_bound = br;
    if (r[ci["overlap_deficit_grid"]] > br) bound_ok = false;
    const double dtheta = std::fabs(r[ci["theta"]] - r[ci["theta_grid"]]);
    if (dtheta > tb) theta_ok = false;
    for (double ts : {1.0, 3.0, 5.0}) {
      if (std::fabs(t - ts) < 0.05)
        theta_detail += fmt("T=%g |dtheta|=%.4f<=%.3f; ", ts, dtheta, tb);
    }
  }
  const bool c4 = theta_ok && bound_finite && monotone && wall <= 3600.0;
  report(4, "tunneling evolution", c4,
         theta_detail + fmt("bounds finite %s, nondecreasing %s, wall %.0fs <= 3600",
                            bound_finite ? "yes" : "NO", monotone ? "yes" : "NO",
                            wall));
  const double e0 = sum.data.at("e0").get<double>();
  report(5, "error-bound validity", bound_ok,
         fmt("cumulative bound + E(0)=%.2e covers measured overlap deficit at all %zu "
             "steps: %s; max violation %.3e",
             e0, rows.size(), bound_ok ? "yes" : "NO",
             sum.data.at("max_bound_violation").get<double>()));
}

}  // namespace

int main() {
  std::printf("nfqs acceptance suite\n");
  const double t0 = now_s();
  criterion_6_property_suites();
  criterion_7_loss_identities();
  criterion_3_pimc_oracle();
  criterion_1_noninteracting_ground();
  criterion_2_interacting_ground();
  criteria_4_5_tunneling();

  std::printf("\nsummary (total wall %.0fs):\n", now_s() - t0);
  std::sort(g_results.begin(), g_results.end(),
            [](const Criterion& a, const Criterion& b) { return a.id < b.id; });
  bool all = true;
  for (const auto& r : g_results) {
    std::printf("  criterion %d %-32s %s\n", r.id, r.name.c_str(),
                r.pass ? "PASS" : "FAIL");
    all = all && r.pass;
  }
  std::printf("acceptance: %s\n", all ? "ALL PASS" : "FAILURES PRESENT");
  return all ? 0 : 1;
}
