#include "nfqs/pimc.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "nfqs/threading.hpp"

#include "nfqs/rng.hpp"

namespace nfqs {

namespace {

// pair potential and r dV/dr without the coincidence guard: a proposal that
// lands on top of another particle just gets rejected by the infinite action
double pair_v(const TrapSpec& sp, double r) {
  return sp.g2 * std::exp(-sp.yukawa_mass * r) / r;
}
double pair_r_dvdr(const TrapSpec& sp, double r) {
  return -sp.g2 * std::exp(-sp.yukawa_mass * r) * (1.0 / r + sp.yukawa_mass);
}

struct Slice {
  const double* p;  // nd doubles
};

double slice_potential(const TrapSpec& sp, const double* x) {
  const int np = sp.n_particles, d = sp.space_dim;
  double v = 0.0;
  for (int i = 0; i < np * d; ++i) v += x[i] * x[i];
  v *= 0.5 * sp.mass * sp.omega * sp.omega;
  if (sp.g2 != 0.0) {
    for (int n = 0; n < np; ++n)
      for (int m = n + 1; m < np; ++m) {
        double r2 = 0.0;
        for (int c = 0; c < d; ++c) {
          const double dxc = x[n * d + c] - x[m * d + c];
          r2 += dxc * dxc;
        }
        v += pair_v(sp, std::sqrt(r2));
      }
  }
  return v;
}

// potential terms involving one particle only (harmonic + its pairs)
double particle_potential(const TrapSpec& sp, const double* x, int p) {
  const int np = sp.n_particles, d = sp.space_dim;
  double v = 0.0;
  for (int c = 0; c < d; ++c) v += x[p * d + c] * x[p * d + c];
  v *= 0.5 * sp.mass * sp.omega * sp.omega;
  if (sp.g2 != 0.0) {
    for (int m = 0; m < np; ++m) {
      if (m == p) continue;
      double r2 = 0.0;
      for (int c = 0; c < d; ++c) {
        const double dxc = x[p * d + c] - x[m * d + c];
        r2 += dxc * dxc;
      }
      v += pair_v(sp, std::sqrt(r2));
    }
  }
  return v;
}

// x . grad V summed over all coordinates of a slice
double slice_virial(const TrapSpec& sp, const double* x) {
  const int np = sp.n_particles, d = sp.space_dim;
  double acc = 0.0;
  for (int i = 0; i < np * d; ++i) acc += x[i] * x[i];
  acc *= sp.mass * sp.omega * sp.omega;
  if (sp.g2 != 0.0) {
    for (int n = 0; n < np; ++n)
      for (int m = n + 1; m < np; ++m) {
        double r2 = 0.0;
        for (int c = 0; c < d; ++c) {
          const double dxc = x[n * d + c] - x[m * d + c];
          r2 += dxc * dxc;
        }
        acc += pair_r_dvdr(sp, std::sqrt(r2));
      }
  }
  return acc;
}

struct ChainResult {
  std::vector<double> vir, thermo;  // per-sweep series
  double acceptance = 0.0;
  double move_width = 0.0;
};

ChainResult run_chain(const TrapSpec& sp, const PimcConfig& cfg, uint64_t seed) {
  const int ns = cfg.n_slices();
  const int np = sp.n_particles, d = sp.space_dim;
  const int nd = np * d;
  const double dtau = cfg.dtau;
  const double kfac = sp.mass / (2.0 * dtau);
  Rng rng(seed);

  std::vector<double> path(static_cast<size_t>(ns) * nd);
  // cold start near the trap center, slightly spread to avoid coincidences
  for (int k = 0; k < ns; ++k)
    for (int p = 0; p < np; ++p)
      for (int c = 0; c < d; ++c)
        path[k * nd + p * d + c] = 0.3 * rng.normal() + 0.5 * p;

  double width = cfg.move_width;
  int64_t acc_count = 0, prop_count = 0;
  std::vector<double> newpos(d);
  ChainResult out;
  out.vir.reserve(cfg.n_sweeps);
  out.thermo.reserve(cfg.n_sweeps);

  auto bead_move = [&](int k, int p) {
    const double* xk = &path[k * nd];
    const int prev = (k + ns - 1) % ns, next = (k + 1) % ns;
    double ds = 0.0;
    for (int c = 0; c < d; ++c) newpos[c] = xk[p * d + c] + width * rng.normal();
    // kinetic links
    for (int c = 0; c < d; ++c) {
      const double xp = path[prev * nd + p * d + c];
      const double xn = path[next * nd + p * d + c];
      const double o = xk[p * d + c], w = newpos[c];
      ds += kfac * ((w - xp) * (w - xp) + (xn - w) * (xn - w) -
                    (o - xp) * (o - xp) - (xn - o) * (xn - o));
    }
    // potential at this slice
    std::vector<double> trial(xk, xk + nd);
    for (int c = 0; c < d; ++c) trial[p * d + c] = newpos[c];
    ds += dtau * (particle_potential(sp, trial.data(), p) -
                  particle_potential(sp, &path[k * nd], p));
    ++prop_count;
    if (ds <= 0.0 || rng.uniform() < std::exp(-ds)) {
      for (int c = 0; c < d; ++c) path[k * nd + p * d + c] = newpos[c];
      ++acc_count;
    }
  };

  auto com_move = [&](int p) {
    std::vector<double> shift(d);
    for (int c = 0; c < d; ++c) shift[c] = cfg.com_width * rng.normal();
    double ds = 0.0;
    std::vector<double> trial(nd);
    for (int k = 0; k < ns; ++k) {
      std::copy(&path[k * nd], &path[k * nd] + nd, trial.begin());
      for (int c = 0; c < d; ++c) trial[p * d + c] += shift[c];
      ds += dtau * (particle_potential(sp, trial.data(), p) -
                    particle_potential(sp, &path[k * nd], p));
    }
    if (ds <= 0.0 || rng.uniform() < std::exp(-ds)) {
      for (int k = 0; k < ns; ++k)
        for (int c = 0; c < d; ++c) path[k * nd + p * d + c] += shift[c];
    }
  };

  // staging: rebuild a segment from the exact free-particle bridge, accept on
  // the potential change alone; decorrelates the slow internal modes
  const int mseg = std::min(16, ns - 1);
  std::vector<double> seg(static_cast<size_t>(mseg + 1) * d);
  auto staging_move = [&](int p) {
    const int s0 = static_cast<int>(rng.raw() % ns);
    double v_old = 0.0;
    for (int j = 1; j < mseg; ++j)
      v_old += particle_potential(sp, &path[((s0 + j) % ns) * nd], p);
    for (int c = 0; c < d; ++c) {
      seg[c] = path[s0 * nd + p * d + c];
      seg[mseg * d + c] = path[((s0 + mseg) % ns) * nd + p * d + c];
    }
    for (int j = 1; j < mseg; ++j) {
      const int remaining = mseg - j;
      const double sig = std::sqrt(dtau / sp.mass * remaining / (remaining + 1.0));
      for (int c = 0; c < d; ++c) {
        const double mean =
            (remaining * seg[(j - 1) * d + c] + seg[mseg * d + c]) / (remaining + 1.0);
        seg[j * d + c] = mean + sig * rng.normal();
      }
    }
    double v_new = 0.0;
    std::vector<double> trial(nd);
    for (int j = 1; j < mseg; ++j) {
      const int k = (s0 + j) % ns;
      std::copy(&path[k * nd], &path[k * nd] + nd, trial.begin());
      for (int c = 0; c < d; ++c) trial[p * d + c] = seg[j * d + c];
      v_new += particle_potential(sp, trial.data(), p);
    }
    const double ds = dtau * (v_new - v_old);
    if (ds <= 0.0 || rng.uniform() < std::exp(-ds)) {
      for (int j = 1; j < mseg; ++j) {
        const int k = (s0 + j) % ns;
        for (int c = 0; c < d; ++c) path[k * nd + p * d + c] = seg[j * d + c];
      }
    }
  };

  const int n_stage = 2 * ((ns + mseg - 1) / mseg);
  const int total_sweeps = cfg.n_therm + cfg.n_sweeps;
  for (int sweep = 0; sweep < total_sweeps; ++sweep) {
    for (int k = 0; k < ns; ++k)
      for (int p = 0; p < np; ++p) bead_move(k, p);
    for (int p = 0; p < np; ++p) {
      for (int s = 0; s < n_stage; ++s) staging_move(p);
      com_move(p);
    }

    if (sweep < cfg.n_therm) {
      // drive single-bead acceptance toward ~1/2
      if ((sweep + 1) % 100 == 0 && prop_count > 0) {
        const double a = static_cast<double>(acc_count) / prop_count;
        if (a < 0.4)
          width = std::max(0.02, width / 1.15);
        else if (a > 0.6)
          width = std::min(5.0, width * 1.15);
        acc_count = prop_count = 0;
      }
      if (sweep == cfg.n_therm - 1) acc_count = prop_count = 0;
      continue;
    }

    double vbar = 0.0, virbar = 0.0, kin = 0.0;
    for (int k = 0; k < ns; ++k) {
      vbar += slice_potential(sp, &path[k * nd]);
      virbar += slice_virial(sp, &path[k * nd]);
      const int next = (k + 1) % ns;
      for (int i = 0; i < nd; ++i) {
        const double dxi = path[next * nd + i] - path[k * nd + i];
        kin += dxi * dxi;
      }
    }
    vbar /= ns;
    virbar /= ns;
    out.vir.push_back(0.5 * virbar + vbar);
    out.thermo.push_back(nd / (2.0 * dtau) -
                         sp.mass * kin / (2.0 * dtau * dtau * ns) + vbar);
  }
  out.acceptance = prop_count > 0 ? static_cast<double>(acc_count) / prop_count : 0.0;
  out.move_width = width;
  return out;
}

// blocking analysis: double the block size until the error plateaus; report
// the largest (most conservative) estimate along the way
double blocking_error(const std::vector<double>& series) {
  std::vector<double> s = series;
  double best = 0.0;
  while (static_cast<int>(s.size()) >= 16) {
    const int n = static_cast<int>(s.size());
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : s) var += (v - mean) * (v - mean);
    var /= (n - 1);
    best = std::max(best, std::sqrt(var / n));
    std::vector<double> h(n / 2);
    for (int i = 0; i < n / 2; ++i) h[i] = 0.5 * (s[2 * i] + s[2 * i + 1]);
    s.swap(h);
  }
  return best;
}

EnergyEstimate pool_series(const std::vector<std::vector<double>>& chains) {
  EnergyEstimate est;
  double mean = 0.0, err2 = 0.0;
  int64_t total = 0;
  for (const auto& c : chains) {
    double m = 0.0;
    for (double v : c) m += v;
    m /= c.size();
    const double e = blocking_error(c);
    mean += m;
    err2 += e * e;
    total += static_cast<int64_t>(c.size());
  }
  const double nc = static_cast<double>(chains.size());
  est.mean = mean / nc;
  est.std_error = std::sqrt(err2) / nc;
  est.n_samples = total;
  return est;
}

}  // namespace

double pimc_total_action(const TrapSpec& sp, double dtau,
                         std::span<const double> path, int n_slices) {
  const int nd = sp.n_dof();
  const double kfac = sp.mass / (2.0 * dtau);
  double s = 0.0;
  for (int k = 0; k < n_slices; ++k) {
    const int next = (k + 1) % n_slices;
    for (int i = 0; i < nd; ++i) {
      const double dxi = path[next * nd + i] - path[k * nd + i];
      s += kfac * dxi * dxi;
    }
    s += dtau * slice_potential(sp, &path[k * nd]);
  }
  return s;
}

double pimc_bead_delta_action(const TrapSpec& sp, double dtau,
                              std::span<const double> path, int n_slices,
                              int slice, int particle,
                              std::span<const double> new_pos) {
  const int np = sp.n_particles, d = sp.space_dim;
  const int nd = np * d;
  const double kfac = sp.mass / (2.0 * dtau);
  const int prev = (slice + n_slices - 1) % n_slices;
  const int next = (slice + 1) % n_slices;
  double ds = 0.0;
  for (int c = 0; c < d; ++c) {
    const double xp = path[prev * nd + particle * d + c];
    const double xn = path[next * nd + particle * d + c];
    const double o = path[slice * nd + particle * d + c];
    const double w = new_pos[c];
    ds += kfac * ((w - xp) * (w - xp) + (xn - w) * (xn - w) -
                  (o - xp) * (o - xp) - (xn - o) * (xn - o));
  }
  std::vector<double> trial(path.begin() + slice * nd,
                            path.begin() + (slice + 1) * nd);
  const double v_old = particle_potential(sp, trial.data(), particle);
  for (int c = 0; c < d; ++c) trial[particle * d + c] = new_pos[c];
  ds += dtau * (particle_potential(sp, trial.data(), particle) - v_old);
  return ds;
}

double harmonic_primitive_energy(double beta, int n_slices, double mass,
                                 double omega) {
  const double dtau = beta / n_slices;
  double acc = 0.0;
  for (int j = 0; j < n_slices; ++j) {
    const double theta = 2.0 * M_PI * j / n_slices;
    const double lam =
        2.0 * mass * (1.0 - std::cos(theta)) / dtau + dtau * mass * omega * omega;
    const double q =
        mass * omega * omega - 2.0 * mass * (1.0 - std::cos(theta)) / (dtau * dtau);
    acc += q / lam;
  }
  return 1.0 / (2.0 * dtau) + acc / (2.0 * n_slices);
}

PimcResult pimc_energy(const TrapSpec& spec, const PimcConfig& cfg) {
  spec.validate();
  cfg.validate();
  if (spec.g2 < 0) throw ConfigError("pimc_energy: attractive couplings unsupported");

  const int nc = std::max(1, cfg.n_chains);
  std::vector<ChainResult> results(nc);
  {
    std::vector<std::thread> pool;
    const int nt = cfg.n_threads <= 0 ? default_threads() : cfg.n_threads;
    std::atomic<int> next{0};
    auto worker = [&] {
      for (;;) {
        const int c = next.fetch_add(1);
        if (c >= nc) break;
        results[c] = run_chain(spec, cfg, cfg.seed + 7919 * c);
      }
    };
    const int use = std::min(nt, nc);
    if (use <= 1) {
      worker();
    } else {
      for (int t = 0; t < use; ++t) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
  }

  PimcResult out;
  out.beta = cfg.beta;
  out.dtau = cfg.dtau;
  out.g2 = spec.g2;
  out.n_sweeps = static_cast<int64_t>(cfg.n_sweeps) * nc;
  std::vector<std::vector<double>> vir, thermo;
  double acc = 0.0;
  for (const auto& r : results) {
    vir.push_back(r.vir);
    thermo.push_back(r.thermo);
    acc += r.acceptance;
  }
  out.energy = pool_series(vir);
  out.energy_thermo = pool_series(thermo);
  out.acceptance = acc / nc;
  out.tuning_warning = out.acceptance < 0.2 || out.acceptance > 0.8;
  return out;
}

}  // namespace nfqs
