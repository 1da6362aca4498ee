#include "nfqs/evolution.hpp"

#include <cmath>
#include <memory>

#include "nfqs/adam.hpp"
#include "nfqs/local_energy.hpp"
#include "nfqs/threading.hpp"

namespace nfqs {

namespace {

constexpr int kChunk = 16;

// Old-state data at the sampled configurations; constants during a step.
struct EvoBatch {
  int n = 0;
  int nd = 0;
  std::vector<double> x;
  std::vector<double> u_old, phi_old, eold_re, eold_im;
};

EvoBatch make_evo_batch(const FlowModel& psi_old, const HamiltonianSpec& ham,
                        std::span<const double> xs, int n) {
  const int nd = psi_old.n_dof();
  EvoBatch eb;
  eb.n = n;
  eb.nd = nd;
  eb.x.assign(xs.begin(), xs.end());
  eb.u_old.resize(n);
  eb.phi_old.resize(n);
  eb.eold_re.resize(n);
  eb.eold_im.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto xi = xs.subspan(static_cast<size_t>(i) * nd, nd);
    Cplx<double> lap{0.0, 0.0};
    double u = 0, phi = 0;
    for (int c = 0; c < nd; ++c) {
      const PointDerivs d = psi_point_derivs(psi_old, xi, c);
      if (c == 0) {
        u = d.u;
        phi = d.phi;
      }
      const Cplx<double> g1{d.u1, d.phi1};
      const Cplx<double> g2{d.u2, d.phi2};
      lap = lap + g2 + g1 * g1;
    }
    const double v = val0(potential_t<double>(ham, xi));
    eb.u_old[i] = u;
    eb.phi_old[i] = phi;
    eb.eold_re[i] = v - 0.5 / ham.mass() * lap.re;
    eb.eold_im[i] = -0.5 / ham.mass() * lap.im;
  }
  return eb;
}

// |(rho - 1)/dt + (i/2)(E_old + rho E')|^2 from the new-state log-derivatives.
template <class S>
S residual_sq(const EvoBatch& eb, int i, double dt, double mass,
              const HamiltonianSpec& ham, const S& u, const S& phi,
              std::span<const S> g1_re, std::span<const S> g1_im,
              std::span<const S> g2_re, std::span<const S> g2_im,
              std::span<const S> xv) {
  Cplx<S> lap{S(0.0), S(0.0)};
  for (size_t c = 0; c < g1_re.size(); ++c) {
    const Cplx<S> g1{g1_re[c], g1_im[c]};
    const Cplx<S> g2{g2_re[c], g2_im[c]};
    lap = lap + g2 + g1 * g1;
  }
  S v = potential_t<S>(ham, xv);
  const Cplx<S> enew = Cplx<S>{v, S(0.0)} - S(0.5 / mass) * lap;
  const Cplx<S> rho = polar_exp(u - S(eb.u_old[i]), phi - S(eb.phi_old[i]));
  const Cplx<S> eold{S(eb.eold_re[i]), S(eb.eold_im[i])};
  const Cplx<S> hsum = eold + rho * enew;
  // (rho - 1)/dt + (i/2) hsum
  const S re = (rho.re - S(1.0)) * S(1.0 / dt) - hsum.im * S(0.5);
  const S im = rho.im * S(1.0 / dt) + hsum.re * S(0.5);
  return re * re + im * im;
}

template <class S, class Work>
S sample_residual(const FlowModel& m, const HamiltonianSpec& ham,
                  const EvoBatch& eb, int i, double dt,
                  std::span<const S> ps, Work& w, std::vector<S>& xs,
                  std::vector<S>& buf) {
  const int nd = eb.nd;
  // buf layout: [g1_re, g1_im, g2_re, g2_im, xv] each nd wide
  buf.resize(5 * nd);
  xs.resize(nd);
  S u{}, phi{};
  for (int c = 0; c < nd; ++c) {
    for (int k = 0; k < nd; ++k) {
      const double xk = eb.x[static_cast<size_t>(i) * nd + k];
      xs[k] = (k == c) ? SIO<S>::seeded(xk, 0) : SIO<S>::input(xk);
    }
    if constexpr (std::is_same_v<Work, QcnfWork<S>>) {
      qcnf_point_eval<S>(m.qcnf, ps, xs, w);
    } else {
      qnvp_point_eval<S>(m.qnvp, ps, xs, w);
    }
    if (c == 0) {
      u = comp_extract(w.log_abs, 0);
      phi = comp_extract(w.phase, 0);
    }
    buf[0 * nd + c] = comp_extract(w.log_abs, 1);
    buf[1 * nd + c] = comp_extract(w.phase, 1);
    buf[2 * nd + c] = comp_extract(w.log_abs, 2);
    buf[3 * nd + c] = comp_extract(w.phase, 2);
    buf[4 * nd + c] = SIO<S>::input(eb.x[static_cast<size_t>(i) * nd + c]);
  }
  std::span<const S> b(buf);
  return residual_sq<S>(eb, i, dt, ham.mass(), ham, u, phi, b.subspan(0, nd),
                        b.subspan(nd, nd), b.subspan(2 * nd, nd),
                        b.subspan(3 * nd, nd), b.subspan(4 * nd, nd));
}

double loss_evolution_value(const FlowModel& psi_new, const HamiltonianSpec& ham,
                            const EvoBatch& eb, double dt, int n_threads) {
  std::vector<double> out(1);
  if (psi_new.kind == FlowKind::kQcnf) {
    using S = Dual<Jet2>;
    std::vector<S> ps(psi_new.params.size());
    for (size_t k = 0; k < ps.size(); ++k) ps[k] = SIO<S>::input(psi_new.params[k]);
    struct Ctx {
      QcnfWork<S> w;
      std::vector<S> xs, buf;
    };
    std::vector<std::unique_ptr<Ctx>> ctxs;
    const int nt = n_threads <= 0 ? default_threads() : n_threads;
    for (int t = 0; t < nt; ++t) ctxs.push_back(std::make_unique<Ctx>());
    parallel_chunk_reduce(eb.n, kChunk, 1, nt, out,
                          [&](int tid, int i, std::span<double> slot) {
                            Ctx& c = *ctxs[tid];
                            slot[0] += val0(sample_residual<S, QcnfWork<S>>(
                                psi_new, ham, eb, i, dt, ps, c.w, c.xs, c.buf));
                          });
  } else {
    using S = Jet2;
    std::vector<S> ps(psi_new.params.size());
    for (size_t k = 0; k < ps.size(); ++k) ps[k] = SIO<S>::input(psi_new.params[k]);
    struct Ctx {
      QnvpWork<S> w;
      std::vector<S> xs, buf;
    };
    std::vector<std::unique_ptr<Ctx>> ctxs;
    const int nt = n_threads <= 0 ? default_threads() : n_threads;
    for (int t = 0; t < nt; ++t) ctxs.push_back(std::make_unique<Ctx>());
    parallel_chunk_reduce(eb.n, kChunk, 1, nt, out,
                          [&](int tid, int i, std::span<double> slot) {
                            Ctx& c = *ctxs[tid];
                            slot[0] += val0(sample_residual<S, QnvpWork<S>>(
                                psi_new, ham, eb, i, dt, ps, c.w, c.xs, c.buf));
                          });
  }
  return out[0] / eb.n;
}

LossGrad loss_evolution_grad(const FlowModel& psi_new, const HamiltonianSpec& ham,
                             const EvoBatch& eb, double dt, int n_threads) {
  const int P = psi_new.n_params();
  const int nt = n_threads <= 0 ? default_threads() : n_threads;
  std::vector<double> out(P + 1);
  if (psi_new.kind == FlowKind::kQcnf) {
    using A = Dual<Jet2>;
    using S = Var<A>;
    struct Ctx {
      Tape<A> tape;
      QcnfWork<S> w;
      std::vector<S> ps, xs, buf;
      std::vector<double> g;
    };
    std::vector<std::unique_ptr<Ctx>> ctxs;
    for (int t = 0; t < nt; ++t) ctxs.push_back(std::make_unique<Ctx>());
    parallel_chunk_reduce(
        eb.n, kChunk, P + 1, nt, out, [&](int tid, int i, std::span<double> slot) {
          Ctx& c = *ctxs[tid];
          c.tape.reset();
          TapeScope<A> scope(c.tape);
          c.ps.clear();
          c.ps.reserve(P);
          for (int k = 0; k < P; ++k) c.ps.push_back(S::leaf(A(psi_new.params[k])));
          S loss = sample_residual<S, QcnfWork<S>>(psi_new, ham, eb, i, dt, c.ps,
                                                   c.w, c.xs, c.buf);
          c.g.assign(P, 0.0);
          c.tape.backward(loss.i, c.g);
          for (int k = 0; k < P; ++k) slot[k] += c.g[k];
          slot[P] += val0(loss);
        });
  } else {
    using A = Jet2;
    using S = Var<A>;
    struct Ctx {
      Tape<A> tape;
      QnvpWork<S> w;
      std::vector<S> ps, xs, buf;
      std::vector<double> g;
    };
    std::vector<std::unique_ptr<Ctx>> ctxs;
    for (int t = 0; t < nt; ++t) ctxs.push_back(std::make_unique<Ctx>());
    parallel_chunk_reduce(
        eb.n, kChunk, P + 1, nt, out, [&](int tid, int i, std::span<double> slot) {
          Ctx& c = *ctxs[tid];
          c.tape.reset();
          TapeScope<A> scope(c.tape);
          c.ps.clear();
          c.ps.reserve(P);
          for (int k = 0; k < P; ++k) c.ps.push_back(S::leaf(A(psi_new.params[k])));
          S loss = sample_residual<S, QnvpWork<S>>(psi_new, ham, eb, i, dt, c.ps,
                                                   c.w, c.xs, c.buf);
          c.g.assign(P, 0.0);
          c.tape.backward(loss.i, c.g);
          for (int k = 0; k < P; ++k) slot[k] += c.g[k];
          slot[P] += val0(loss);
        });
  }
  LossGrad r;
  r.grad.assign(out.begin(), out.begin() + P);
  for (double& g : r.grad) g /= eb.n;
  r.loss = out[P] / eb.n;
  return r;
}

EvoBatch draw_evo_batch(const FlowModel& psi_old, const HamiltonianSpec& ham,
                        int n, Rng& rng) {
  SampleBatch sb = sample_batch(psi_old, n, rng);
  return make_evo_batch(psi_old, ham, sb.x, n);
}

}  // namespace

double loss_evolution(const FlowModel& psi_new, const FlowModel& psi_old,
                      const HamiltonianSpec& ham, double dt,
                      const SampleBatch& batch) {
  if (psi_new.n_dof() != psi_old.n_dof())
    throw DimensionMismatch("loss_evolution: flows disagree on n_dof");
  EvoBatch eb = make_evo_batch(psi_old, ham, batch.x, batch.n);
  return loss_evolution_value(psi_new, ham, eb, dt, 0);
}

EvolutionTrace evolve(const FlowModel& flow0, const HamiltonianSpec& ham,
                      const EvolveConfig& cfg, const StepCallback& on_step) {
  cfg.validate();
  flow0.validate();
  EvolutionTrace trace;
  FlowModel psi = flow0;
  Rng rng(cfg.seed);
  Rng obs_rng = rng.split(0x0b5);

  auto observe = [&](int step, double t, double final_loss, int iters,
                     bool converged) {
    StepRecord r;
    r.step = step;
    r.t = t;
    r.final_loss = final_loss;
    r.inner_iters = iters;
    r.converged = converged;
    if (psi.n_dof() == 1) {
      const auto th = theta_expectation(psi, cfg.theta_x0, cfg.theta_samples, obs_rng);
      r.theta = th.value;
      r.theta_err = th.std_error;
    }
    const auto en = evaluate_energy(psi, ham, cfg.energy_samples, obs_rng,
                                    cfg.n_threads);
    r.energy = en.mean;
    r.energy_err = en.std_error;
    if (psi.n_dof() == 1 && cfg.norm_check_every > 0 &&
        (step % cfg.norm_check_every == 0)) {
      double total = 0.0;
      std::vector<double> x(1);
      for (int i = 0; i < cfg.norm_grid.n_points; ++i) {
        x[0] = cfg.norm_grid.x(i);
        const double w = (i == 0 || i == cfg.norm_grid.n_points - 1) ? 0.5 : 1.0;
        total += w * std::exp(2.0 * psi_at(psi, x).log_abs);
      }
      r.norm_quad = total * cfg.norm_grid.dx();
    }
    trace.steps.push_back(r);
    if (on_step) on_step(psi, r);
  };

  observe(0, 0.0, 0.0, 0, true);

  for (int step = 1; step <= cfg.n_steps; ++step) {
    FlowModel psi_new = psi;
    Adam opt(psi_new.params.size(), {cfg.inner_lr});
    EvoBatch eb = draw_evo_batch(psi, ham, cfg.batch, rng);
    double final_loss = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    int iters = 0;
    for (int it = 0; it < cfg.max_inner_iters; ++it) {
      if (it > 0 && cfg.refresh_every > 0 && it % cfg.refresh_every == 0)
        eb = draw_evo_batch(psi, ham, cfg.batch, rng);
      LossGrad lg = loss_evolution_grad(psi_new, ham, eb, cfg.dt, cfg.n_threads);
      if (!std::isfinite(lg.loss))
        throw NonFinite("evolve: loss diverged at step " + std::to_string(step));
      iters = it + 1;
      if (lg.loss <= cfg.loss_threshold) {
        // confirm on an independent batch before accepting the step
        EvoBatch verify = draw_evo_batch(psi, ham, cfg.batch, rng);
        const double vloss =
            loss_evolution_value(psi_new, ham, verify, cfg.dt, cfg.n_threads);
        if (vloss <= cfg.loss_threshold) {
          final_loss = vloss;
          converged = true;
          break;
        }
      }
      opt.step(psi_new.params, lg.grad);
    }
    if (!converged) {
      EvoBatch verify = draw_evo_batch(psi, ham, cfg.batch, rng);
      final_loss = loss_evolution_value(psi_new, ham, verify, cfg.dt, cfg.n_threads);
      trace.all_converged = false;
    }
    psi = psi_new;
    trace.ledger.accumulate(step * cfg.dt, cfg.dt, final_loss);
    observe(step, step * cfg.dt, final_loss, iters, converged);
  }
  return trace;
}

double flow_fidelity_vs_gaussian(const FlowModel& flow, const Grid1D& g,
                                 double center) {
  const GridState target = grid_state_gaussian(g, center);
  const GridState fs = grid_state_from_flow(flow, g);
  const auto ov = grid_overlap(fs, target);
  return std::norm(ov);
}

FlowModel prepare_initial_tunneling(const FlowModel& flow0, const PrepConfig& cfg) {
  if (flow0.n_dof() != 1)
    throw ConfigError("prepare_initial_tunneling: 1D flows only");
  FlowModel m = flow0;
  Rng rng(cfg.seed);
  if (m.params.empty() || cfg.init_scale > 0) {
    bool all_zero = true;
    for (double p : m.params) all_zero = all_zero && p == 0.0;
    if (all_zero) init_flow_params(m, cfg.init_scale, rng);
  }
  const auto ham = HamiltonianSpec::make_harmonic(1);
  Adam opt(m.params.size(), {cfg.learning_rate});
  std::vector<double> ys(cfg.batch);
  for (int step = 0; step < cfg.max_steps; ++step) {
    for (auto& v : ys) v = rng.normal();
    LossGrad lg = loss_ground_grad(m, ham, ys, cfg.batch, cfg.n_threads);
    if (!std::isfinite(lg.loss))
      throw NonFinite("prepare_initial_tunneling: loss diverged");
    opt.step(m.params, lg.grad);
    if ((step + 1) % cfg.check_every == 0) {
      if (flow_fidelity_vs_gaussian(m, cfg.fid_grid) >= cfg.fidelity_stop) break;
    }
  }
  const double fid = flow_fidelity_vs_gaussian(m, cfg.fid_grid);
  if (fid <= cfg.fidelity_gate)
    throw InitialStateNotReached("fidelity " + std::to_string(fid) +
                                 " below gate " + std::to_string(cfg.fidelity_gate));
  return m;
}

}  // namespace nfqs
