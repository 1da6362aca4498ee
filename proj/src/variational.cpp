#include "nfqs/variational.hpp"

#include <cmath>

#include <memory>

#include "nfqs/adam.hpp"
#include "nfqs/local_energy.hpp"
#include "nfqs/threading.hpp"

namespace nfqs {

namespace {

constexpr int kChunk = 16;

template <int D>
struct QnvpGradCtx {
  using A = Jet<D>;
  using S = Var<A>;
  Tape<A> tape;
  QnvpWork<S> w;
  LeBuf<S> buf;
  std::vector<S> ps;
  std::vector<double> g;
};

template <int D>
LossGrad qnvp_loss_grad(const FlowModel& m, const HamiltonianSpec& ham,
                        std::span<const double> ys, int n, int n_threads) {
  using Ctx = QnvpGradCtx<D>;
  using A = typename Ctx::A;
  using S = typename Ctx::S;
  const int nd = m.n_dof();
  const int P = m.n_params();
  if (n_threads <= 0) n_threads = default_threads();
  std::vector<std::unique_ptr<Ctx>> ctxs;
  for (int t = 0; t < n_threads; ++t) ctxs.push_back(std::make_unique<Ctx>());

  std::vector<double> out(P + 1);
  parallel_chunk_reduce(
      n, kChunk, P + 1, n_threads, out,
      [&](int tid, int i, std::span<double> slot) {
        Ctx& c = *ctxs[tid];
        c.tape.reset();
        TapeScope<A> scope(c.tape);
        c.ps.clear();
        c.ps.reserve(P);
        for (int k = 0; k < P; ++k) c.ps.push_back(S::leaf(A(m.params[k])));
        auto [kin, pot] = qnvp_local_energy_t<S>(
            m.qnvp, c.ps, ys.subspan(static_cast<size_t>(i) * nd, nd), ham, c.w,
            c.buf);
        S loss = kin + pot;
        c.g.assign(P, 0.0);
        c.tape.backward(loss.i, c.g);
        for (int k = 0; k < P; ++k) slot[k] += c.g[k];
        slot[P] += val0(loss);
      });
  LossGrad r;
  r.grad.assign(out.begin(), out.begin() + P);
  for (double& g : r.grad) g /= n;
  r.loss = out[P] / n;
  return r;
}

template <int D>
struct QcnfGradCtx {
  using A = Dual<Jet<D>>;
  using S = Var<A>;
  Tape<A> tape;
  QcnfWork<S> w;
  LeBuf<S> buf;
  std::vector<S> ps;
  std::vector<double> g;
};

template <int D>
LossGrad qcnf_loss_grad(const FlowModel& m, const HamiltonianSpec& ham,
                        std::span<const double> ys, int n, int n_threads) {
  using Ctx = QcnfGradCtx<D>;
  using A = typename Ctx::A;
  using S = typename Ctx::S;
  const int nd = m.n_dof();
  const int P = m.n_params();
  if (n_threads <= 0) n_threads = default_threads();
  std::vector<std::unique_ptr<Ctx>> ctxs;
  for (int t = 0; t < n_threads; ++t) ctxs.push_back(std::make_unique<Ctx>());

  std::vector<double> out(P + 1);
  parallel_chunk_reduce(
      n, kChunk, P + 1, n_threads, out,
      [&](int tid, int i, std::span<double> slot) {
        Ctx& c = *ctxs[tid];
        c.tape.reset();
        TapeScope<A> scope(c.tape);
        c.ps.clear();
        c.ps.reserve(P);
        for (int k = 0; k < P; ++k) c.ps.push_back(S::leaf(A(m.params[k])));
        auto [kin, pot] = qcnf_local_energy_t<S>(
            m.qcnf, c.ps, ys.subspan(static_cast<size_t>(i) * nd, nd), ham, c.w,
            c.buf);
        S loss = kin + pot;
        c.g.assign(P, 0.0);
        c.tape.backward(loss.i, c.g);
        for (int k = 0; k < P; ++k) slot[k] += c.g[k];
        slot[P] += val0(loss);
      });
  LossGrad r;
  r.grad.assign(out.begin(), out.begin() + P);
  for (double& g : r.grad) g /= n;
  r.loss = out[P] / n;
  return r;
}

}  // namespace

double loss_ground(const FlowModel& flow, const HamiltonianSpec& ham,
                   const SampleBatch& batch) {
  double acc = 0.0;
  for (int i = 0; i < batch.n; ++i) {
    auto [k, p] = local_energy_terms(flow, ham, batch.yi(i));
    acc += k + p;
  }
  return acc / batch.n;
}

LossGrad loss_ground_grad(const FlowModel& flow, const HamiltonianSpec& ham,
                          std::span<const double> ys, int n_samples,
                          int n_threads) {
  const int nd = flow.n_dof();
  if (nd != ham.n_dof())
    throw DimensionMismatch("loss_ground_grad: flow and hamiltonian disagree");
  if (flow.kind == FlowKind::kQnvp) {
    switch (nd) {
      case 2: return qnvp_loss_grad<2>(flow, ham, ys, n_samples, n_threads);
      case 3: return qnvp_loss_grad<3>(flow, ham, ys, n_samples, n_threads);
      case 4: return qnvp_loss_grad<4>(flow, ham, ys, n_samples, n_threads);
      case 5: return qnvp_loss_grad<5>(flow, ham, ys, n_samples, n_threads);
      case 6: return qnvp_loss_grad<6>(flow, ham, ys, n_samples, n_threads);
      case 7: return qnvp_loss_grad<7>(flow, ham, ys, n_samples, n_threads);
      case 8: return qnvp_loss_grad<8>(flow, ham, ys, n_samples, n_threads);
      case 9: return qnvp_loss_grad<9>(flow, ham, ys, n_samples, n_threads);
      default: throw ConfigError("loss_ground_grad: unsupported n_dof for QNVP");
    }
  }
  switch (nd) {
    case 1: return qcnf_loss_grad<1>(flow, ham, ys, n_samples, n_threads);
    case 2: return qcnf_loss_grad<2>(flow, ham, ys, n_samples, n_threads);
    default:
      throw ConfigError(
          "loss_ground_grad: QCNF training supported for n_dof <= 2");
  }
}

TrainResult train_ground(const FlowModel& flow0, const HamiltonianSpec& ham,
                         const TrainConfig& cfg) {
  cfg.validate();
  TrainResult res;
  res.model = flow0;
  res.model.validate();
  const int nd = res.model.n_dof();
  const int P = res.model.n_params();
  Rng rng(cfg.seed);
  Adam opt(P, {cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});
  std::vector<double> ys(static_cast<size_t>(cfg.batch) * nd);
  for (int step = 0; step < cfg.steps; ++step) {
    for (auto& v : ys) v = rng.normal();
    LossGrad lg = loss_ground_grad(res.model, ham, ys, cfg.batch, cfg.n_threads);
    if (!std::isfinite(lg.loss))
      throw NonFinite("train_ground: loss diverged at step " + std::to_string(step));
    if (step % cfg.record_every == 0 || step == cfg.steps - 1) {
      res.curve.step.push_back(step);
      res.curve.loss.push_back(lg.loss);
    }
    opt.step(res.model.params, lg.grad);
  }
  return res;
}

namespace {

struct EvalCtx {
  // per-thread embedded parameters and work areas for both flow kinds
  QnvpWork<double> qw_fwd;
  QnvpWork<Jet2> qw_pt;
  QcnfWork<Dual<double>> cw_fwd;
  QcnfWork<Dual<Jet2>> cw_pt;
  std::vector<Jet2> ps_j2, xs_j2;
  std::vector<Dual<Jet2>> ps_dj2, xs_dj2;
  std::vector<Dual<double>> ps_dd, ys_dd;
  std::vector<double> ybuf, xbuf;
};

// Re (H psi)/psi at the sample mapped from base point y.
double eval_local_energy(const FlowModel& m, const HamiltonianSpec& ham,
                         std::span<const double> y, EvalCtx& c) {
  const int nd = m.n_dof();
  c.xbuf.resize(nd);
  if (m.kind == FlowKind::kQnvp) {
    qnvp_forward<double>(m.qnvp, std::span<const double>(m.params), y, c.qw_fwd);
    for (int i = 0; i < nd; ++i) c.xbuf[i] = c.qw_fwd.x[i];
  } else {
    c.ys_dd.resize(nd);
    for (int i = 0; i < nd; ++i) c.ys_dd[i] = Dual<double>(y[i]);
    if (c.ps_dd.empty()) {
      c.ps_dd.resize(m.params.size());
      for (size_t i = 0; i < m.params.size(); ++i) c.ps_dd[i] = Dual<double>(m.params[i]);
    }
    qcnf_forward<Dual<double>>(m.qcnf, c.ps_dd, c.ys_dd, c.cw_fwd);
    for (int i = 0; i < nd; ++i) c.xbuf[i] = val0(c.cw_fwd.x[i]);
  }
  // laplacian of log psi plus squared gradient, coordinate by coordinate
  Cplx<double> lap{0.0, 0.0};
  if (m.kind == FlowKind::kQnvp) {
    if (c.ps_j2.empty()) {
      c.ps_j2.resize(m.params.size());
      for (size_t i = 0; i < m.params.size(); ++i) c.ps_j2[i] = Jet2(m.params[i]);
    }
    c.xs_j2.resize(nd);
    for (int coord = 0; coord < nd; ++coord) {
      for (int i = 0; i < nd; ++i)
        c.xs_j2[i] = (i == coord) ? Jet2::seeded(c.xbuf[i]) : Jet2(c.xbuf[i]);
      qnvp_point_eval<Jet2>(m.qnvp, c.ps_j2, c.xs_j2, c.qw_pt);
      const Cplx<double> g1{c.qw_pt.log_abs.d1, c.qw_pt.phase.d1};
      const Cplx<double> g2{c.qw_pt.log_abs.d2, c.qw_pt.phase.d2};
      lap = lap + g2 + g1 * g1;
    }
  } else {
    if (c.ps_dj2.empty()) {
      c.ps_dj2.resize(m.params.size());
      for (size_t i = 0; i < m.params.size(); ++i)
        c.ps_dj2[i] = SIO<Dual<Jet2>>::input(m.params[i]);
    }
    c.xs_dj2.resize(nd);
    for (int coord = 0; coord < nd; ++coord) {
      for (int i = 0; i < nd; ++i)
        c.xs_dj2[i] = (i == coord) ? SIO<Dual<Jet2>>::seeded(c.xbuf[i], 0)
                                   : SIO<Dual<Jet2>>::input(c.xbuf[i]);
      qcnf_point_eval<Dual<Jet2>>(m.qcnf, c.ps_dj2, c.xs_dj2, c.cw_pt);
      const Cplx<double> g1{get_comp(c.cw_pt.log_abs, 1), get_comp(c.cw_pt.phase, 1)};
      const Cplx<double> g2{get_comp(c.cw_pt.log_abs, 2), get_comp(c.cw_pt.phase, 2)};
      lap = lap + g2 + g1 * g1;
    }
  }
  const double v = val0(potential_t<double>(ham, c.xbuf));
  return v - 0.5 / ham.mass() * (lap.re);
}

}  // namespace

EnergyEstimate evaluate_energy(const FlowModel& flow, const HamiltonianSpec& ham,
                               int64_t n, Rng& rng, int n_threads) {
  if (n < 2) throw ConfigError("evaluate_energy: need at least 2 samples");
  const int nd = flow.n_dof();
  if (n_threads <= 0) n_threads = default_threads();
  std::vector<double> ys(static_cast<size_t>(n) * nd);
  for (auto& v : ys) v = rng.normal();

  std::vector<std::unique_ptr<EvalCtx>> ctxs;
  for (int t = 0; t < n_threads; ++t) ctxs.push_back(std::make_unique<EvalCtx>());

  // shift by the first sample to keep the variance accumulation stable
  const double e0 = eval_local_energy(
      flow, ham, std::span<const double>(ys).subspan(0, nd), *ctxs[0]);

  std::vector<double> out(2);
  parallel_chunk_reduce(
      static_cast<int>(n), 64, 2, n_threads, out,
      [&](int tid, int i, std::span<double> slot) {
        const double e = eval_local_energy(
            flow, ham, std::span<const double>(ys).subspan(static_cast<size_t>(i) * nd, nd),
            *ctxs[tid]);
        slot[0] += e - e0;
        slot[1] += (e - e0) * (e - e0);
      });
  EnergyEstimate est;
  est.n_samples = n;
  const double mean_d = out[0] / n;
  est.mean = e0 + mean_d;
  const double var = std::max(0.0, out[1] / n - mean_d * mean_d);
  est.spread = std::sqrt(var);
  est.std_error = est.spread / std::sqrt(static_cast<double>(n));
  return est;
}

}  // namespace nfqs
