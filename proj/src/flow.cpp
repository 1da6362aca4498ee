#include "nfqs/flow.hpp"

#include <cmath>

#include "nfqs/linalg.hpp"
#include "nfqs/seeding.hpp"

namespace nfqs {

FlowModel make_qnvp_model(int n_dof, int depth, int hidden_width) {
  FlowModel m;
  m.kind = FlowKind::kQnvp;
  m.qnvp = make_qnvp_arch(n_dof, depth, hidden_width);
  m.params.assign(m.qnvp.param_count(), 0.0);
  return m;
}

FlowModel make_qcnf_model(int n_dof, int hidden_width, int n_steps) {
  FlowModel m;
  m.kind = FlowKind::kQcnf;
  m.qcnf = make_qcnf_arch(n_dof, hidden_width, n_steps);
  m.params.assign(m.qcnf.param_count(), 0.0);
  return m;
}

void init_flow_params(FlowModel& m, double scale, Rng& rng) {
  if (m.kind == FlowKind::kQnvp) {
    if (scale <= 0) scale = m.qnvp.default_init_scale();
    m.params.clear();
    for (int l = 0; l < m.qnvp.depth; ++l) {
      auto ps = mlp_init(m.qnvp.s_spec, scale, rng);
      auto pt = mlp_init(m.qnvp.t_spec, scale, rng);
      m.params.insert(m.params.end(), ps.begin(), ps.end());
      m.params.insert(m.params.end(), pt.begin(), pt.end());
    }
  } else {
    if (scale <= 0) scale = 0.1;
    m.params = mlp_init(m.qcnf.f_spec, scale, rng);
  }
}

PsiEval psi_forward(const FlowModel& m, std::span<const double> y) {
  PsiEval e;
  if (m.kind == FlowKind::kQnvp) {
    QnvpWork<double> w;
    qnvp_forward<double>(m.qnvp, m.params, y, w);
    e.x = w.x;
    e.y = w.y;
    e.log_abs = w.log_abs;
    e.phase = w.phase;
    e.log_det = w.log_det;
  } else {
    using S = Dual<double>;
    QcnfWork<S> w;
    std::vector<S> ys(y.size());
    std::vector<S> ps(m.params.size());
    for (size_t i = 0; i < y.size(); ++i) ys[i] = SIO<S>::input(y[i]);
    for (size_t i = 0; i < m.params.size(); ++i) ps[i] = SIO<S>::input(m.params[i]);
    qcnf_forward<S>(m.qcnf, ps, ys, w);
    e.x.resize(w.x.size());
    e.y.assign(y.begin(), y.end());
    for (size_t i = 0; i < w.x.size(); ++i) e.x[i] = val0(w.x[i]);
    e.log_abs = val0(w.log_abs);
    e.phase = val0(w.phase);
    e.log_det = val0(w.log_det);
  }
  return e;
}

PsiEval psi_at(const FlowModel& m, std::span<const double> x) {
  PsiEval e;
  if (m.kind == FlowKind::kQnvp) {
    QnvpWork<double> w;
    qnvp_point_eval<double>(m.qnvp, m.params, x, w);
    e.x.assign(x.begin(), x.end());
    e.y = w.y;
    e.log_abs = w.log_abs;
    e.phase = w.phase;
    e.log_det = w.log_det;
  } else {
    using S = Dual<double>;
    QcnfWork<S> w;
    std::vector<S> xs(x.size());
    std::vector<S> ps(m.params.size());
    for (size_t i = 0; i < x.size(); ++i) xs[i] = SIO<S>::input(x[i]);
    for (size_t i = 0; i < m.params.size(); ++i) ps[i] = SIO<S>::input(m.params[i]);
    qcnf_point_eval<S>(m.qcnf, ps, xs, w);
    e.x.assign(x.begin(), x.end());
    e.y.resize(w.y.size());
    for (size_t i = 0; i < w.y.size(); ++i) e.y[i] = val0(w.y[i]);
    e.log_abs = val0(w.log_abs);
    e.phase = val0(w.phase);
    e.log_det = val0(w.log_det);
  }
  return e;
}

Cplx<double> psi_value_at(const FlowModel& m, std::span<const double> x) {
  const PsiEval e = psi_at(m, x);
  return polar_exp(e.log_abs, e.phase);
}

SampleBatch sample_batch(const FlowModel& m, int n, Rng& rng) {
  const int nd = m.n_dof();
  SampleBatch b;
  b.n = n;
  b.n_dof = nd;
  b.x.resize(static_cast<size_t>(n) * nd);
  b.y.resize(static_cast<size_t>(n) * nd);
  b.log_abs.resize(n);
  b.phase.resize(n);
  std::vector<double> y(nd);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < nd; ++j) y[j] = rng.normal();
    PsiEval e = psi_forward(m, y);
    for (int j = 0; j < nd; ++j) {
      b.y[i * nd + j] = y[j];
      b.x[i * nd + j] = e.x[j];
    }
    b.log_abs[i] = e.log_abs;
    b.phase[i] = e.phase;
  }
  return b;
}

double qnvp_logdet_discrepancy(const FlowModel& m, std::span<const double> y,
                               double fd_step) {
  if (m.kind != FlowKind::kQnvp)
    throw ConfigError("qnvp_logdet_discrepancy: QNVP models only");
  const int n = m.n_dof();
  std::vector<double> jac(n * n);
  std::vector<double> yp(y.begin(), y.end()), ym(y.begin(), y.end());
  for (int j = 0; j < n; ++j) {
    yp[j] += fd_step;
    ym[j] -= fd_step;
    const PsiEval ep = psi_forward(m, yp);
    const PsiEval em = psi_forward(m, ym);
    for (int i = 0; i < n; ++i)
      jac[i * n + j] = (ep.x[i] - em.x[i]) / (2 * fd_step);
    yp[j] = y[j];
    ym[j] = y[j];
  }
  const double fd_logdet = log_abs_det(jac, n);
  const PsiEval e = psi_forward(m, y);
  return std::fabs(e.log_det - fd_logdet);
}

double qcnf_logdet_jacobian_ode(const FlowModel& m, std::span<const double> y) {
  if (m.kind != FlowKind::kQcnf)
    throw ConfigError("qcnf_logdet_jacobian_ode: QCNF models only");
  const int n = m.n_dof();
  using S = Dual<double>;
  std::vector<S> ps(m.params.size());
  for (size_t i = 0; i < m.params.size(); ++i) ps[i] = S(m.params[i]);
  MlpScratch<S> scr;
  std::vector<S> zin(n), fout(n + 1);
  std::vector<double> hmat(n * n);

  // state: z (n) followed by J (n x n, row-major)
  const int msz = n + n * n;
  std::vector<double> state(msz, 0.0), s0(msz), st(msz);
  std::vector<double> k1(msz), k2(msz), k3(msz), k4(msz);
  for (int i = 0; i < n; ++i) state[i] = y[i];
  for (int i = 0; i < n; ++i) state[n + i * n + i] = 1.0;

  auto rhs = [&](const std::vector<double>& s, std::vector<double>& d) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) zin[k] = S{s[k], k == j ? 1.0 : 0.0};
      mlp_apply<S>(m.qcnf.f_spec, ps, zin, fout, scr);
      for (int i = 0; i < n; ++i) hmat[i * n + j] = fout[i].d;
      if (j == 0)
        for (int i = 0; i < n; ++i) d[i] = fout[i].v;
    }
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < n; ++c) {
        double acc = 0.0;
        for (int k = 0; k < n; ++k) acc += hmat[i * n + k] * s[n + k * n + c];
        d[n + i * n + c] = acc;
      }
  };

  const double h = 1.0 / m.qcnf.n_steps;
  for (int step = 0; step < m.qcnf.n_steps; ++step) {
    s0 = state;
    rhs(state, k1);
    for (int i = 0; i < msz; ++i) st[i] = s0[i] + 0.5 * h * k1[i];
    rhs(st, k2);
    for (int i = 0; i < msz; ++i) st[i] = s0[i] + 0.5 * h * k2[i];
    rhs(st, k3);
    for (int i = 0; i < msz; ++i) st[i] = s0[i] + h * k3[i];
    rhs(st, k4);
    for (int i = 0; i < msz; ++i)
      state[i] = s0[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  std::vector<double> jac(state.begin() + n, state.end());
  return log_abs_det(jac, n);
}

std::vector<double> flow_logabs_param_grad(const FlowModel& m,
                                           std::span<const double> y) {
  std::vector<double> g(m.params.size(), 0.0);
  if (m.kind == FlowKind::kQnvp) {
    using A = double;
    Tape<A> tape;
    TapeScope<A> scope(tape);
    std::vector<Var<A>> ps;
    ps.reserve(m.params.size());
    for (double p : m.params) ps.push_back(Var<A>::leaf(A(p)));
    std::vector<Var<A>> ys(y.size());
    for (size_t i = 0; i < y.size(); ++i) ys[i] = SIO<Var<A>>::input(y[i]);
    QnvpWork<Var<A>> w;
    qnvp_forward<Var<A>>(m.qnvp, ps, ys, w);
    tape.backward(w.log_abs.i, g);
  } else {
    using A = Dual<double>;
    Tape<A> tape;
    TapeScope<A> scope(tape);
    std::vector<Var<A>> ps;
    ps.reserve(m.params.size());
    for (double p : m.params) ps.push_back(Var<A>::leaf(A(p)));
    std::vector<Var<A>> ys(y.size());
    for (size_t i = 0; i < y.size(); ++i) ys[i] = SIO<Var<A>>::input(y[i]);
    QcnfWork<Var<A>> w;
    qcnf_forward<Var<A>>(m.qcnf, ps, ys, w);
    tape.backward(w.log_abs.i, g);
  }
  return g;
}

PointDerivs psi_point_derivs(const FlowModel& m, std::span<const double> x,
                             int coord) {
  PointDerivs d;
  const int n = m.n_dof();
  if (m.kind == FlowKind::kQnvp) {
    using S = Jet2;
    QnvpWork<S> w;
    std::vector<S> xs(n);
    std::vector<S> ps(m.params.size());
    for (int i = 0; i < n; ++i)
      xs[i] = (i == coord) ? SIO<S>::seeded(x[i], 0) : SIO<S>::input(x[i]);
    for (size_t i = 0; i < m.params.size(); ++i) ps[i] = SIO<S>::input(m.params[i]);
    qnvp_point_eval<S>(m.qnvp, ps, xs, w);
    d.u = w.log_abs.f;
    d.u1 = w.log_abs.d1;
    d.u2 = w.log_abs.d2;
    d.phi = w.phase.f;
    d.phi1 = w.phase.d1;
    d.phi2 = w.phase.d2;
    d.y.resize(n);
    for (int i = 0; i < n; ++i) d.y[i] = val0(w.y[i]);
  } else {
    using S = Dual<Jet2>;
    QcnfWork<S> w;
    std::vector<S> xs(n);
    std::vector<S> ps(m.params.size());
    for (int i = 0; i < n; ++i)
      xs[i] = (i == coord) ? SIO<S>::seeded(x[i], 0) : SIO<S>::input(x[i]);
    for (size_t i = 0; i < m.params.size(); ++i) ps[i] = SIO<S>::input(m.params[i]);
    qcnf_point_eval<S>(m.qcnf, ps, xs, w);
    d.u = get_comp(w.log_abs, 0);
    d.u1 = get_comp(w.log_abs, 1);
    d.u2 = get_comp(w.log_abs, 2);
    d.phi = get_comp(w.phase, 0);
    d.phi1 = get_comp(w.phase, 1);
    d.phi2 = get_comp(w.phase, 2);
    d.y.resize(n);
    for (int i = 0; i < n; ++i) d.y[i] = val0(w.y[i]);
  }
  return d;
}

}  // namespace nfqs
