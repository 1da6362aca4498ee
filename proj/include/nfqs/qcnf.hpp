#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "nfqs/errors.hpp"
#include "nfqs/mlp.hpp"
#include "nfqs/tape.hpp"

namespace nfqs {

// Continuous normalizing flow with a phase channel. One network F maps
// z -> (dz/dt, dtheta/dt); log det J evolves as the divergence of the flow
// components, computed exactly with one directional probe per coordinate.
// Fixed-step RK4 on t in [0,1]; gradients go through the discrete steps.
struct QcnfArch {
  int n_dof = 0;
  MlpSpec f_spec;
  int n_steps = 16;
  double guard = 1e100;

  int param_count() const { return f_spec.param_count(); }

  void validate() const {
    if (n_dof < 1) throw ConfigError("QcnfArch: n_dof must be >= 1");
    if (n_steps < 1) throw ConfigError("QcnfArch: n_steps must be >= 1");
    f_spec.validate();
    if (f_spec.in_dim != n_dof || f_spec.out_dim != n_dof + 1)
      throw ConfigError("QcnfArch: vector field must map N -> N+1");
  }
};

inline QcnfArch make_qcnf_arch(int n_dof, int hidden_width = 32, int n_steps = 16) {
  QcnfArch a;
  a.n_dof = n_dof;
  a.f_spec = MlpSpec{n_dof, n_dof + 1, {hidden_width}, Activation::kTanh, true};
  a.n_steps = n_steps;
  a.validate();
  return a;
}

template <class S>
struct QcnfWork {
  std::vector<S> zp, fout, s0, st, k1, k2, k3, k4, x, y;
  MlpScratch<S> scr;
  S log_det{}, log_abs{}, phase{};
};

// State layout: [z_0..z_{n-1}, logdet, theta].
template <class S>
void qcnf_rhs(const QcnfArch& a, std::span<const S> params,
              const std::vector<S>& state, std::vector<S>& ds, QcnfWork<S>& w) {
  const int n = a.n_dof;
  w.zp.resize(n);
  w.fout.resize(n + 1);
  ds.resize(n + 2);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k)
      w.zp[k] = (k == j) ? probe_seed(state[k]) : state[k];
    mlp_apply<S>(a.f_spec, params, w.zp, w.fout, w.scr);
    if (j == 0) {
      for (int i = 0; i < n; ++i) ds[i] = probe_clear(w.fout[i]);
      ds[n + 1] = probe_clear(w.fout[n]);
      ds[n] = probe_take(w.fout[0]);
    } else {
      ds[n] += probe_take(w.fout[j]);
    }
  }
}

template <class S>
void qcnf_integrate(const QcnfArch& a, std::span<const S> params,
                    std::vector<S>& state, bool backward, QcnfWork<S>& w) {
  const double h = (backward ? -1.0 : 1.0) / a.n_steps;
  const int m = a.n_dof + 2;
  for (int step = 0; step < a.n_steps; ++step) {
    w.s0 = state;
    qcnf_rhs(a, params, state, w.k1, w);
    w.st.resize(m);
    for (int i = 0; i < m; ++i) w.st[i] = w.s0[i] + w.k1[i] * S(0.5 * h);
    qcnf_rhs(a, params, w.st, w.k2, w);
    for (int i = 0; i < m; ++i) w.st[i] = w.s0[i] + w.k2[i] * S(0.5 * h);
    qcnf_rhs(a, params, w.st, w.k3, w);
    for (int i = 0; i < m; ++i) w.st[i] = w.s0[i] + w.k3[i] * S(h);
    qcnf_rhs(a, params, w.st, w.k4, w);
    for (int i = 0; i < m; ++i)
      state[i] = w.s0[i] +
                 (w.k1[i] + w.k2[i] * S(2.0) + w.k3[i] * S(2.0) + w.k4[i]) * S(h / 6.0);
    for (int i = 0; i < m; ++i) {
      const double v = val0(state[i]);
      if (!std::isfinite(v) || std::fabs(v) > a.guard)
        throw NonFinite("qcnf state component " + std::to_string(i) + " at step " +
                        std::to_string(step));
    }
  }
}

// y -> x. Requires a probe slot in S (outer Dual layer).
template <class S>
void qcnf_forward(const QcnfArch& a, std::span<const S> params,
                  std::span<const S> y, QcnfWork<S>& w) {
  const int n = a.n_dof;
  std::vector<S> state(y.begin(), y.end());
  state.resize(n + 2, S(0.0));
  qcnf_integrate(a, params, state, false, w);
  w.x.assign(state.begin(), state.begin() + n);
  w.y.assign(y.begin(), y.end());
  w.log_det = state[n];
  w.phase = state[n + 1];
  S yy = S(0.0);
  for (int i = 0; i < n; ++i) yy += y[i] * y[i];
  w.log_abs = S(-0.25 * n * std::log(2.0 * M_PI)) - yy * S(0.25) - w.log_det * S(0.5);
}

// Pointwise evaluation at x: integrate backwards to the base point, picking
// up the same logdet/theta integrals along the reversed trajectory.
template <class S>
void qcnf_point_eval(const QcnfArch& a, std::span<const S> params,
                     std::span<const S> x, QcnfWork<S>& w) {
  const int n = a.n_dof;
  std::vector<S> state(x.begin(), x.end());
  state.resize(n + 2, S(0.0));
  qcnf_integrate(a, params, state, true, w);
  w.x.assign(x.begin(), x.end());
  w.y.assign(state.begin(), state.begin() + n);
  w.log_det = -state[n];
  w.phase = -state[n + 1];
  S yy = S(0.0);
  for (int i = 0; i < n; ++i) yy += w.y[i] * w.y[i];
  w.log_abs = S(-0.25 * n * std::log(2.0 * M_PI)) - yy * S(0.25) - w.log_det * S(0.5);
}

// Divergence of the flow components at z (double path, probe duals).
inline double qcnf_trace_hessian(const QcnfArch& a, std::span<const double> params,
                                 std::span<const double> z) {
  using S = Dual<double>;
  QcnfWork<S> w;
  std::vector<S> state(a.n_dof + 2, S(0.0));
  for (int i = 0; i < a.n_dof; ++i) state[i] = S(z[i]);
  std::vector<S> ds;
  std::vector<S> ps(params.size());
  for (size_t i = 0; i < params.size(); ++i) ps[i] = S(params[i]);
  qcnf_rhs(a, std::span<const S>(ps), state, ds, w);
  return val0(ds[a.n_dof]);
}

}  // namespace nfqs
