#pragma once

#include <span>
#include <utility>
#include <vector>

#include "nfqs/hamiltonian.hpp"
#include "nfqs/linalg.hpp"
#include "nfqs/qcnf.hpp"
#include "nfqs/qnvp.hpp"
#include "nfqs/seeding.hpp"

// Per-sample gradient-form local energy, generic over the scalar family.
// The flow runs with base-point jets; the chain rule g_x = J^{-T} g_y turns
// d/dy of (log|psi|, phase) into configuration-space gradients, all on the
// same scalar type so training gradients flow through the solve.

namespace nfqs {

template <class S>
struct LeBuf {
  std::vector<S> a, rhs, xv, yin;
};

template <class S>
std::pair<S, S> assemble_local_energy(int n, double mass, const std::vector<S>& x,
                                      const S& log_abs, const S& phase,
                                      const HamiltonianSpec& ham, LeBuf<S>& buf) {
  buf.a.resize(n * n);
  buf.rhs.resize(2 * n);
  buf.xv.resize(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) buf.a[j * n + i] = comp_extract(x[i], 1 + j);
    buf.rhs[j * 2 + 0] = comp_extract(log_abs, 1 + j);
    buf.rhs[j * 2 + 1] = comp_extract(phase, 1 + j);
  }
  lu_solve(buf.a, n, std::span<S>(buf.rhs), 2);
  S kin = S(0.0);
  for (int i = 0; i < n; ++i)
    kin += sq(buf.rhs[i * 2 + 0]) + sq(buf.rhs[i * 2 + 1]);
  kin = kin * S(0.5 / mass);
  for (int i = 0; i < n; ++i) buf.xv[i] = comp_extract(x[i], 0);
  S pot = potential_t<S>(ham, buf.xv);
  return {kin, pot};
}

// S carries base-point jets directly (Jet<D> or Var<Jet<D>>).
template <class S>
std::pair<S, S> qnvp_local_energy_t(const QnvpArch& a, std::span<const S> params,
                                    std::span<const double> y,
                                    const HamiltonianSpec& ham, QnvpWork<S>& w,
                                    LeBuf<S>& buf) {
  const int n = a.n_dof;
  buf.yin.resize(n);
  for (int i = 0; i < n; ++i) buf.yin[i] = SIO<S>::seeded(y[i], i);
  qnvp_forward<S>(a, params, buf.yin, w);
  return assemble_local_energy<S>(n, ham.mass(), w.x, w.log_abs, w.phase, ham, buf);
}

// S needs the probe slot on top of the jets (Dual<Jet<D>> family).
template <class S>
std::pair<S, S> qcnf_local_energy_t(const QcnfArch& a, std::span<const S> params,
                                    std::span<const double> y,
                                    const HamiltonianSpec& ham, QcnfWork<S>& w,
                                    LeBuf<S>& buf) {
  const int n = a.n_dof;
  buf.yin.resize(n);
  for (int i = 0; i < n; ++i) buf.yin[i] = SIO<S>::seeded(y[i], i);
  qcnf_forward<S>(a, params, buf.yin, w);
  return assemble_local_energy<S>(n, ham.mass(), w.x, w.log_abs, w.phase, ham, buf);
}

}  // namespace nfqs
