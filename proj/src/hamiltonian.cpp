#include "nfqs/hamiltonian.hpp"

#include <cmath>

#include "nfqs/local_energy.hpp"

namespace nfqs {

PotentialValue trap_potential(const TrapSpec& sp, std::span<const double> x) {
  sp.validate();
  const int np = sp.n_particles, d = sp.space_dim;
  if (static_cast<int>(x.size()) != np * d)
    throw DimensionMismatch("trap_potential: expected " + std::to_string(np * d) +
                            " coordinates");
  PotentialValue out;
  out.grad.assign(np * d, 0.0);
  out.v = val0(trap_potential_t<double>(sp, x));
  const double k = sp.mass * sp.omega * sp.omega;
  for (int i = 0; i < np * d; ++i) out.grad[i] = k * x[i];
  if (sp.g2 != 0.0) {
    const double mu = sp.yukawa_mass;
    for (int n = 0; n < np; ++n) {
      for (int m = n + 1; m < np; ++m) {
        double r2 = 0;
        for (int c = 0; c < d; ++c) r2 += sq(x[n * d + c] - x[m * d + c]);
        const double r = std::sqrt(r2);
        // d/dr of (g^2/r) e^{-mu r}
        const double dvdr = -sp.g2 * std::exp(-mu * r) * (1.0 / r2 + mu / r);
        for (int c = 0; c < d; ++c) {
          const double u = (x[n * d + c] - x[m * d + c]) / r;
          out.grad[n * d + c] += dvdr * u;
          out.grad[m * d + c] -= dvdr * u;
        }
      }
    }
  }
  return out;
}

PotentialValue tunnel_potential(const TunnelSpec& sp, double x) {
  sp.validate();
  PotentialValue out;
  out.v = tunnel_potential_t<double>(sp, x);
  const double b = sp.b;
  out.grad = {x * (x - b) * (2 * x - b) / (b * b) - 3.0 * sp.a * x * x / (b * b * b)};
  return out;
}

PotentialValue potential_value(const HamiltonianSpec& h, std::span<const double> x) {
  switch (h.kind) {
    case HamiltonianSpec::Kind::kTrap:
      return trap_potential(h.trap, x);
    case HamiltonianSpec::Kind::kTunnel:
      return tunnel_potential(h.tunnel, x[0]);
    default: {
      PotentialValue out;
      out.v = val0(potential_t<double>(h, x));
      out.grad.assign(x.size(), 0.0);
      const double k = h.harmonic.mass * h.harmonic.omega * h.harmonic.omega;
      for (size_t i = 0; i < x.size(); ++i) out.grad[i] = k * x[i];
      return out;
    }
  }
}

namespace {

template <int D>
std::pair<double, double> le_qnvp(const FlowModel& m, const HamiltonianSpec& ham,
                                  std::span<const double> y) {
  using S = Jet<D>;
  QnvpWork<S> w;
  LeBuf<S> buf;
  std::vector<S> ps(m.params.size());
  for (size_t i = 0; i < m.params.size(); ++i) ps[i] = S(m.params[i]);
  auto [k, p] = qnvp_local_energy_t<S>(m.qnvp, std::span<const S>(ps), y, ham, w, buf);
  return {val0(k), val0(p)};
}

template <int D>
std::pair<double, double> le_qcnf(const FlowModel& m, const HamiltonianSpec& ham,
                                  std::span<const double> y) {
  using S = Dual<Jet<D>>;
  QcnfWork<S> w;
  LeBuf<S> buf;
  std::vector<S> ps(m.params.size());
  for (size_t i = 0; i < m.params.size(); ++i) ps[i] = SIO<S>::input(m.params[i]);
  auto [k, p] = qcnf_local_energy_t<S>(m.qcnf, std::span<const S>(ps), y, ham, w, buf);
  return {val0(k), val0(p)};
}

}  // namespace

std::pair<double, double> local_energy_terms(const FlowModel& flow,
                                             const HamiltonianSpec& ham,
                                             std::span<const double> y) {
  const int n = flow.n_dof();
  if (n != ham.n_dof())
    throw DimensionMismatch("local_energy_terms: flow and hamiltonian disagree");
  if (flow.kind == FlowKind::kQnvp) {
    switch (n) {
      case 2: return le_qnvp<2>(flow, ham, y);
      case 3: return le_qnvp<3>(flow, ham, y);
      case 4: return le_qnvp<4>(flow, ham, y);
      case 5: return le_qnvp<5>(flow, ham, y);
      case 6: return le_qnvp<6>(flow, ham, y);
      case 7: return le_qnvp<7>(flow, ham, y);
      case 8: return le_qnvp<8>(flow, ham, y);
      case 9: return le_qnvp<9>(flow, ham, y);
      default: throw ConfigError("local_energy_terms: unsupported n_dof");
    }
  }
  switch (n) {
    case 1: return le_qcnf<1>(flow, ham, y);
    case 2: return le_qcnf<2>(flow, ham, y);
    case 3: return le_qcnf<3>(flow, ham, y);
    case 4: return le_qcnf<4>(flow, ham, y);
    case 5: return le_qcnf<5>(flow, ham, y);
    case 6: return le_qcnf<6>(flow, ham, y);
    case 7: return le_qcnf<7>(flow, ham, y);
    case 8: return le_qcnf<8>(flow, ham, y);
    case 9: return le_qcnf<9>(flow, ham, y);
    default: throw ConfigError("local_energy_terms: unsupported n_dof");
  }
}

Cplx<double> local_energy_h(const FlowModel& flow, const HamiltonianSpec& ham,
                            std::span<const double> x) {
  const int n = flow.n_dof();
  Cplx<double> lap{0.0, 0.0};  // (laplacian psi)/psi
  for (int c = 0; c < n; ++c) {
    const PointDerivs d = psi_point_derivs(flow, x, c);
    const Cplx<double> g1{d.u1, d.phi1};
    const Cplx<double> g2{d.u2, d.phi2};
    lap = lap + g2 + g1 * g1;
  }
  const double v = val0(potential_t<double>(ham, x));
  return Cplx<double>{v, 0.0} - (0.5 / ham.mass()) * lap;
}

Cplx<double> apply_H(const FlowModel& flow, const HamiltonianSpec& ham,
                     std::span<const double> x) {
  const PsiEval e = psi_at(flow, x);
  const Cplx<double> psi = polar_exp(e.log_abs, e.phase);
  return psi * local_energy_h(flow, ham, x);
}

}  // namespace nfqs
