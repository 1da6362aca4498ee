#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "nfqs/cplx.hpp"
#include "nfqs/errors.hpp"
#include "nfqs/flow.hpp"

namespace nfqs {

inline constexpr double kCoincidenceEps = 1e-10;

// Particles in a harmonic trap with a repulsive Yukawa pair interaction:
// V = sum_n (M w^2/2) |x_n|^2 + sum_{n<m} (g^2/r) e^{-mu r}.
struct TrapSpec {
  int n_particles = 3;
  int space_dim = 3;
  double mass = 1.0;
  double omega = 1.0;
  double yukawa_mass = 2.0;
  double g2 = 0.0;

  int n_dof() const { return n_particles * space_dim; }
  void validate() const {
    if (n_particles < 1 || space_dim < 1)
      throw ConfigError("TrapSpec: bad particle/space dimensions");
    if (mass <= 0 || omega <= 0 || yukawa_mass <= 0)
      throw ConfigError("TrapSpec: mass, omega, yukawa_mass must be positive");
  }
};

// One-dimensional tunneling potential: quadratic false vacuum at x=0
// (V ~ x^2/2), barrier near x ~ 2, lower well at x ~ b.
struct TunnelSpec {
  double a = 0.25;
  double b = 4.25;

  void validate() const {
    if (b <= 0) throw ConfigError("TunnelSpec: b must be positive");
  }
};

struct HarmonicSpec {
  int n_dof = 1;
  double mass = 1.0;
  double omega = 1.0;  // 0 turns the potential off

  void validate() const {
    if (n_dof < 1) throw ConfigError("HarmonicSpec: n_dof must be >= 1");
    if (mass <= 0 || omega < 0) throw ConfigError("HarmonicSpec: bad mass/omega");
  }
};

struct HamiltonianSpec {
  enum class Kind { kTrap, kTunnel, kHarmonic };
  Kind kind = Kind::kHarmonic;
  TrapSpec trap;
  TunnelSpec tunnel;
  HarmonicSpec harmonic;
  double v_offset = 0.0;  // constant energy shift

  static HamiltonianSpec make_trap(double g2, double yukawa_mass = 2.0) {
    HamiltonianSpec h;
    h.kind = Kind::kTrap;
    h.trap.g2 = g2;
    h.trap.yukawa_mass = yukawa_mass;
    h.validate();
    return h;
  }
  static HamiltonianSpec make_tunnel(double a = 0.25, double b = 4.25) {
    HamiltonianSpec h;
    h.kind = Kind::kTunnel;
    h.tunnel = {a, b};
    h.validate();
    return h;
  }
  static HamiltonianSpec make_harmonic(int n_dof, double omega = 1.0,
                                       double mass = 1.0) {
    HamiltonianSpec h;
    h.kind = Kind::kHarmonic;
    h.harmonic = {n_dof, mass, omega};
    h.validate();
    return h;
  }

  int n_dof() const {
    switch (kind) {
      case Kind::kTrap: return trap.n_dof();
      case Kind::kTunnel: return 1;
      default: return harmonic.n_dof;
    }
  }
  double mass() const {
    switch (kind) {
      case Kind::kTrap: return trap.mass;
      case Kind::kTunnel: return 1.0;
      default: return harmonic.mass;
    }
  }
  void validate() const {
    switch (kind) {
      case Kind::kTrap: trap.validate(); break;
      case Kind::kTunnel: tunnel.validate(); break;
      default: harmonic.validate(); break;
    }
  }
};

template <class S>
S trap_potential_t(const TrapSpec& sp, std::span<const S> x) {
  using std::exp;
  using std::sqrt;
  const int np = sp.n_particles, d = sp.space_dim;
  S v = S(0.0);
  for (int i = 0; i < np * d; ++i) v += x[i] * x[i];
  v = v * S(0.5 * sp.mass * sp.omega * sp.omega);
  if (sp.g2 != 0.0) {
    for (int n = 0; n < np; ++n) {
      for (int m = n + 1; m < np; ++m) {
        S r2 = S(0.0);
        for (int c = 0; c < d; ++c) r2 += sq(x[n * d + c] - x[m * d + c]);
        S r = sqrt(r2);
        if (val0(r) < kCoincidenceEps)
          throw CoincidentParticles("pair (" + std::to_string(n) + "," +
                                    std::to_string(m) + ") at r = " +
                                    std::to_string(val0(r)));
        v += S(sp.g2) * exp(r * S(-sp.yukawa_mass)) / r;
      }
    }
  }
  return v;
}

template <class S>
S tunnel_potential_t(const TunnelSpec& sp, const S& x) {
  const double b = sp.b;
  return x * x * sq(x - S(b)) * S(0.5 / (b * b)) - x * x * x * S(sp.a / (b * b * b));
}

template <class S>
S potential_t(const HamiltonianSpec& h, std::span<const S> x) {
  switch (h.kind) {
    case HamiltonianSpec::Kind::kTrap:
      return trap_potential_t<S>(h.trap, x) + S(h.v_offset);
    case HamiltonianSpec::Kind::kTunnel:
      return tunnel_potential_t<S>(h.tunnel, x[0]) + S(h.v_offset);
    default: {
      S v = S(h.v_offset);
      if (h.harmonic.omega > 0) {
        S r2 = S(0.0);
        for (int i = 0; i < h.harmonic.n_dof; ++i) r2 += x[i] * x[i];
        v += r2 * S(0.5 * h.harmonic.mass * h.harmonic.omega * h.harmonic.omega);
      }
      return v;
    }
  }
}

struct PotentialValue {
  double v = 0.0;
  std::vector<double> grad;
};

PotentialValue trap_potential(const TrapSpec& sp, std::span<const double> x);
PotentialValue tunnel_potential(const TunnelSpec& sp, double x);
PotentialValue potential_value(const HamiltonianSpec& h, std::span<const double> x);

// Gradient-form local energy density at x = f(y): (1/2M)|grad log psi|^2 and
// V(x); batch means of their sum estimate <psi|H|psi>.
std::pair<double, double> local_energy_terms(const FlowModel& flow,
                                             const HamiltonianSpec& ham,
                                             std::span<const double> y);

// (H psi)(x) / psi(x), Laplacian form; constant for eigenstates.
Cplx<double> local_energy_h(const FlowModel& flow, const HamiltonianSpec& ham,
                            std::span<const double> x);

// (H psi)(x) as a complex number.
Cplx<double> apply_H(const FlowModel& flow, const HamiltonianSpec& ham,
                     std::span<const double> x);

}  // namespace nfqs
