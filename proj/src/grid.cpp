#include "nfqs/grid.hpp"

#include <cmath>

#include "nfqs/linalg.hpp"

namespace nfqs {

double GridState::norm() const {
  const double dx = grid.dx();
  double acc = 0.0;
  for (int i = 0; i < grid.n_points; ++i) {
    const double w = (i == 0 || i == grid.n_points - 1) ? 0.5 : 1.0;
    acc += w * std::norm(psi[i]);
  }
  return acc * dx;
}

void GridState::normalize() {
  const double n = std::sqrt(norm());
  for (auto& v : psi) v /= n;
}

std::vector<double> grid_potential(const Grid1D& g, const HamiltonianSpec& ham) {
  if (ham.n_dof() != 1) throw ConfigError("grid_potential: 1D hamiltonians only");
  std::vector<double> v(g.n_points);
  for (int i = 0; i < g.n_points; ++i) {
    const double x[1] = {g.x(i)};
    v[i] = val0(potential_t<double>(ham, std::span<const double>(x, 1)));
  }
  return v;
}

namespace {

// (H psi) with the 3-point kinetic stencil, Dirichlet boundaries.
template <class T>
void apply_grid_h(const Grid1D& g, const std::vector<double>& v,
                  const std::vector<T>& in, std::vector<T>& out) {
  const int n = g.n_points;
  const double idx2 = 1.0 / (g.dx() * g.dx());
  out.resize(n);
  for (int i = 0; i < n; ++i) {
    T lap = in[i] * (-2.0);
    if (i > 0) lap += in[i - 1];
    if (i < n - 1) lap += in[i + 1];
    out[i] = in[i] * v[i] - 0.5 * idx2 * lap;
  }
}

}  // namespace

GridGround grid_ground_state(const HamiltonianSpec& ham, const Grid1D& g) {
  g.validate();
  const int n = g.n_points;
  const auto v = grid_potential(g, ham);
  double vmin = v[0];
  for (double vi : v) vmin = std::min(vmin, vi);
  const double shift = vmin - 1.0;
  const double idx2 = 1.0 / (g.dx() * g.dx());
  std::vector<double> diag(n), off(n - 1, -0.5 * idx2);
  for (int i = 0; i < n; ++i) diag[i] = v[i] + idx2 - shift;

  GridGround out;
  out.state.grid = g;
  out.state.psi.assign(n, {0.0, 0.0});
  // positive start overlaps the nodeless ground state
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) u[i] = std::exp(-0.5 * g.x(i) * g.x(i)) + 1e-3;

  std::vector<double> hu;
  double e_prev = 1e300;
  const int max_iters = 10000;
  for (int it = 0; it < max_iters; ++it) {
    tridiag_solve<double>(diag, off, off, u);
    double nrm = 0.0;
    for (double ui : u) nrm += ui * ui;
    nrm = std::sqrt(nrm * g.dx());
    for (double& ui : u) ui /= nrm;
    // Rayleigh quotient of the unshifted H
    apply_grid_h<double>(g, v, u, hu);
    double e = 0.0;
    for (int i = 0; i < n; ++i) e += u[i] * hu[i];
    e *= g.dx();
    if (std::fabs(e - e_prev) < 1e-14 * std::max(1.0, std::fabs(e))) {
      out.energy = e;
      for (int i = 0; i < n; ++i) out.state.psi[i] = u[i];
      out.state.normalize();
      return out;
    }
    e_prev = e;
  }
  throw Error("grid_ground_state: no convergence in 10^4 iterations");
}

void grid_evolve(GridState& s, const HamiltonianSpec& ham, double dt_grid,
                 int n_steps) {
  if (dt_grid > 1e-3 || dt_grid <= 0)
    throw ConfigError("grid_evolve: dt_grid must be in (0, 1e-3]");
  const Grid1D& g = s.grid;
  const int n = g.n_points;
  const auto v = grid_potential(g, ham);
  const double idx2 = 1.0 / (g.dx() * g.dx());
  using C = std::complex<double>;
  const C ihalf(0.0, 0.5 * dt_grid);
  // (1 + i dt H / 2) psi' = (1 - i dt H / 2) psi
  std::vector<C> diag(n), off(n - 1);
  for (int i = 0; i < n; ++i) diag[i] = C(1.0, 0.0) + ihalf * (v[i] + idx2);
  for (int i = 0; i < n - 1; ++i) off[i] = ihalf * (-0.5 * idx2);

  std::vector<C> rhs(n);
  for (int step = 0; step < n_steps; ++step) {
    for (int i = 0; i < n; ++i) {
      C lap = s.psi[i] * (-2.0);
      if (i > 0) lap += s.psi[i - 1];
      if (i < n - 1) lap += s.psi[i + 1];
      const C hpsi = s.psi[i] * v[i] - 0.5 * idx2 * lap;
      rhs[i] = s.psi[i] - C(0.0, 0.5 * dt_grid) * hpsi;
    }
    tridiag_solve<C>(diag, off, off, rhs);
    s.psi = rhs;
    s.t += dt_grid;
    if (std::abs(s.psi.front()) > 1e-8 || std::abs(s.psi.back()) > 1e-8)
      throw Error("grid_evolve: boundary amplitude guard violated at t = " +
                  std::to_string(s.t));
  }
}

double grid_theta(const GridState& s, double x0) {
  const Grid1D& g = s.grid;
  const double dx = g.dx();
  if (x0 <= g.x_min) return s.norm();
  if (x0 >= g.x_max) return 0.0;
  const int i0 = static_cast<int>(std::ceil((x0 - g.x_min) / dx));
  double acc = 0.0;
  for (int i = i0; i < g.n_points; ++i) {
    const double w = (i == i0 || i == g.n_points - 1) ? 0.5 : 1.0;
    acc += w * std::norm(s.psi[i]);
  }
  acc *= dx;
  // partial cell [x0, x_{i0}] by linear interpolation of the density
  const double xl = g.x(i0 - 1);
  const double f = (x0 - xl) / dx;
  const double dl = std::norm(s.psi[i0 - 1]), dr = std::norm(s.psi[i0]);
  const double d_at_x0 = dl + f * (dr - dl);
  acc += 0.5 * (d_at_x0 + dr) * (1.0 - f) * dx;
  return acc;
}

double grid_mean_x(const GridState& s) {
  const double dx = s.grid.dx();
  double acc = 0.0;
  for (int i = 0; i < s.grid.n_points; ++i) {
    const double w = (i == 0 || i == s.grid.n_points - 1) ? 0.5 : 1.0;
    acc += w * s.grid.x(i) * std::norm(s.psi[i]);
  }
  return acc * dx;
}

double grid_energy(const GridState& s, const HamiltonianSpec& ham) {
  const auto v = grid_potential(s.grid, ham);
  std::vector<std::complex<double>> hpsi;
  apply_grid_h<std::complex<double>>(s.grid, v, s.psi, hpsi);
  std::complex<double> acc(0.0, 0.0);
  for (int i = 0; i < s.grid.n_points; ++i)
    acc += std::conj(s.psi[i]) * hpsi[i];
  return acc.real() * s.grid.dx();
}

std::complex<double> grid_overlap(const GridState& a, const GridState& b) {
  std::complex<double> acc(0.0, 0.0);
  const int n = a.grid.n_points;
  for (int i = 0; i < n; ++i) {
    const double w = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    acc += w * std::conj(a.psi[i]) * b.psi[i];
  }
  return acc * a.grid.dx();
}

GridState grid_state_from_flow(const FlowModel& m, const Grid1D& g) {
  if (m.n_dof() != 1) throw ConfigError("grid_state_from_flow: 1D flows only");
  GridState s;
  s.grid = g;
  s.psi.resize(g.n_points);
  std::vector<double> x(1);
  for (int i = 0; i < g.n_points; ++i) {
    x[0] = g.x(i);
    const auto p = psi_value_at(m, x);
    s.psi[i] = {p.re, p.im};
  }
  s.normalize();
  return s;
}

GridState grid_state_gaussian(const Grid1D& g, double center) {
  GridState s;
  s.grid = g;
  s.psi.resize(g.n_points);
  const double c = std::pow(M_PI, -0.25);
  for (int i = 0; i < g.n_points; ++i) {
    const double d = g.x(i) - center;
    s.psi[i] = c * std::exp(-0.5 * d * d);
  }
  s.normalize();
  return s;
}

}  // namespace nfqs
