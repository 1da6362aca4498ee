#pragma once

#include <complex>
#include <span>
#include <vector>

#include "nfqs/flow.hpp"
#include "nfqs/hamiltonian.hpp"

namespace nfqs {

// 1D spatial lattice for the exact reference solver. The domain must hold the
// whole wavefunction: boundary amplitudes are guarded during evolution.
struct Grid1D {
  double x_min = -6.0;
  double x_max = 12.0;
  int n_points = 2048;

  double dx() const { return (x_max - x_min) / (n_points - 1); }
  double x(int i) const { return x_min + i * dx(); }
  void validate() const {
    if (n_points < 16 || x_max <= x_min) throw ConfigError("Grid1D: bad grid");
  }
};

struct GridState {
  Grid1D grid;
  std::vector<std::complex<double>> psi;
  double t = 0.0;

  double norm() const;
  void normalize();
};

std::vector<double> grid_potential(const Grid1D& g, const HamiltonianSpec& ham);

struct GridGround {
  double energy = 0.0;
  GridState state;
};

// Lowest eigenpair of H = -D2/2 + diag(V) by shifted inverse iteration.
GridGround grid_ground_state(const HamiltonianSpec& ham, const Grid1D& g);

// Crank-Nicolson steps; unconditionally unitary, dt_grid <= 1e-3 enforced.
void grid_evolve(GridState& s, const HamiltonianSpec& ham, double dt_grid,
                 int n_steps);

double grid_theta(const GridState& s, double x0);
double grid_mean_x(const GridState& s);
double grid_energy(const GridState& s, const HamiltonianSpec& ham);

// Trapezoid inner product <a|b> = integral conj(a) b dx.
std::complex<double> grid_overlap(const GridState& a, const GridState& b);

// psi(x_i) from a 1D flow, trapezoid-normalized onto the grid.
GridState grid_state_from_flow(const FlowModel& m, const Grid1D& g);

// Normalized gaussian pi^{-1/4} exp(-(x-center)^2/2).
GridState grid_state_gaussian(const Grid1D& g, double center);

}  // namespace nfqs
