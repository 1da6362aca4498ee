#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "nfqs/errors.hpp"
#include "nfqs/scalars.hpp"

namespace nfqs {

// In-place LU solve with partial pivoting for the tiny dense systems that
// appear in flow Jacobians (n <= 9). Works on any tape/jet scalar; pivoting
// compares value components only.
template <class S>
void lu_solve(std::vector<S>& a, int n, std::span<S> rhs, int n_rhs) {
  std::vector<int> piv(n);
  for (int i = 0; i < n; ++i) piv[i] = i;
  for (int k = 0; k < n; ++k) {
    int best = k;
    double bestmag = std::fabs(val0(a[piv[k] * n + k]));
    for (int r = k + 1; r < n; ++r) {
      const double m = std::fabs(val0(a[piv[r] * n + k]));
      if (m > bestmag) {
        bestmag = m;
        best = r;
      }
    }
    if (bestmag == 0.0) throw Error("lu_solve: singular matrix");
    std::swap(piv[k], piv[best]);
    const S pivot = a[piv[k] * n + k];
    for (int r = k + 1; r < n; ++r) {
      S f = a[piv[r] * n + k] / pivot;
      a[piv[r] * n + k] = f;
      for (int c = k + 1; c < n; ++c) a[piv[r] * n + c] -= f * a[piv[k] * n + c];
      for (int j = 0; j < n_rhs; ++j) rhs[piv[r] * n_rhs + j] -= f * rhs[piv[k] * n_rhs + j];
    }
  }
  // back substitution into pivot order, then unpermute
  std::vector<S> x(n * n_rhs);
  for (int i = n - 1; i >= 0; --i) {
    for (int j = 0; j < n_rhs; ++j) {
      S acc = rhs[piv[i] * n_rhs + j];
      for (int c = i + 1; c < n; ++c) acc -= a[piv[i] * n + c] * x[c * n_rhs + j];
      x[i * n_rhs + j] = acc / a[piv[i] * n + i];
    }
  }
  for (int i = 0; i < n * n_rhs; ++i) rhs[i] = x[i];
}

// log|det A| of a plain double matrix (used by finite-difference oracles).
inline double log_abs_det(std::vector<double> a, int n) {
  double ld = 0.0;
  for (int k = 0; k < n; ++k) {
    int best = k;
    for (int r = k + 1; r < n; ++r)
      if (std::fabs(a[r * n + k]) > std::fabs(a[best * n + k])) best = r;
    if (a[best * n + k] == 0.0) throw Error("log_abs_det: singular matrix");
    if (best != k)
      for (int c = 0; c < n; ++c) std::swap(a[k * n + c], a[best * n + c]);
    ld += std::log(std::fabs(a[k * n + k]));
    for (int r = k + 1; r < n; ++r) {
      const double f = a[r * n + k] / a[k * n + k];
      for (int c = k; c < n; ++c) a[r * n + c] -= f * a[k * n + c];
    }
  }
  return ld;
}

// Thomas algorithm for tridiagonal systems; diag/off are not modified.
template <class T>
void tridiag_solve(std::span<const T> diag, std::span<const T> lower,
                   std::span<const T> upper, std::vector<T>& rhs) {
  const int n = static_cast<int>(diag.size());
  std::vector<T> cp(n);
  cp[0] = upper[0] / diag[0];
  rhs[0] = rhs[0] / diag[0];
  for (int i = 1; i < n; ++i) {
    const T m = diag[i] - lower[i - 1] * cp[i - 1];
    if (i < n - 1) cp[i] = upper[i] / m;
    rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / m;
  }
  for (int i = n - 2; i >= 0; --i) rhs[i] -= cp[i] * rhs[i + 1];
}

}  // namespace nfqs
