#pragma once

#include "nfqs/scalars.hpp"

namespace nfqs {

// Minimal complex-over-scalar type; std::complex is not specified for
// non-floating-point value types, and the flows only need a handful of ops.
template <class S>
struct Cplx {
  S re{}, im{};

  Cplx() = default;
  Cplx(const S& r) : re(r), im(S(0.0)) {}  // NOLINT
  Cplx(const S& r, const S& i) : re(r), im(i) {}
};

template <class S> Cplx<S> operator+(const Cplx<S>& a, const Cplx<S>& b) {
  return {a.re + b.re, a.im + b.im};
}
template <class S> Cplx<S> operator-(const Cplx<S>& a, const Cplx<S>& b) {
  return {a.re - b.re, a.im - b.im};
}
template <class S> Cplx<S> operator*(const Cplx<S>& a, const Cplx<S>& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
template <class S> Cplx<S> operator*(const S& a, const Cplx<S>& b) {
  return {a * b.re, a * b.im};
}
template <class S> Cplx<S> conj(const Cplx<S>& a) { return {a.re, S(0.0) - a.im}; }
template <class S> S abs2(const Cplx<S>& a) { return a.re * a.re + a.im * a.im; }

// exp(u + i phi)
template <class S> Cplx<S> polar_exp(const S& u, const S& phi) {
  using std::cos;
  using std::exp;
  using std::sin;
  S m = exp(u);
  return {m * cos(phi), m * sin(phi)};
}

}  // namespace nfqs
