#pragma once

#include <array>
#include <cmath>
#include <cstdint>

// Forward-mode scalar algebras. All numerics in this library are written as
// templates over a scalar type S; substituting these types yields exact
// derivatives of the same computation:
//
//   Dual<T>   one directional derivative on top of T (used as a probe slot
//             for divergence terms),
//   Jet<D>    value plus D first-order directions (input Jacobians),
//   Jet2      value, d/dx and d2/dx2 for one spatial coordinate.
//
// mulT(p, a) is the transposed-multiplication used by the reverse-mode tape:
// for c = p*x it maps the covector a of c to the covector contribution of x.

namespace nfqs {

inline double val0(double x) { return x; }
constexpr int ncomp(double) { return 1; }
inline double get_comp(double x, int) { return x; }
inline void add_comp(double& x, int, double v) { x += v; }
inline double mulT(double p, double a) { return p * a; }

// ---------------------------------------------------------------------------
// Dual
// ---------------------------------------------------------------------------

template <class T>
struct Dual {
  T v{};
  T d{};

  Dual() = default;
  Dual(double x) : v(x), d() {}  // NOLINT: implicit scalar embedding
  Dual(const T& v_, const T& d_) : v(v_), d(d_) {}
};

template <class T> double val0(const Dual<T>& x) { return val0(x.v); }
template <class T> constexpr int ncomp(const Dual<T>& x) { return 2 * ncomp(x.v); }
template <class T> double get_comp(const Dual<T>& x, int k) {
  const int n = ncomp(x.v);
  return k < n ? get_comp(x.v, k) : get_comp(x.d, k - n);
}
template <class T> void add_comp(Dual<T>& x, int k, double v) {
  const int n = ncomp(x.v);
  if (k < n) add_comp(x.v, k, v); else add_comp(x.d, k - n, v);
}

template <class T> Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }
template <class T> Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
  return {a.v + b.v, a.d + b.d};
}
template <class T> Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
  return {a.v - b.v, a.d - b.d};
}
template <class T> Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
  return {a.v * b.v, a.v * b.d + a.d * b.v};
}
template <class T> Dual<T> operator/(const Dual<T>& a, const Dual<T>& b) {
  T q = a.v / b.v;
  return {q, (a.d - q * b.d) / b.v};
}
template <class T> Dual<T> operator+(const Dual<T>& a, double b) { return {a.v + T(b), a.d}; }
template <class T> Dual<T> operator+(double a, const Dual<T>& b) { return b + a; }
template <class T> Dual<T> operator-(const Dual<T>& a, double b) { return {a.v - T(b), a.d}; }
template <class T> Dual<T> operator-(double a, const Dual<T>& b) { return {T(a) - b.v, -b.d}; }
template <class T> Dual<T> operator*(const Dual<T>& a, double b) { return {a.v * T(b), a.d * T(b)}; }
template <class T> Dual<T> operator*(double a, const Dual<T>& b) { return b * a; }
template <class T> Dual<T> operator/(const Dual<T>& a, double b) { return {a.v / T(b), a.d / T(b)}; }
template <class T> Dual<T> operator/(double a, const Dual<T>& b) { return Dual<T>(a) / b; }
template <class T> Dual<T>& operator+=(Dual<T>& a, const Dual<T>& b) { a = a + b; return a; }
template <class T> Dual<T>& operator-=(Dual<T>& a, const Dual<T>& b) { a = a - b; return a; }
template <class T> Dual<T>& operator*=(Dual<T>& a, const Dual<T>& b) { a = a * b; return a; }

template <class T> Dual<T> exp(const Dual<T>& a) {
  using std::exp;
  T e = exp(a.v);
  return {e, e * a.d};
}
template <class T> Dual<T> log(const Dual<T>& a) {
  using std::log;
  return {log(a.v), a.d / a.v};
}
template <class T> Dual<T> tanh(const Dual<T>& a) {
  using std::tanh;
  T t = tanh(a.v);
  return {t, (T(1.0) - t * t) * a.d};
}
template <class T> Dual<T> sqrt(const Dual<T>& a) {
  using std::sqrt;
  T s = sqrt(a.v);
  return {s, a.d / (T(2.0) * s)};
}
template <class T> Dual<T> sin(const Dual<T>& a) {
  using std::sin; using std::cos;
  return {sin(a.v), cos(a.v) * a.d};
}
template <class T> Dual<T> cos(const Dual<T>& a) {
  using std::sin; using std::cos;
  return {cos(a.v), T(0.0) - sin(a.v) * a.d};
}
template <class T> Dual<T> atan2(const Dual<T>& y, const Dual<T>& x) {
  using std::atan2;
  T r2 = x.v * x.v + y.v * y.v;
  return {atan2(y.v, x.v), (x.v * y.d - y.v * x.d) / r2};
}

template <class T> Dual<T> mulT(const Dual<T>& p, const Dual<T>& a) {
  return {mulT(p.v, a.v) + mulT(p.d, a.d), mulT(p.v, a.d)};
}

// ---------------------------------------------------------------------------
// Jet<D>: value + D first-order directional derivatives over double
// ---------------------------------------------------------------------------

template <int D>
struct Jet {
  std::array<double, D + 1> c{};  // c[0] value, c[1..D] derivatives

  Jet() = default;
  Jet(double x) { c[0] = x; }  // NOLINT
  static Jet seeded(double x, int dir) {
    Jet j(x);
    j.c[1 + dir] = 1.0;
    return j;
  }
};

template <int D> double val0(const Jet<D>& x) { return x.c[0]; }
template <int D> constexpr int ncomp(const Jet<D>&) { return D + 1; }
template <int D> double get_comp(const Jet<D>& x, int k) { return x.c[k]; }
template <int D> void add_comp(Jet<D>& x, int k, double v) { x.c[k] += v; }

template <int D> Jet<D> operator-(const Jet<D>& a) {
  Jet<D> r;
  for (int i = 0; i <= D; ++i) r.c[i] = -a.c[i];
  return r;
}
template <int D> Jet<D> operator+(const Jet<D>& a, const Jet<D>& b) {
  Jet<D> r;
  for (int i = 0; i <= D; ++i) r.c[i] = a.c[i] + b.c[i];
  return r;
}
template <int D> Jet<D> operator-(const Jet<D>& a, const Jet<D>& b) {
  Jet<D> r;
  for (int i = 0; i <= D; ++i) r.c[i] = a.c[i] - b.c[i];
  return r;
}
template <int D> Jet<D> operator*(const Jet<D>& a, const Jet<D>& b) {
  Jet<D> r;
  r.c[0] = a.c[0] * b.c[0];
  for (int i = 1; i <= D; ++i) r.c[i] = a.c[0] * b.c[i] + a.c[i] * b.c[0];
  return r;
}
template <int D> Jet<D> operator/(const Jet<D>& a, const Jet<D>& b) {
  Jet<D> r;
  const double inv = 1.0 / b.c[0];
  r.c[0] = a.c[0] * inv;
  for (int i = 1; i <= D; ++i) r.c[i] = (a.c[i] - r.c[0] * b.c[i]) * inv;
  return r;
}
template <int D> Jet<D> operator+(const Jet<D>& a, double b) { Jet<D> r = a; r.c[0] += b; return r; }
template <int D> Jet<D> operator+(double a, const Jet<D>& b) { return b + a; }
template <int D> Jet<D> operator-(const Jet<D>& a, double b) { Jet<D> r = a; r.c[0] -= b; return r; }
template <int D> Jet<D> operator-(double a, const Jet<D>& b) { return Jet<D>(a) - b; }
template <int D> Jet<D> operator*(const Jet<D>& a, double b) {
  Jet<D> r;
  for (int i = 0; i <= D; ++i) r.c[i] = a.c[i] * b;
  return r;
}
template <int D> Jet<D> operator*(double a, const Jet<D>& b) { return b * a; }
template <int D> Jet<D> operator/(const Jet<D>& a, double b) { return a * (1.0 / b); }
template <int D> Jet<D> operator/(double a, const Jet<D>& b) { return Jet<D>(a) / b; }
template <int D> Jet<D>& operator+=(Jet<D>& a, const Jet<D>& b) { a = a + b; return a; }
template <int D> Jet<D>& operator-=(Jet<D>& a, const Jet<D>& b) { a = a - b; return a; }
template <int D> Jet<D>& operator*=(Jet<D>& a, const Jet<D>& b) { a = a * b; return a; }

template <int D> Jet<D> chain1(const Jet<D>& a, double f, double fp) {
  Jet<D> r;
  r.c[0] = f;
  for (int i = 1; i <= D; ++i) r.c[i] = fp * a.c[i];
  return r;
}
template <int D> Jet<D> exp(const Jet<D>& a) {
  const double e = std::exp(a.c[0]);
  return chain1(a, e, e);
}
template <int D> Jet<D> log(const Jet<D>& a) { return chain1(a, std::log(a.c[0]), 1.0 / a.c[0]); }
template <int D> Jet<D> tanh(const Jet<D>& a) {
  const double t = std::tanh(a.c[0]);
  return chain1(a, t, 1.0 - t * t);
}
template <int D> Jet<D> sqrt(const Jet<D>& a) {
  const double s = std::sqrt(a.c[0]);
  return chain1(a, s, 0.5 / s);
}
template <int D> Jet<D> sin(const Jet<D>& a) { return chain1(a, std::sin(a.c[0]), std::cos(a.c[0])); }
template <int D> Jet<D> cos(const Jet<D>& a) { return chain1(a, std::cos(a.c[0]), -std::sin(a.c[0])); }
template <int D> Jet<D> atan2(const Jet<D>& y, const Jet<D>& x) {
  Jet<D> r;
  r.c[0] = std::atan2(y.c[0], x.c[0]);
  const double inv = 1.0 / (x.c[0] * x.c[0] + y.c[0] * y.c[0]);
  for (int i = 1; i <= D; ++i) r.c[i] = (x.c[0] * y.c[i] - y.c[0] * x.c[i]) * inv;
  return r;
}

template <int D> Jet<D> mulT(const Jet<D>& p, const Jet<D>& a) {
  Jet<D> r;
  double acc = p.c[0] * a.c[0];
  for (int i = 1; i <= D; ++i) acc += p.c[i] * a.c[i];
  r.c[0] = acc;
  for (int i = 1; i <= D; ++i) r.c[i] = p.c[0] * a.c[i];
  return r;
}

// ---------------------------------------------------------------------------
// Jet2: value, first and second derivative w.r.t. one coordinate
// ---------------------------------------------------------------------------

struct Jet2 {
  double f = 0.0, d1 = 0.0, d2 = 0.0;

  Jet2() = default;
  Jet2(double x) : f(x) {}  // NOLINT
  static Jet2 seeded(double x) { return {x, 1.0, 0.0}; }
  Jet2(double f_, double d1_, double d2_) : f(f_), d1(d1_), d2(d2_) {}
};

inline double val0(const Jet2& x) { return x.f; }
constexpr int ncomp(const Jet2&) { return 3; }
inline double get_comp(const Jet2& x, int k) { return k == 0 ? x.f : (k == 1 ? x.d1 : x.d2); }
inline void add_comp(Jet2& x, int k, double v) {
  if (k == 0) x.f += v; else if (k == 1) x.d1 += v; else x.d2 += v;
}

inline Jet2 operator-(const Jet2& a) { return {-a.f, -a.d1, -a.d2}; }
inline Jet2 operator+(const Jet2& a, const Jet2& b) { return {a.f + b.f, a.d1 + b.d1, a.d2 + b.d2}; }
inline Jet2 operator-(const Jet2& a, const Jet2& b) { return {a.f - b.f, a.d1 - b.d1, a.d2 - b.d2}; }
inline Jet2 operator*(const Jet2& a, const Jet2& b) {
  return {a.f * b.f, a.f * b.d1 + a.d1 * b.f, a.f * b.d2 + 2.0 * a.d1 * b.d1 + a.d2 * b.f};
}
inline Jet2 operator/(const Jet2& a, const Jet2& b) {
  const double inv = 1.0 / b.f;
  const double q0 = a.f * inv;
  const double q1 = (a.d1 - q0 * b.d1) * inv;
  const double q2 = (a.d2 - q0 * b.d2 - 2.0 * q1 * b.d1) * inv;
  return {q0, q1, q2};
}
inline Jet2 operator+(const Jet2& a, double b) { return {a.f + b, a.d1, a.d2}; }
inline Jet2 operator+(double a, const Jet2& b) { return b + a; }
inline Jet2 operator-(const Jet2& a, double b) { return {a.f - b, a.d1, a.d2}; }
inline Jet2 operator-(double a, const Jet2& b) { return {a - b.f, -b.d1, -b.d2}; }
inline Jet2 operator*(const Jet2& a, double b) { return {a.f * b, a.d1 * b, a.d2 * b}; }
inline Jet2 operator*(double a, const Jet2& b) { return b * a; }
inline Jet2 operator/(const Jet2& a, double b) { return a * (1.0 / b); }
inline Jet2 operator/(double a, const Jet2& b) { return Jet2(a) / b; }
inline Jet2& operator+=(Jet2& a, const Jet2& b) { a = a + b; return a; }
inline Jet2& operator-=(Jet2& a, const Jet2& b) { a = a - b; return a; }
inline Jet2& operator*=(Jet2& a, const Jet2& b) { a = a * b; return a; }

inline Jet2 chain2(const Jet2& a, double f, double fp, double fpp) {
  return {f, fp * a.d1, fp * a.d2 + fpp * a.d1 * a.d1};
}
inline Jet2 exp(const Jet2& a) {
  const double e = std::exp(a.f);
  return chain2(a, e, e, e);
}
inline Jet2 log(const Jet2& a) {
  const double inv = 1.0 / a.f;
  return chain2(a, std::log(a.f), inv, -inv * inv);
}
inline Jet2 tanh(const Jet2& a) {
  const double t = std::tanh(a.f);
  const double sech2 = 1.0 - t * t;
  return chain2(a, t, sech2, -2.0 * t * sech2);
}
inline Jet2 sqrt(const Jet2& a) {
  const double s = std::sqrt(a.f);
  return chain2(a, s, 0.5 / s, -0.25 / (s * a.f));
}
inline Jet2 sin(const Jet2& a) {
  const double s = std::sin(a.f), c = std::cos(a.f);
  return chain2(a, s, c, -s);
}
inline Jet2 cos(const Jet2& a) {
  const double s = std::sin(a.f), c = std::cos(a.f);
  return chain2(a, c, -s, -c);
}
inline Jet2 atan2(const Jet2& y, const Jet2& x) {
  const double r2 = x.f * x.f + y.f * y.f;
  const double fx = -y.f / r2, fy = x.f / r2;
  const double fxx = 2.0 * x.f * y.f / (r2 * r2);
  const double fyy = -fxx;
  const double fxy = (y.f * y.f - x.f * x.f) / (r2 * r2);
  return {std::atan2(y.f, x.f),
          fx * x.d1 + fy * y.d1,
          fx * x.d2 + fy * y.d2 + fxx * x.d1 * x.d1 + 2.0 * fxy * x.d1 * y.d1 +
              fyy * y.d1 * y.d1};
}

inline Jet2 mulT(const Jet2& p, const Jet2& a) {
  return {p.f * a.f + p.d1 * a.d1 + p.d2 * a.d2,
          p.f * a.d1 + 2.0 * p.d1 * a.d2,
          p.f * a.d2};
}

// Generic helpers ------------------------------------------------------------

template <class S> S sq(const S& x) { return x * x; }

template <class S> bool finite0(const S& x) { return std::isfinite(val0(x)); }

}  // namespace nfqs
