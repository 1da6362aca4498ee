#include <doctest.h>

#include <cmath>
#include <vector>

#include "nfqs/grad.hpp"
#include "nfqs/linalg.hpp"
#include "nfqs/tape.hpp"

using namespace nfqs;

namespace {

template <class S>
S poly(std::span<const S> p) {
  using std::exp;
  using std::log;
  using std::tanh;
  S r = tanh(p[0] * p[1]) + exp(p[2] * S(0.3)) * p[0];
  r = r + log(S(2.0) + p[1] * p[1]) / (S(1.0) + p[2] * p[2]);
  return r;
}

double poly_at(std::vector<double> p) {
  return poly(std::span<const double>(p));
}

}  // namespace

TEST_CASE("grad of x.x") {
  auto g = grad(
      [](std::span<const Var<double>> x) { return x[0] * x[0] + x[1] * x[1]; },
      std::vector<double>{1.0, 2.0});
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(4.0));
}

TEST_CASE("tape gradient matches finite differences") {
  std::vector<double> p{0.4, -0.8, 1.3};
  auto g = grad([](std::span<const Var<double>> v) { return poly(v); }, p);
  for (int k = 0; k < 3; ++k) {
    auto pp = p, pm = p;
    pp[k] += 1e-6;
    pm[k] -= 1e-6;
    const double fd = (poly_at(pp) - poly_at(pm)) / 2e-6;
    CHECK(g[k] == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("second derivative helper") {
  CHECK(second_derivative([](const Jet2& x) { return sin(x); }, 0.0) ==
        doctest::Approx(0.0));
  CHECK(second_derivative([](const Jet2& x) { return exp(x * 2.0); }, 0.5) ==
        doctest::Approx(4.0 * std::exp(1.0)));
}

TEST_CASE("tape over jet algebra differentiates extracted components") {
  // h(p) = d/dx [ tanh(p0 x) + p1 x^2 ] at x = 0.7, as a function of p.
  // With A = Jet<1>, x carries the direction; extract comp 1 and square it;
  // the tape must give d(h^2)/dp exactly.
  using A = Jet<1>;
  auto hval = [](double p0, double p1) {
    const double x = 0.7;
    const double s = 1.0 - std::tanh(p0 * x) * std::tanh(p0 * x);
    return p0 * s + 2.0 * p1 * x;  // d/dx
  };
  auto run = [&](double p0, double p1, std::span<double> g) {
    Tape<A> tape;
    TapeScope<A> scope(tape);
    auto vp0 = Var<A>::leaf(A(p0));
    auto vp1 = Var<A>::leaf(A(p1));
    Var<A> x = Var<A>::constant(A::seeded(0.7, 0));
    Var<A> f = tanh(vp0 * x) + vp1 * x * x;
    Var<A> h = comp_extract(f, 1);
    Var<A> loss = h * h;
    if (!g.empty()) tape.backward(loss.i, g);
    return val0(loss);
  };
  std::vector<double> g(2);
  const double v = run(0.4, -0.3, g);
  const double h0 = hval(0.4, -0.3);
  CHECK(v == doctest::Approx(h0 * h0).epsilon(1e-12));
  for (int k = 0; k < 2; ++k) {
    double pp[2] = {0.4, -0.3}, pm[2] = {0.4, -0.3};
    pp[k] += 1e-6;
    pm[k] -= 1e-6;
    const double fp = hval(pp[0], pp[1]), fm = hval(pm[0], pm[1]);
    const double fd = (fp * fp - fm * fm) / 2e-6;
    CHECK(g[k] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("probe slot computes divergence terms on tape") {
  // F(z;p) = tanh(p z): probe gives dF/dz; loss = (dF/dz)^2 must
  // differentiate w.r.t. p correctly.
  using A = Dual<double>;
  auto dfdz = [](double p, double z) {
    const double t = std::tanh(p * z);
    return p * (1.0 - t * t);
  };
  auto run = [&](double p, std::span<double> g) {
    Tape<A> tape;
    TapeScope<A> scope(tape);
    auto vp = Var<A>::leaf(A(p));
    Var<A> z = Var<A>::constant(A(0.6));
    Var<A> zp = probe_seed(z);
    Var<A> f = tanh(vp * zp);
    Var<A> tr = probe_take(f);
    Var<A> loss = tr * tr;
    if (!g.empty()) tape.backward(loss.i, g);
    return val0(loss);
  };
  std::vector<double> g(1);
  const double v = run(0.9, g);
  CHECK(v == doctest::Approx(dfdz(0.9, 0.6) * dfdz(0.9, 0.6)).epsilon(1e-12));
  const double fd = (std::pow(dfdz(0.9 + 1e-6, 0.6), 2) -
                     std::pow(dfdz(0.9 - 1e-6, 0.6), 2)) /
                    2e-6;
  CHECK(g[0] == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("lu solve on tape scalars differentiates through the solve") {
  // A(p) x = b with A = [[p, 1],[0, 2]], b = (1, p): x1 = (1 - p/2)/p.
  using V = Var<double>;
  auto run = [&](double p, std::span<double> g) {
    Tape<double> tape;
    TapeScope<double> scope(tape);
    auto vp = V::leaf(p);
    std::vector<V> A{vp, V(1.0), V(0.0), V(2.0)};
    std::vector<V> rhs{V(1.0), vp};
    lu_solve(A, 2, std::span<V>(rhs), 1);
    if (!g.empty()) tape.backward(rhs[0].i, g);
    return val0(rhs[0]);
  };
  std::vector<double> g(1);
  const double v = run(0.8, g);
  CHECK(v == doctest::Approx((1 - 0.4) / 0.8));
  // d/dp [(1 - p/2)/p] = -1/p^2
  CHECK(g[0] == doctest::Approx(-1.0 / 0.64).epsilon(1e-10));
}
