#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "nfqs/flow.hpp"

using namespace nfqs;

namespace {

// QNVP whose s nets are constant (zero weights, bias pattern) and whose t
// nets are zero: every coupling scales the unmasked coordinates by |s|^2.
FlowModel constant_qnvp(int n_dof, int depth, double s_re, double s_im) {
  FlowModel m;
  m.kind = FlowKind::kQnvp;
  m.qnvp.n_dof = n_dof;
  m.qnvp.depth = depth;
  m.qnvp.s_spec = MlpSpec{n_dof, 2 * n_dof, {}, Activation::kIdentity, false};
  m.qnvp.t_spec = MlpSpec{n_dof, n_dof, {}, Activation::kIdentity, false};
  m.qnvp.masks.resize(depth);
  for (int l = 0; l < depth; ++l) {
    m.qnvp.masks[l].resize(n_dof);
    for (int i = 0; i < n_dof; ++i)
      m.qnvp.masks[l][i] = static_cast<uint8_t>((i + l) % 2 == 0);
  }
  m.qnvp.validate();
  m.params.assign(m.qnvp.param_count(), 0.0);
  for (int l = 0; l < depth; ++l) {
    const auto ob = m.qnvp.s_spec.layer_offsets(0).b;
    const int base = m.qnvp.layer_s_offset(l) + ob;
    for (int i = 0; i < n_dof; ++i) {
      m.params[base + 2 * i] = s_re;
      m.params[base + 2 * i + 1] = s_im;
    }
  }
  return m;
}

FlowModel random_qnvp(int n_dof, int depth, int hidden, uint64_t seed,
                      double scale = -1.0) {
  FlowModel m = make_qnvp_model(n_dof, depth, hidden);
  Rng rng(seed);
  init_flow_params(m, scale, rng);
  return m;
}

}  // namespace

TEST_CASE("identity coupling is the base gaussian") {
  auto m = constant_qnvp(2, 1, 1.0, 0.0);
  std::vector<double> y{0.5, 1.0};
  auto e = psi_forward(m, y);
  CHECK(e.x[0] == doctest::Approx(0.5));
  CHECK(e.x[1] == doctest::Approx(1.0));
  CHECK(e.log_det == doctest::Approx(0.0));
  CHECK(e.phase == doctest::Approx(0.0));
  const double expect = -0.5 * std::log(2 * M_PI) - (0.25 + 1.0) / 4.0;
  CHECK(e.log_abs == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("constant real scaling hits the unmasked coordinate") {
  auto m = constant_qnvp(2, 1, 2.0, 0.0);  // |s|^2 = 4
  std::vector<double> y{0.5, 1.0};
  auto e = psi_forward(m, y);
  CHECK(e.x[0] == doctest::Approx(0.5));
  CHECK(e.x[1] == doctest::Approx(4.0));
  CHECK(e.log_det == doctest::Approx(std::log(4.0)));
  CHECK(e.phase == doctest::Approx(0.0));
}

TEST_CASE("unit modulus scaling only rotates the phase") {
  auto m = constant_qnvp(2, 1, 0.0, 1.0);  // s = i
  std::vector<double> y{0.5, 1.0};
  auto e = psi_forward(m, y);
  CHECK(e.x[0] == doctest::Approx(0.5));
  CHECK(e.x[1] == doctest::Approx(1.0));
  CHECK(e.log_det == doctest::Approx(0.0));
  CHECK(e.phase == doctest::Approx(M_PI / 2));
}

TEST_CASE("phase adds exactly over layers") {
  const double a1 = 0.35;
  auto m1 = constant_qnvp(3, 1, std::cos(a1), std::sin(a1));
  auto m2 = constant_qnvp(3, 2, std::cos(a1), std::sin(a1));
  std::vector<double> y{0.1, -0.4, 0.7};
  auto e1 = psi_forward(m1, y);
  auto e2 = psi_forward(m2, y);
  // layer 0 leaves even coords: 1 unmasked coordinate of 3; layer 1: 2.
  CHECK(e1.phase == doctest::Approx(1 * a1).epsilon(1e-14));
  CHECK(e2.phase == doctest::Approx(3 * a1).epsilon(1e-14));
}

TEST_CASE("scale pinch raises") {
  auto m = constant_qnvp(2, 1, 0.0, 0.0);
  std::vector<double> y{0.5, 1.0};
  CHECK_THROWS_AS(psi_forward(m, y), ScalePinch);
}

TEST_CASE("pointwise evaluation inverts the flow exactly") {
  auto m = random_qnvp(4, 3, 8, 101);
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> y(4);
    for (auto& v : y) v = rng.normal();
    auto fwd = psi_forward(m, y);
    auto inv = psi_at(m, fwd.x);
    for (int i = 0; i < 4; ++i)
      CHECK(inv.y[i] == doctest::Approx(y[i]).epsilon(1e-11));
    CHECK(inv.log_abs == doctest::Approx(fwd.log_abs).epsilon(1e-11));
    CHECK(inv.phase == doctest::Approx(fwd.phase).epsilon(1e-11));
  }
}

TEST_CASE("analytic logdet vs finite-difference jacobian") {
  SUBCASE("identity model") {
    auto m = constant_qnvp(2, 1, 1.0, 0.0);
    std::vector<double> y{0.3, -0.6};
    CHECK(qnvp_logdet_discrepancy(m, y) < 1e-9);
  }
  SUBCASE("constant scaling N=2") {
    auto m = constant_qnvp(2, 2, 1.3, -0.4);
    std::vector<double> y{0.3, -0.6};
    CHECK(qnvp_logdet_discrepancy(m, y) < 1e-8);
  }
  SUBCASE("random models N=4") {
    Rng rng(17);
    for (int t = 0; t < 5; ++t) {
      auto m = random_qnvp(4, 2, 8, 300 + t, 0.3);
      std::vector<double> y(4);
      for (auto& v : y) v = rng.normal();
      CHECK(qnvp_logdet_discrepancy(m, y) < 1e-6);
    }
  }
}

TEST_CASE("sampling variance matches the map") {
  SUBCASE("identity") {
    auto m = constant_qnvp(2, 1, 1.0, 0.0);
    Rng rng(23);
    auto b = sample_batch(m, 1 << 15, rng);
    for (int j = 0; j < 2; ++j) {
      double s2 = 0;
      for (int i = 0; i < b.n; ++i) s2 += b.x[i * 2 + j] * b.x[i * 2 + j];
      const double var = s2 / b.n;
      CHECK(std::fabs(var - 1.0) < 3.0 * std::sqrt(2.0 / b.n));
    }
  }
  SUBCASE("quarter scaling both coordinates") {
    auto m = constant_qnvp(2, 2, 0.5, 0.0);  // |s|^2 = 1/4 per layer
    Rng rng(29);
    auto b = sample_batch(m, 1 << 15, rng);
    for (int j = 0; j < 2; ++j) {
      double s2 = 0;
      for (int i = 0; i < b.n; ++i) s2 += b.x[i * 2 + j] * b.x[i * 2 + j];
      const double var = s2 / b.n;
      // x = y/16 on the coordinate unmasked... both coords scaled once each
      CHECK(std::fabs(var - 1.0 / 16.0) < 3.0 * (1.0 / 16.0) * std::sqrt(2.0 / b.n));
    }
  }
}

TEST_CASE("normalization by 2d quadrature") {
  auto m = random_qnvp(2, 2, 8, 404, 0.2);
  const int ng = 480;
  const double lo = -9.0, hi = 9.0;
  const double dx = (hi - lo) / (ng - 1);
  double total = 0.0;
  std::vector<double> x(2);
  for (int i = 0; i < ng; ++i) {
    x[0] = lo + i * dx;
    const double wi = (i == 0 || i == ng - 1) ? 0.5 : 1.0;
    for (int j = 0; j < ng; ++j) {
      x[1] = lo + j * dx;
      const double wj = (j == 0 || j == ng - 1) ? 0.5 : 1.0;
      auto e = psi_at(m, x);
      total += wi * wj * std::exp(2.0 * e.log_abs);
    }
  }
  total *= dx * dx;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("sampled histogram matches the density") {
  auto m = random_qnvp(2, 2, 8, 505, 0.2);
  Rng rng(31);
  const int n = 1 << 16;
  auto b = sample_batch(m, n, rng);
  // the contracted random flow concentrates mass; adapt the window
  double mu[2] = {0, 0}, sd[2] = {0, 0};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 2; ++j) mu[j] += b.x[i * 2 + j];
  mu[0] /= n;
  mu[1] /= n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 2; ++j) sd[j] += sq(b.x[i * 2 + j] - mu[j]);
  sd[0] = std::sqrt(sd[0] / n);
  sd[1] = std::sqrt(sd[1] / n);
  const int nb = 8;
  double lo[2], w[2];
  for (int j = 0; j < 2; ++j) {
    lo[j] = mu[j] - 2.5 * sd[j];
    w[j] = 5.0 * sd[j] / nb;
  }
  std::vector<int> counts(nb * nb, 0);
  int inside = 0;
  for (int i = 0; i < n; ++i) {
    const double x0 = b.x[i * 2], x1 = b.x[i * 2 + 1];
    const int c0 = static_cast<int>(std::floor((x0 - lo[0]) / w[0]));
    const int c1 = static_cast<int>(std::floor((x1 - lo[1]) / w[1]));
    if (c0 < 0 || c0 >= nb || c1 < 0 || c1 >= nb) continue;
    counts[c0 * nb + c1]++;
    inside++;
  }
  REQUIRE(inside > n / 2);
  double chi2 = 0;
  int used = 0;
  const int q = 16;  // per-cell quadrature resolution
  std::vector<double> x(2);
  for (int c0 = 0; c0 < nb; ++c0) {
    for (int c1 = 0; c1 < nb; ++c1) {
      double p = 0;
      for (int a = 0; a < q; ++a)
        for (int bq = 0; bq < q; ++bq) {
          x[0] = lo[0] + (c0 + (a + 0.5) / q) * w[0];
          x[1] = lo[1] + (c1 + (bq + 0.5) / q) * w[1];
          p += std::exp(2.0 * psi_at(m, x).log_abs);
        }
      p *= w[0] * w[1] / (q * q);
      const double expect = p * n;
      if (expect < 25) continue;
      const double d = counts[c0 * nb + c1] - expect;
      chi2 += d * d / expect;
      used++;
    }
  }
  REQUIRE(used > 10);
  CHECK(chi2 / used < 2.0);
}

TEST_CASE("parameter gradient of log|psi| matches finite differences") {
  auto m = random_qnvp(3, 2, 6, 606, 0.3);
  std::vector<double> y{0.4, -0.2, 0.8};
  auto g = flow_logabs_param_grad(m, y);
  Rng pick(7);
  for (int t = 0; t < 20; ++t) {
    const size_t k = pick.raw() % m.params.size();
    auto mp = m, mm = m;
    mp.params[k] += 1e-6;
    mm.params[k] -= 1e-6;
    const double fd = (psi_forward(mp, y).log_abs - psi_forward(mm, y).log_abs) / 2e-6;
    CHECK(g[k] == doctest::Approx(fd).epsilon(5e-5));
  }
}
