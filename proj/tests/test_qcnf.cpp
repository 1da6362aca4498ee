#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "nfqs/flow.hpp"
#include "nfqs/linalg.hpp"
#include "nfqs/seeding.hpp"

using namespace nfqs;

namespace {

// Linear vector field: F(z) = W z + b, rows 0..n-1 flow, row n phase.
FlowModel linear_qcnf(int n_dof, const std::vector<double>& w_rows,
                      const std::vector<double>& bias, int n_steps = 16) {
  FlowModel m;
  m.kind = FlowKind::kQcnf;
  m.qcnf.n_dof = n_dof;
  m.qcnf.n_steps = n_steps;
  m.qcnf.f_spec = MlpSpec{n_dof, n_dof + 1, {}, Activation::kIdentity, false};
  m.qcnf.validate();
  m.params.assign(m.qcnf.param_count(), 0.0);
  for (int r = 0; r < n_dof + 1; ++r)
    for (int c = 0; c < n_dof; ++c) m.params[r * n_dof + c] = w_rows[r * n_dof + c];
  const int bofs = (n_dof + 1) * n_dof;
  for (int r = 0; r < n_dof + 1; ++r) m.params[bofs + r] = bias[r];
  return m;
}

FlowModel random_qcnf(int n_dof, int hidden, uint64_t seed, double scale = 0.1,
                      int n_steps = 16) {
  FlowModel m = make_qcnf_model(n_dof, hidden, n_steps);
  Rng rng(seed);
  init_flow_params(m, scale, rng);
  return m;
}

}  // namespace

TEST_CASE("zero field is the identity flow") {
  auto m = make_qcnf_model(3, 8, 16);  // zero params
  std::vector<double> y{0.4, -1.2, 0.3};
  auto e = psi_forward(m, y);
  for (int i = 0; i < 3; ++i) CHECK(e.x[i] == doctest::Approx(y[i]));
  CHECK(e.log_det == doctest::Approx(0.0));
  CHECK(e.phase == doctest::Approx(0.0));
}

TEST_CASE("linear contraction has exact trace logdet") {
  const int n = 2;
  std::vector<double> w((n + 1) * n, 0.0), b(n + 1, 0.0);
  w[0 * n + 0] = -1.0;
  w[1 * n + 1] = -1.0;
  auto m = linear_qcnf(n, w, b);
  std::vector<double> y{0.7, -0.4};
  auto e = psi_forward(m, y);
  for (int i = 0; i < n; ++i)
    CHECK(e.x[i] == doctest::Approx(y[i] * std::exp(-1.0)).epsilon(1e-6));
  CHECK(e.log_det == doctest::Approx(-2.0).epsilon(1e-12));  // Tr H = -N exactly
}

TEST_CASE("constant phase rate integrates to theta(1)=c") {
  const int n = 1;
  std::vector<double> w((n + 1) * n, 0.0), b{0.0, 0.37};
  auto m = linear_qcnf(n, w, b);
  std::vector<double> y{1.1};
  auto e = psi_forward(m, y);
  CHECK(e.x[0] == doctest::Approx(1.1));
  CHECK(e.phase == doctest::Approx(0.37).epsilon(1e-13));
}

TEST_CASE("trace of the flow jacobian") {
  SUBCASE("linear field gives trace of the matrix") {
    const int n = 3;
    std::vector<double> w((n + 1) * n, 0.0), b(n + 1, 0.0);
    const double a[3][3] = {{0.3, -0.2, 0.5}, {0.1, -0.7, 0.0}, {0.2, 0.4, 1.1}};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) w[r * n + c] = a[r][c];
    auto m = linear_qcnf(n, w, b);
    std::vector<double> z{0.5, -0.3, 0.9};
    CHECK(qcnf_trace_hessian(m.qcnf, m.params, z) ==
          doctest::Approx(0.3 - 0.7 + 1.1).epsilon(1e-13));
  }
  SUBCASE("constant field has zero divergence") {
    const int n = 2;
    std::vector<double> w((n + 1) * n, 0.0), b{0.4, -0.2, 0.9};
    auto m = linear_qcnf(n, w, b);
    std::vector<double> z{0.1, 0.2};
    CHECK(qcnf_trace_hessian(m.qcnf, m.params, z) == doctest::Approx(0.0));
  }
  SUBCASE("random tanh network vs finite differences") {
    auto m = random_qcnf(3, 8, 42, 0.4);
    std::vector<double> z{0.3, -0.6, 0.2};
    const double tr = qcnf_trace_hessian(m.qcnf, m.params, z);
    // central-difference divergence of the flow components
    MlpScratch<double> scr;
    std::vector<double> out(4);
    auto eval = [&](const std::vector<double>& zz, int i) {
      mlp_apply<double>(m.qcnf.f_spec, m.params, zz, out, scr);
      return out[i];
    };
    double fd = 0;
    const double h = 1e-5;
    for (int j = 0; j < 3; ++j) {
      auto zp = z, zm = z;
      zp[j] += h;
      zm[j] -= h;
      fd += (eval(zp, j) - eval(zm, j)) / (2 * h);
    }
    CHECK(tr == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("trace-evolved logdet vs full jacobian ode") {
  // dJ/dt = H J with the same RK4 discretization; log det J(1) must agree
  // with the trace-evolved logdet up to commutator-sized terms.
  auto m = random_qcnf(3, 8, 77, 0.5, 256);
  std::vector<double> y{0.4, -0.8, 0.1};
  const double logdet_jode = qcnf_logdet_jacobian_ode(m, y);
  auto e = psi_forward(m, y);
  CHECK(std::fabs(e.log_det - logdet_jode) < 1e-5);
  // a linear field has no commutator terms, only O(h^4) stage differences
  const int nd = 2;
  std::vector<double> w((nd + 1) * nd, 0.0), b(nd + 1, 0.0);
  w[0] = -0.8;
  w[1 * nd + 1] = 0.3;
  auto lin = linear_qcnf(nd, w, b, 256);
  std::vector<double> y2{0.5, -0.2};
  CHECK(std::fabs(psi_forward(lin, y2).log_det - qcnf_logdet_jacobian_ode(lin, y2)) <
        1e-11);
}

TEST_CASE("normalization by quadrature in 1d") {
  auto m = random_qcnf(1, 8, 99, 0.3);
  const int ng = 8192;
  const double lo = -12.0, hi = 12.0;
  const double dx = (hi - lo) / (ng - 1);
  double total = 0.0;
  std::vector<double> x(1);
  for (int i = 0; i < ng; ++i) {
    x[0] = lo + i * dx;
    const double w = (i == 0 || i == ng - 1) ? 0.5 : 1.0;
    total += w * std::exp(2.0 * psi_at(m, x).log_abs);
  }
  total *= dx;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("identity-flow samples pass a KS test") {
  auto m = make_qcnf_model(1, 8, 16);
  Rng rng(3);
  const int n = 1 << 14;
  auto b = sample_batch(m, n, rng);
  std::vector<double> xs(b.x.begin(), b.x.end());
  std::sort(xs.begin(), xs.end());
  double d = 0;
  for (int i = 0; i < n; ++i) {
    const double cdf = 0.5 * std::erfc(-xs[i] / std::sqrt(2.0));
    d = std::max(d, std::fabs(cdf - (i + 1.0) / n));
    d = std::max(d, std::fabs(cdf - static_cast<double>(i) / n));
  }
  CHECK(d < 1.63 / std::sqrt(static_cast<double>(n)));  // 1% critical value
}

TEST_CASE("linear contraction sampling variance") {
  const int n_dof = 2;
  std::vector<double> w((n_dof + 1) * n_dof, 0.0), b(n_dof + 1, 0.0);
  w[0 * n_dof + 0] = -1.0;
  w[1 * n_dof + 1] = -1.0;
  auto m = linear_qcnf(n_dof, w, b);
  Rng rng(8);
  const int n = 1 << 14;
  auto batch = sample_batch(m, n, rng);
  const double target = std::exp(-2.0);
  for (int j = 0; j < n_dof; ++j) {
    double s2 = 0;
    for (int i = 0; i < n; ++i) s2 += sq(batch.x[i * n_dof + j]);
    const double var = s2 / n;
    CHECK(std::fabs(var - target) < 3.0 * target * std::sqrt(2.0 / n));
  }
}

TEST_CASE("1d histogram matches the pointwise density") {
  auto m = random_qcnf(1, 8, 1234, 0.4);
  Rng rng(17);
  const int n = 1 << 15;
  auto b = sample_batch(m, n, rng);
  double mu = 0, sd = 0;
  for (double v : b.x) mu += v;
  mu /= n;
  for (double v : b.x) sd += sq(v - mu);
  sd = std::sqrt(sd / n);
  const int nb = 24;
  const double lo = mu - 3 * sd, w = 6 * sd / nb;
  std::vector<int> counts(nb, 0);
  for (double v : b.x) {
    const int c = static_cast<int>(std::floor((v - lo) / w));
    if (c >= 0 && c < nb) counts[c]++;
  }
  double chi2 = 0;
  int used = 0;
  const int q = 32;
  std::vector<double> x(1);
  for (int c = 0; c < nb; ++c) {
    double p = 0;
    for (int a = 0; a < q; ++a) {
      x[0] = lo + (c + (a + 0.5) / q) * w;
      p += std::exp(2.0 * psi_at(m, x).log_abs);
    }
    p *= w / q;
    const double expect = p * n;
    if (expect < 25) continue;
    chi2 += sq(counts[c] - expect) / expect;
    used++;
  }
  REQUIRE(used > 8);
  CHECK(chi2 / used < 2.0);
}

TEST_CASE("phase channel is linear in its parameters") {
  auto m = random_qcnf(1, 8, 55, 0.4);
  std::vector<double> y{0.8};
  // scale the output-layer row feeding dtheta/dt by lambda
  const auto& spec = m.qcnf.f_spec;
  const auto o = spec.layer_offsets(spec.n_layers() - 1);
  const int ni = spec.layer_in(spec.n_layers() - 1);
  auto scaled = m;
  const double lam = 2.5;
  for (int c = 0; c < ni; ++c) scaled.params[o.w + 1 * ni + c] *= lam;
  scaled.params[o.b + 1] *= lam;
  auto e1 = psi_forward(m, y);
  auto e2 = psi_forward(scaled, y);
  CHECK(e2.phase == doctest::Approx(lam * e1.phase).epsilon(1e-12));
  CHECK(e2.x[0] == doctest::Approx(e1.x[0]));
  CHECK(e2.log_det == doctest::Approx(e1.log_det));
}

TEST_CASE("pointwise evaluation agrees with the forward map") {
  auto m = random_qcnf(1, 8, 66, 0.4);
  std::vector<double> y{-0.9};
  auto fwd = psi_forward(m, y);
  auto inv = psi_at(m, fwd.x);
  // backward RK4 is an O(h^5)-accurate inverse, not exact
  CHECK(inv.y[0] == doctest::Approx(y[0]).epsilon(1e-8));
  CHECK(inv.log_abs == doctest::Approx(fwd.log_abs).epsilon(1e-8));
  CHECK(inv.phase == doctest::Approx(fwd.phase).epsilon(1e-8));
}

TEST_CASE("parameter gradient of log|psi| matches finite differences") {
  auto m = random_qcnf(1, 6, 88, 0.4);
  std::vector<double> y{0.6};
  auto g = flow_logabs_param_grad(m, y);
  Rng pick(19);
  for (int t = 0; t < 15; ++t) {
    const size_t k = pick.raw() % m.params.size();
    auto mp = m, mm = m;
    mp.params[k] += 1e-6;
    mm.params[k] -= 1e-6;
    const double fd = (psi_forward(mp, y).log_abs - psi_forward(mm, y).log_abs) / 2e-6;
    CHECK(g[k] == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("nonfinite state raises") {
  const int n = 1;
  std::vector<double> w{2000.0, 0.0}, b{0.0, 0.0};  // dz/dt = 2000 z explodes
  auto m = linear_qcnf(n, w, b);
  std::vector<double> y{1.0};
  CHECK_THROWS_AS(psi_forward(m, y), NonFinite);
}
