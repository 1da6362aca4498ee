#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "nfqs/errors.hpp"
#include "nfqs/mlp.hpp"
#include "nfqs/tape.hpp"

namespace nfqs {

// Invertibility floor for |s|^2; a pinched scale is an error, not a clamp.
inline constexpr double kScalePinchEps = 1e-12;

// Stack of complex-scaled affine coupling layers. Each layer keeps masked
// coordinates and maps the rest as x_i <- x_i |s_i(x . m)|^2 + t_i(x . m),
// where s packs 2N net outputs into N complex scales. Masks alternate
// even/odd, starting with even coordinates masked.
struct QnvpArch {
  int n_dof = 0;
  int depth = 0;
  MlpSpec s_spec, t_spec;
  std::vector<std::vector<uint8_t>> masks;  // 1 = passes through unchanged

  int params_per_layer() const {
    return s_spec.param_count() + t_spec.param_count();
  }
  int param_count() const { return depth * params_per_layer(); }
  int layer_s_offset(int l) const { return l * params_per_layer(); }
  int layer_t_offset(int l) const {
    return l * params_per_layer() + s_spec.param_count();
  }

  // Paper initialization range for couplings.
  double default_init_scale() const { return 1.0 / (depth * n_dof); }

  void validate() const {
    if (n_dof < 2) throw ConfigError("QnvpArch: n_dof must be >= 2 (coupling masks)");
    if (depth < 1) throw ConfigError("QnvpArch: depth must be >= 1");
    s_spec.validate();
    t_spec.validate();
    if (s_spec.in_dim != n_dof || s_spec.out_dim != 2 * n_dof)
      throw ConfigError("QnvpArch: s network must map N -> 2N");
    if (t_spec.in_dim != n_dof || t_spec.out_dim != n_dof)
      throw ConfigError("QnvpArch: t network must map N -> N");
    if (!t_spec.hidden.empty())
      throw ConfigError("QnvpArch: t network must be linear");
    if (static_cast<int>(masks.size()) != depth)
      throw ConfigError("QnvpArch: one mask per layer");
    for (int l = 0; l < depth; ++l) {
      int ones = 0;
      for (uint8_t m : masks[l]) ones += m;
      if (ones == 0 || ones == n_dof)
        throw ConfigError("QnvpArch: mask must be neither all-ones nor all-zeros");
      if (l > 0) {
        for (int i = 0; i < n_dof; ++i)
          if (masks[l][i] == masks[l - 1][i])
            throw ConfigError("QnvpArch: consecutive masks must be complementary");
      }
    }
  }
};

inline QnvpArch make_qnvp_arch(int n_dof, int depth, int hidden_width = 32) {
  QnvpArch a;
  a.n_dof = n_dof;
  a.depth = depth;
  a.s_spec = MlpSpec{n_dof, 2 * n_dof, {hidden_width}, Activation::kTanh, true};
  a.t_spec = MlpSpec{n_dof, n_dof, {}, Activation::kIdentity, false};
  a.masks.resize(depth);
  for (int l = 0; l < depth; ++l) {
    a.masks[l].resize(n_dof);
    for (int i = 0; i < n_dof; ++i)
      a.masks[l][i] = static_cast<uint8_t>((i + l) % 2 == 0);
  }
  a.validate();
  return a;
}

template <class S>
struct QnvpWork {
  std::vector<S> x, in, sout, tout, y;
  MlpScratch<S> scr;
  S log_det{}, log_abs{}, phase{};
};

namespace detail {

template <class S>
void qnvp_layer_nets(const QnvpArch& a, int l, std::span<const S> params,
                     const std::vector<S>& cur, QnvpWork<S>& w) {
  const int n = a.n_dof;
  w.in.assign(n, S(0.0));
  for (int i = 0; i < n; ++i)
    if (a.masks[l][i]) w.in[i] = cur[i];
  w.sout.resize(2 * n);
  w.tout.resize(n);
  mlp_apply<S>(a.s_spec, params.subspan(a.layer_s_offset(l), a.s_spec.param_count()),
               w.in, w.sout, w.scr);
  mlp_apply<S>(a.t_spec, params.subspan(a.layer_t_offset(l), a.t_spec.param_count()),
               w.in, w.tout, w.scr);
}

template <class S>
S qnvp_scale_abs2(const QnvpWork<S>& w, int i) {
  const S& re = w.sout[2 * i];
  const S& im = w.sout[2 * i + 1];
  S s2 = re * re + im * im;
  if (!(val0(s2) > kScalePinchEps))
    throw ScalePinch("|s|^2 = " + std::to_string(val0(s2)) + " at coordinate " +
                     std::to_string(i));
  return s2;
}

}  // namespace detail

// Base-to-configuration map. On return w.x, w.log_det, w.log_abs, w.phase are
// set; w.y keeps the base point.
template <class S>
void qnvp_forward(const QnvpArch& a, std::span<const S> params,
                  std::span<const S> y, QnvpWork<S>& w) {
  using std::atan2;
  using std::log;
  const int n = a.n_dof;
  w.y.assign(y.begin(), y.end());
  w.x.assign(y.begin(), y.end());
  w.log_det = S(0.0);
  w.phase = S(0.0);
  for (int l = 0; l < a.depth; ++l) {
    detail::qnvp_layer_nets(a, l, params, w.x, w);
    for (int i = 0; i < n; ++i) {
      if (a.masks[l][i]) continue;
      S s2 = detail::qnvp_scale_abs2(w, i);
      w.log_det += log(s2);
      w.phase += atan2(w.sout[2 * i + 1], w.sout[2 * i]);
      w.x[i] = w.x[i] * s2 + w.tout[i];
    }
  }
  S yy = S(0.0);
  for (int i = 0; i < n; ++i) yy += y[i] * y[i];
  w.log_abs = S(-0.25 * n * std::log(2.0 * M_PI)) - yy * S(0.25) - w.log_det * S(0.5);
}

// Pointwise evaluation at a configuration x: exact layer-by-layer inversion.
// Produces the same log_det/log_abs/phase the forward pass would at the
// recovered base point.
template <class S>
void qnvp_point_eval(const QnvpArch& a, std::span<const S> params,
                     std::span<const S> x, QnvpWork<S>& w) {
  using std::atan2;
  using std::log;
  const int n = a.n_dof;
  w.x.assign(x.begin(), x.end());
  w.y.assign(x.begin(), x.end());
  w.log_det = S(0.0);
  w.phase = S(0.0);
  for (int l = a.depth - 1; l >= 0; --l) {
    detail::qnvp_layer_nets(a, l, params, w.y, w);
    for (int i = 0; i < n; ++i) {
      if (a.masks[l][i]) continue;
      S s2 = detail::qnvp_scale_abs2(w, i);
      w.log_det += log(s2);
      w.phase += atan2(w.sout[2 * i + 1], w.sout[2 * i]);
      w.y[i] = (w.y[i] - w.tout[i]) / s2;
    }
  }
  S yy = S(0.0);
  for (int i = 0; i < n; ++i) yy += w.y[i] * w.y[i];
  w.log_abs = S(-0.25 * n * std::log(2.0 * M_PI)) - yy * S(0.25) - w.log_det * S(0.5);
}

}  // namespace nfqs
