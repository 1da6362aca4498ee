#pragma once

#include <span>
#include <string>
#include <vector>

#include "nfqs/errors.hpp"
#include "nfqs/rng.hpp"
#include "nfqs/scalars.hpp"

namespace nfqs {

enum class Activation { kTanh, kIdentity };

// Dense MLP with fixed architecture. Hidden layers get the activation and
// (optionally) layer normalization; the output layer is affine.
struct MlpSpec {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<int> hidden;
  Activation activation = Activation::kTanh;
  bool layer_norm = false;

  void validate() const {
    if (in_dim <= 0 || out_dim <= 0)
      throw ConfigError("MlpSpec: dimensions must be positive");
    for (int h : hidden)
      if (h <= 0) throw ConfigError("MlpSpec: hidden widths must be positive");
  }

  int n_layers() const { return static_cast<int>(hidden.size()) + 1; }

  int layer_in(int l) const { return l == 0 ? in_dim : hidden[l - 1]; }
  int layer_out(int l) const {
    return l == n_layers() - 1 ? out_dim : hidden[l];
  }
  bool layer_has_norm(int l) const { return layer_norm && l < n_layers() - 1; }

  // Flat layout: per layer W (row-major out x in), b, then gain/offset for
  // normalized layers. Stable across runs by construction.
  int param_count() const {
    int n = 0;
    for (int l = 0; l < n_layers(); ++l) {
      n += layer_out(l) * (layer_in(l) + 1);
      if (layer_has_norm(l)) n += 2 * layer_out(l);
    }
    return n;
  }

  struct Offsets {
    int w, b, gain, offset;
  };
  Offsets layer_offsets(int l) const {
    int pos = 0;
    for (int k = 0; k < l; ++k) {
      pos += layer_out(k) * (layer_in(k) + 1);
      if (layer_has_norm(k)) pos += 2 * layer_out(k);
    }
    Offsets o{};
    o.w = pos;
    o.b = pos + layer_out(l) * layer_in(l);
    o.gain = o.b + layer_out(l);
    o.offset = o.gain + (layer_has_norm(l) ? layer_out(l) : 0);
    return o;
  }
};

inline constexpr double kLayerNormEps = 1e-6;

// Weights and biases i.i.d. uniform on [-scale, scale]; layer-norm gains 1,
// offsets 0.
inline std::vector<double> mlp_init(const MlpSpec& spec, double scale, Rng& rng) {
  spec.validate();
  if (!(scale > 0)) throw ConfigError("mlp_init: scale must be > 0");
  std::vector<double> p(spec.param_count());
  for (int l = 0; l < spec.n_layers(); ++l) {
    const auto o = spec.layer_offsets(l);
    const int nw = spec.layer_out(l) * spec.layer_in(l);
    for (int i = 0; i < nw; ++i) p[o.w + i] = rng.uniform(-scale, scale);
    for (int i = 0; i < spec.layer_out(l); ++i)
      p[o.b + i] = rng.uniform(-scale, scale);
    if (spec.layer_has_norm(l)) {
      for (int i = 0; i < spec.layer_out(l); ++i) {
        p[o.gain + i] = 1.0;
        p[o.offset + i] = 0.0;
      }
    }
  }
  return p;
}

template <class S>
struct MlpScratch {
  std::vector<S> a, b;
};

// Normalize to zero mean / unit variance, then rescale by gain/offset. The
// variance floor keeps the map defined when all pre-activations coincide.
template <class S>
void layer_norm_inplace(std::span<S> h, std::span<const S> params, int gain_ofs,
                        int offset_ofs) {
  const int n = static_cast<int>(h.size());
  S mean = S(0.0);
  for (int i = 0; i < n; ++i) mean += h[i];
  mean = mean * S(1.0 / n);
  S var = S(0.0);
  for (int i = 0; i < n; ++i) var += sq(h[i] - mean);
  var = var * S(1.0 / n);
  S rstd;
  if (val0(var) > kLayerNormEps) {
    using std::sqrt;
    rstd = S(1.0) / sqrt(var);
  } else {
    rstd = S(1.0 / std::sqrt(kLayerNormEps));
  }
  for (int i = 0; i < n; ++i)
    h[i] = params[gain_ofs + i] * ((h[i] - mean) * rstd) + params[offset_ofs + i];
}

template <class S>
void mlp_apply(const MlpSpec& spec, std::span<const S> params,
               std::span<const S> in, std::span<S> out, MlpScratch<S>& scr) {
  if (static_cast<int>(in.size()) != spec.in_dim ||
      static_cast<int>(out.size()) != spec.out_dim)
    throw DimensionMismatch("mlp_apply: in " + std::to_string(in.size()) +
                            " out " + std::to_string(out.size()));
  scr.a.assign(in.begin(), in.end());
  const int L = spec.n_layers();
  for (int l = 0; l < L; ++l) {
    const auto o = spec.layer_offsets(l);
    const int ni = spec.layer_in(l), no = spec.layer_out(l);
    const bool last = (l == L - 1);
    std::span<S> dst = last ? out : [&] {
      scr.b.assign(no, S(0.0));
      return std::span<S>(scr.b);
    }();
    for (int r = 0; r < no; ++r) {
      S acc = params[o.b + r];
      const int row = o.w + r * ni;
      for (int c = 0; c < ni; ++c) acc += params[row + c] * scr.a[c];
      dst[r] = acc;
    }
    if (!last) {
      if (spec.layer_has_norm(l))
        layer_norm_inplace<S>(dst, params, o.gain, o.offset);
      if (spec.activation == Activation::kTanh) {
        using std::tanh;
        for (int r = 0; r < no; ++r) dst[r] = tanh(dst[r]);
      }
      scr.a.assign(dst.begin(), dst.end());
    }
  }
}

}  // namespace nfqs
