#pragma once

#include <cassert>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "nfqs/scalars.hpp"

// Reverse-mode tape over an algebra A (double, Jet<D>, Dual<Jet2>, ...).
// Local partial derivatives are computed at record time as A values, so one
// backward sweep yields d(loss)/d(leaf) for the loss *and* for every
// forward-mode component it was assembled from (reverse-over-forward).
// Tapes are cheap to reset and are intended to be rebuilt per sample.

namespace nfqs {

template <class A> struct is_dual_alg : std::false_type {};
template <class T> struct is_dual_alg<Dual<T>> : std::true_type {};

template <class A>
class Tape {
 public:
  enum Tag : uint8_t { kLeaf, kOp1, kOp2, kExtract, kProbeSeed, kProbeTake };

  struct Head {
    int32_t a = -1;
    int32_t b = -1;       // comp index for kExtract
    uint32_t pofs = 0;
    uint8_t tag = kLeaf;
  };

  int32_t leaf() {
    heads_.push_back({-1, -1, 0, kLeaf});
    ++n_leaves_;
    return static_cast<int32_t>(heads_.size()) - 1;
  }

  int32_t op1(int32_t a, const A& pa) {
    const auto pofs = static_cast<uint32_t>(parts_.size());
    parts_.push_back(pa);
    heads_.push_back({a, -1, pofs, kOp1});
    return static_cast<int32_t>(heads_.size()) - 1;
  }

  int32_t op2(int32_t a, int32_t b, const A& pa, const A& pb) {
    const auto pofs = static_cast<uint32_t>(parts_.size());
    parts_.push_back(pa);
    parts_.push_back(pb);
    heads_.push_back({a, b, pofs, kOp2});
    return static_cast<int32_t>(heads_.size()) - 1;
  }

  int32_t extract(int32_t a, int comp) {
    heads_.push_back({a, comp, 0, kExtract});
    return static_cast<int32_t>(heads_.size()) - 1;
  }

  int32_t probe_op(int32_t a, bool take) {
    heads_.push_back({a, -1, 0, take ? kProbeTake : kProbeSeed});
    return static_cast<int32_t>(heads_.size()) - 1;
  }

  // d(comp0 of root) w.r.t. the first grad.size() leaves.
  void backward(int32_t root, std::span<double> grad) {
    adj_.assign(heads_.size(), A{});
    add_comp(adj_[root], 0, 1.0);
    for (int32_t i = static_cast<int32_t>(heads_.size()) - 1; i >= 0; --i) {
      const Head& h = heads_[i];
      switch (h.tag) {
        case kLeaf:
          break;
        case kOp1:
          adj_[h.a] += mulT(parts_[h.pofs], adj_[i]);
          break;
        case kOp2:
          adj_[h.a] += mulT(parts_[h.pofs], adj_[i]);
          adj_[h.b] += mulT(parts_[h.pofs + 1], adj_[i]);
          break;
        case kExtract:
          add_comp(adj_[h.a], h.b, get_comp(adj_[i], 0));
          break;
        case kProbeSeed:
        case kProbeTake:
          if constexpr (is_dual_alg<A>::value) {
            if (h.tag == kProbeSeed)
              adj_[h.a].v += adj_[i].v;
            else
              adj_[h.a].d += adj_[i].v;
          }
          break;
      }
    }
    for (size_t k = 0; k < grad.size(); ++k) grad[k] = get_comp(adj_[k], 0);
  }

  void reset() {
    heads_.clear();
    parts_.clear();
    n_leaves_ = 0;
  }

  size_t size() const { return heads_.size(); }
  int n_leaves() const { return n_leaves_; }

 private:
  std::vector<Head> heads_;
  std::vector<A> parts_;
  std::vector<A> adj_;
  int n_leaves_ = 0;
};

template <class A>
inline thread_local Tape<A>* tls_tape = nullptr;

// RAII binding of a tape to the current thread.
template <class A>
struct TapeScope {
  explicit TapeScope(Tape<A>& t) : prev(tls_tape<A>) { tls_tape<A> = &t; }
  ~TapeScope() { tls_tape<A> = prev; }
  Tape<A>* prev;
};

// ---------------------------------------------------------------------------
// Var<A>: recorded scalar. i < 0 marks a constant (not on the tape).
// ---------------------------------------------------------------------------

template <class A>
struct Var {
  A v{};
  int32_t i = -1;

  Var() = default;
  Var(double x) : v(x), i(-1) {}  // NOLINT: constants embed implicitly
  Var(const A& val, int32_t idx) : v(val), i(idx) {}

  static Var leaf(const A& val) { return {val, tls_tape<A>->leaf()}; }
  static Var constant(const A& val) { return {val, -1}; }
};

template <class A> double val0(const Var<A>& x) { return val0(x.v); }

namespace detail {
template <class A>
inline Var<A> record1(const A& val, const Var<A>& x, const A& px) {
  if (x.i < 0) return {val, -1};
  return {val, tls_tape<A>->op1(x.i, px)};
}
template <class A>
inline Var<A> record2(const A& val, const Var<A>& x, const Var<A>& y,
                      const A& px, const A& py) {
  if (x.i < 0 && y.i < 0) return {val, -1};
  if (y.i < 0) return {val, tls_tape<A>->op1(x.i, px)};
  if (x.i < 0) return {val, tls_tape<A>->op1(y.i, py)};
  return {val, tls_tape<A>->op2(x.i, y.i, px, py)};
}
}  // namespace detail

template <class A> Var<A> operator-(const Var<A>& x) {
  return detail::record1(-x.v, x, A(-1.0));
}
template <class A> Var<A> operator+(const Var<A>& x, const Var<A>& y) {
  return detail::record2(x.v + y.v, x, y, A(1.0), A(1.0));
}
template <class A> Var<A> operator-(const Var<A>& x, const Var<A>& y) {
  return detail::record2(x.v - y.v, x, y, A(1.0), A(-1.0));
}
template <class A> Var<A> operator*(const Var<A>& x, const Var<A>& y) {
  return detail::record2(x.v * y.v, x, y, y.v, x.v);
}
template <class A> Var<A> operator/(const Var<A>& x, const Var<A>& y) {
  A inv = A(1.0) / y.v;
  A q = x.v * inv;
  return detail::record2(q, x, y, inv, -q * inv);
}
template <class A> Var<A>& operator+=(Var<A>& x, const Var<A>& y) { x = x + y; return x; }
template <class A> Var<A>& operator-=(Var<A>& x, const Var<A>& y) { x = x - y; return x; }
template <class A> Var<A>& operator*=(Var<A>& x, const Var<A>& y) { x = x * y; return x; }

template <class A> Var<A> exp(const Var<A>& x) {
  using std::exp;
  A e = exp(x.v);
  return detail::record1(e, x, e);
}
template <class A> Var<A> log(const Var<A>& x) {
  using std::log;
  return detail::record1(log(x.v), x, A(1.0) / x.v);
}
template <class A> Var<A> tanh(const Var<A>& x) {
  using std::tanh;
  A t = tanh(x.v);
  return detail::record1(t, x, A(1.0) - t * t);
}
template <class A> Var<A> sqrt(const Var<A>& x) {
  using std::sqrt;
  A s = sqrt(x.v);
  return detail::record1(s, x, A(0.5) / s);
}
template <class A> Var<A> sin(const Var<A>& x) {
  using std::sin; using std::cos;
  return detail::record1(sin(x.v), x, cos(x.v));
}
template <class A> Var<A> cos(const Var<A>& x) {
  using std::sin; using std::cos;
  return detail::record1(cos(x.v), x, -sin(x.v));
}
template <class A> Var<A> atan2(const Var<A>& y, const Var<A>& x) {
  using std::atan2;
  A r2 = x.v * x.v + y.v * y.v;
  return detail::record2(atan2(y.v, x.v), y, x, x.v / r2, -(y.v / r2));
}

// Component access for jet-valued scalars -----------------------------------

inline double comp_extract(double x, int k) { return k == 0 ? x : 0.0; }
template <int D> Jet<D> comp_extract(const Jet<D>& x, int k) { return Jet<D>(x.c[k]); }
inline Jet2 comp_extract(const Jet2& x, int k) { return Jet2(get_comp(x, k)); }
template <class T> Dual<T> comp_extract(const Dual<T>& x, int k) {
  return Dual<T>(get_comp(x, k));
}
template <class A> Var<A> comp_extract(const Var<A>& x, int k) {
  A val = A(get_comp(x.v, k));
  if (x.i < 0) return {val, -1};
  return {val, tls_tape<A>->extract(x.i, k)};
}

// Probe slot: the outer Dual layer reserved for divergence/trace terms ------

template <class T> Dual<T> probe_seed(const Dual<T>& x) { return {x.v, T(1.0)}; }
template <class T> Dual<T> probe_take(const Dual<T>& x) { return {x.d, T{}}; }
template <class T> Dual<T> probe_clear(const Dual<T>& x) { return {x.v, T{}}; }

template <class A> Var<A> probe_seed(const Var<A>& x) {
  static_assert(is_dual_alg<A>::value);
  A val{x.v.v, decltype(x.v.v)(1.0)};
  if (x.i < 0) return {val, -1};
  return {val, tls_tape<A>->probe_op(x.i, false)};
}
template <class A> Var<A> probe_take(const Var<A>& x) {
  static_assert(is_dual_alg<A>::value);
  A val{x.v.d, decltype(x.v.d){}};
  if (x.i < 0) return {val, -1};
  return {val, tls_tape<A>->probe_op(x.i, true)};
}
template <class A> Var<A> probe_clear(const Var<A>& x) {
  static_assert(is_dual_alg<A>::value);
  A val{x.v.v, decltype(x.v.v){}};
  if (x.i < 0) return {val, -1};
  return {val, tls_tape<A>->probe_op(x.i, false)};
}

}  // namespace nfqs
