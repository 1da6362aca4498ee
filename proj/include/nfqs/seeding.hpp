#pragma once

#include "nfqs/scalars.hpp"
#include "nfqs/tape.hpp"

namespace nfqs {

// Uniform construction of flow inputs across scalar families: plain values,
// jet-seeded coordinates, and their tape-recorded counterparts. Flat
// component indexing is shared: comp 0 = value, comp 1+j = direction j,
// comp 2 = second derivative for Jet2.
template <class S>
struct SIO;

template <>
struct SIO<double> {
  static double input(double v) { return v; }
};

template <int D>
struct SIO<Jet<D>> {
  static Jet<D> input(double v) { return Jet<D>(v); }
  static Jet<D> seeded(double v, int dir) { return Jet<D>::seeded(v, dir); }
};

template <>
struct SIO<Jet2> {
  static Jet2 input(double v) { return Jet2(v); }
  static Jet2 seeded(double v, int) { return Jet2::seeded(v); }
};

template <class T>
struct SIO<Dual<T>> {
  static Dual<T> input(double v) { return Dual<T>(SIO<T>::input(v), T{}); }
  static Dual<T> seeded(double v, int dir) {
    return Dual<T>(SIO<T>::seeded(v, dir), T{});
  }
};

template <class A>
struct SIO<Var<A>> {
  static Var<A> input(double v) { return Var<A>::constant(SIO<A>::input(v)); }
  static Var<A> seeded(double v, int dir) {
    return Var<A>::constant(SIO<A>::seeded(v, dir));
  }
};

}  // namespace nfqs
