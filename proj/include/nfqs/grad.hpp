#pragma once

#include <functional>
#include <span>
#include <vector>

#include "nfqs/tape.hpp"

namespace nfqs {

// Gradient of a scalar composed from library ops, w.r.t. a flat vector.
inline std::vector<double> grad(
    const std::function<Var<double>(std::span<const Var<double>>)>& f,
    std::span<const double> at) {
  Tape<double> tape;
  TapeScope<double> scope(tape);
  std::vector<Var<double>> xs;
  xs.reserve(at.size());
  for (double v : at) xs.push_back(Var<double>::leaf(v));
  Var<double> y = f(xs);
  std::vector<double> g(at.size(), 0.0);
  if (y.i >= 0) tape.backward(y.i, g);
  return g;
}

// d^2/dx^2 of a scalar function of a single spatial coordinate.
inline double second_derivative(const std::function<Jet2(const Jet2&)>& f,
                                double x) {
  return f(Jet2::seeded(x)).d2;
}

}  // namespace nfqs
