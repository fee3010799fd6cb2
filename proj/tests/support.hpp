#pragma once

#include <cmath>
#include <random>

#include "fracgs/grid.hpp"
#include "fracgs/model.hpp"

namespace fracgs::testing {

inline ProblemSpec pure_power(int dim, double half_width, int points, double p, double s = 1.0) {
  ProblemSpec pr;
  pr.grid = {dim, half_width, points, false};
  pr.op.terms = {{s, 1.0}};
  pr.nonlinearity.terms = {{p, WeightProfile::constant(1.0)}};
  return pr;
}

/// sqrt(2|lambda|) sech(sqrt|lambda| x), the exact 1-D cubic soliton.
inline Field sech_soliton(const GridSpec& g, double lambda = -1.0) {
  Field u(g);
  const double k = std::sqrt(-lambda);
  for (int i = 0; i < g.points; ++i) u[static_cast<std::size_t>(i)] = std::sqrt(2.0) * k / std::cosh(k * g.coord(i));
  return u;
}

/// Uniform noise; not smooth, only for algebraic identities.
inline Field noise(const GridSpec& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Field f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = U(rng);
  return f;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace fracgs::testing
