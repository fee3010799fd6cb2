#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "fracgs/model.hpp"
#include "fracgs/spectral.hpp"

namespace fracgs {

/// Node-wise samples of every radial coefficient of a problem, plus its
/// spectral tables.  Built once per problem content and shared.
struct Discretization {
  ProblemSpec problem;
  std::shared_ptr<const SpectralContext> ctx;
  std::shared_ptr<const MultiplierTable> table;
  std::vector<double> radius;
  std::vector<std::vector<double>> weight;    // h_i(|x|)
  std::vector<std::vector<double>> r_weight;  // |x| h_i'(|x|)
  std::vector<double> potential;              // V(|x|), empty when V = 0
  std::vector<double> r_potential;            // |x| V'(|x|), empty when V = 0

  bool has_potential() const { return !potential.empty(); }
};

std::shared_ptr<const Discretization> discretize(const ProblemSpec& problem);

/// |x|^e with fast paths for small integer e >= 0.
inline double abs_pow(double x, double e) {
  const double a = x < 0 ? -x : x;
  if (e == 1.0) return a;
  if (e == 2.0) return a * a;
  if (e == 3.0) return a * a * a;
  if (e == 0.0) return 1.0;
  return std::pow(a, e);
}

}  // namespace fracgs
