#pragma once

#include <string>
#include <vector>

#include "fracgs/branch.hpp"
#include "fracgs/model.hpp"

namespace fracgs {

struct NormalizedSolution {
  double lambda = 0.0;
  BranchPoint point;
  bool refined = false;
  int corrector_solves = 0;
};

struct NormalizedResult {
  double rho = 0.0;
  std::vector<NormalizedSolution> solutions;
  double q_min = 0.0;
  double q_max = 0.0;
  std::string message;
};

/// Brackets of sign(Q - rho) on consecutive branch points, each refined by a
/// safeguarded secant iteration with corrector solves (needs point states), or
/// reported as the bracket's linear-interpolation estimate.
NormalizedResult solve_normalized(const ProblemSpec& problem, double rho, const BranchRecord& record, bool refine,
                                  const StepControl& control = {});

struct RegimeReport {
  double gamma_small = 0.0;
  double gamma_large = 0.0;
  double sign_at_zero = 0.0;           // gamma - 2/(alpha-2), lambda -> 0- frame
  double sign_at_minus_infinity = 0.0;  // gamma - 2/(beta-2), lambda -> -inf frame
  LimitBehavior limit_at_zero = LimitBehavior::unknown;
  LimitBehavior limit_at_minus_infinity = LimitBehavior::unknown;
  std::string existence_regime;
  std::vector<std::string> notes;
};

RegimeReport asymptotic_regimes(const ProblemSpec& problem);

}  // namespace fracgs
