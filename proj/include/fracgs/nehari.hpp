#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fracgs/grid.hpp"
#include "fracgs/model.hpp"

namespace fracgs {

struct SolveConfig {
  int max_outer_iters = 4000;
  double gradient_tol = 1e-9;     // relative residual
  double newton_switch_tol = 1e-3;
  double step_min = 1e-4;         // BB step safeguard
  double step_max = 10.0;
  double step_initial = 1.0;
  int max_newton_iters = 40;
  bool positivity_enforced = true;
  bool symmetrize = true;
  std::uint64_t seed = 0;
  double collapse_threshold = 1e-8;  // |u| / sqrt(box volume)
};

struct SolveReport {
  Field state;
  double lambda = 0.0;
  FunctionalReport functionals;
  double residual = 0.0;
  double nehari_residual = 0.0;
  int iterations = 0;         // phase 1
  int newton_iterations = 0;  // phase 2
  bool converged = false;
  bool collapsed = false;
};

/// A(u) = <(Op + V - lambda) u, u>
double quadratic_part(const ProblemSpec& problem, double lambda, const Field& u);
/// B_i(u) = int h_i |u|^{p_i}
std::vector<double> power_integrals(const ProblemSpec& problem, const Field& u);

struct RayProjection {
  double t = 0.0;
  Field tu;
};

/// Scales u onto the Nehari manifold: t A(u) = sum t^{p_i-1} B_i(u).
RayProjection ray_project(const ProblemSpec& problem, double lambda, const Field& u);

/// |A - sum B_i| / max(A, sum B_i)
double nehari_residual(const ProblemSpec& problem, double lambda, const Field& u);

/// Gaussian of width |lambda|^{-1/(2 s_min)}, ray-projected.
Field default_initial_guess(const ProblemSpec& problem, double lambda);

/// Phase 1 (projected descent) then phase 2 (Newton).
SolveReport ground_state(const ProblemSpec& problem, double lambda, const SolveConfig& config = {},
                         const std::optional<Field>& init = std::nullopt);

/// Newton iteration only, from `init`.
SolveReport newton_correct(const ProblemSpec& problem, double lambda, const Field& init,
                           const SolveConfig& config = {});

/// Shift used by the (Op + a)^{-1} preconditioner at this lambda.
double preconditioner_shift(const ProblemSpec& problem, double lambda);

}  // namespace fracgs
