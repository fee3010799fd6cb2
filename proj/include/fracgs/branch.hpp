#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fracgs/grid.hpp"
#include "fracgs/model.hpp"
#include "fracgs/nehari.hpp"

namespace fracgs {

enum class Stability { stable, unstable, marginal };
enum class Termination { range_end, event_morse_change, event_kernel, event_solver_failure, event_boundary_mass };

std::string to_string(Stability s);
std::string to_string(Termination t);
Stability stability_from_string(const std::string& s);

struct BranchPoint {
  double lambda = 0.0;
  std::string checkpoint_id;
  double Q = 0.0;
  double Phi = 0.0;
  int morse_index = -1;  // -1 when not evaluated at this point
  double dQ_dlambda = 0.0;
  double pohozaev_rel_residual = 0.0;
  double nehari_rel_residual = 0.0;
  double gradient_residual = 0.0;
  Stability stability = Stability::marginal;
  double half_width = 0.0;  // box used at this point
  std::optional<Field> state;
};

struct BranchRecord {
  std::string problem_hash;
  std::vector<BranchPoint> points;
  int direction = 1;
  Termination termination = Termination::range_end;
  std::string message;
  std::vector<std::string> warnings;
};

struct Tangent {
  Field tau;
  double dQ_dlambda = 0.0;
  double rel_residual = 0.0;
  bool ok = false;
};

/// Solves L+ tau = u in the even sector; dQ/dlambda = <u, tau>.
Tangent tangent(const ProblemSpec& problem, double lambda, const Field& u, double rel_tol = 1e-8);

/// Box half width at lambda when the box follows the intrinsic length scale:
/// L0 * max_i |lambda / lambda_ref|^{-1/(2 s_i)}.
double scaled_half_width(const OperatorSpec& op, double base_half_width, double lambda, double lambda_ref = -1.0);

struct StepControl {
  double step_initial = 0.05;
  double step_min = 1e-5;
  double step_max = 0.5;
  double max_rel_step = 0.15;  // |dlambda| / |lambda|
  int morse_every = 1;
  /// Record only at these lambdas (sorted along the direction), else every accepted step.
  std::vector<double> targets;
  bool box_scaling = false;
  double box_ref_lambda = -1.0;
  SolveConfig corrector;
  bool keep_states = true;
  double pohozaev_reject = 0.05;
  double pohozaev_warn = 5e-3;
  double boundary_mass_tol = 1e-2;
  double kernel_tol = -1.0;  // <= 0: default band
  /// Called for every accepted point before it is stored.
  std::function<void(BranchPoint&, const Field&)> on_point;
};

/// Grid used for the problem at lambda under the given control.
GridSpec grid_at(const ProblemSpec& problem, double lambda, const StepControl& control);

/// Measures one converged state: Q, Phi, residuals, tangent slope, Morse index.
BranchPoint measure_point(const ProblemSpec& problem, const SolveReport& solve, bool with_morse, double kernel_tol = -1.0);

BranchRecord continue_branch(const ProblemSpec& problem, const SolveReport& start, std::pair<double, double> lambda_range,
                             const StepControl& control);

Stability classify_stability(double dQ_dlambda, double Q);
Stability classify_stability(const BranchPoint& point);

struct MassCurveRow {
  double lambda = 0.0;
  double Q = 0.0;
  double dQ_dlambda = 0.0;
  Stability stability = Stability::marginal;
  std::optional<double> dPhi_dlambda;       // central difference, interior only
  std::optional<double> identity_rel_error;  // |dPhi/dlambda + Q| / Q
};

std::vector<MassCurveRow> mass_curve(const BranchRecord& record);

/// Derivative of samples f at x[i] by the three-point formula on a nonuniform grid.
double central_difference(const std::vector<double>& x, const std::vector<double>& f, std::size_t i);

/// Mass fraction in the outer shell max_i |x_i| > 3L/4.
double boundary_mass_fraction(const Field& u);

/// Evenly spaced or geometric lambda nodes including both ends.
std::vector<double> lambda_nodes(double a, double b, int count, bool geometric);

}  // namespace fracgs
