#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fracgs/grid.hpp"
#include "fracgs/model.hpp"
#include "fracgs/nehari.hpp"

namespace fracgs {

enum class HomotopyKind { weight_zeta, potential_eta };
std::string to_string(HomotopyKind k);

struct HomotopyNode {
  double parameter = 1.0;
  Field state;
  std::string checkpoint_id;
  int morse_index = -1;
  bool positive = false;
  double phi = 0.0;  // int h^zeta |u|^q for the weight kind
  FunctionalReport functionals;
  double residual = 0.0;
};

struct HomotopyPath {
  HomotopyKind kind = HomotopyKind::weight_zeta;
  double lambda = 0.0;
  double lambda1 = 0.0;  // potential kind
  std::vector<HomotopyNode> nodes;
  std::string termination;  // "completed", "corrector_failure", "kernel"
  bool completed = false;
};

struct HomotopyOptions {
  SolveConfig corrector;
  bool morse = true;
  double min_spacing = 1e-3;
  std::function<void(HomotopyNode&)> on_node;
};

/// h^zeta for a rational weight; zeta = 0 gives h = 1.
ProblemSpec weight_homotopy_problem(const ProblemSpec& problem, double zeta);
/// V_eta = eta V + (1 - eta) lambda1
ProblemSpec potential_homotopy_problem(const ProblemSpec& problem, double eta, double lambda1);

/// Follows the state from parameter 1 down to 0 on `nodes` uniform nodes.
HomotopyPath homotopy_path(const ProblemSpec& problem, double lambda, HomotopyKind kind, int nodes,
                           const SolveReport& start, const HomotopyOptions& options = {});

/// Positive, even, clustered random initial field for start `index`.
Field random_start(const ProblemSpec& problem, double lambda, std::uint64_t seed, int index);

/// |grad Phi(u)| * prod_j (1/|u - u_j|^2 + 1)
double deflated_residual(const ProblemSpec& problem, double lambda, const Field& u, const std::vector<Field>& known);

struct ProbeResult {
  std::vector<SolveReport> distinct;  // ascending Phi
  std::vector<SolveReport> ground_states;  // distinct, positive, Phi within 1e-3 of the minimum
  int converged_starts = 0;
  int failed_starts = 0;
  int deflation_attempts = 0;
  int deflation_found = 0;
};

/// Two states are the same when their relative L2 distance, minimised over
/// half-box shifts, is at most 1e-2.
double shift_invariant_distance(const Field& a, const Field& b);

ProbeResult uniqueness_probe(const ProblemSpec& problem, double lambda, int n_starts, int deflation_depth,
                             std::uint64_t seed = 0, const SolveConfig& config = {});

}  // namespace fracgs
