#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fracgs/branch.hpp"
#include "fracgs/grid.hpp"
#include "fracgs/model.hpp"

namespace fracgs {

struct PohozaevSides {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
};

/// sum (N - 2 s_i) c_i |(-Delta)^{s_i/2} u|^2 + N int V u^2 + int r V' u^2
///   = N lambda int u^2 + sum int (2N h_j + 2 r h_j') |u|^{p_j} / p_j
PohozaevSides pohozaev_sides(const ProblemSpec& problem, double lambda, const Field& u);
double pohozaev_residual(const ProblemSpec& problem, double lambda, const Field& u);

/// int |u|^q / (|(-Delta)^{s/2}u|^{N(q-2)/2s} * |u|_2^{q - N(q-2)/2s}), all norms squared-integral based.
double gn_quotient(const Field& u, double s, double q);

struct GnReport {
  std::vector<double> quotients;
  double max_quotient = 0.0;
  std::size_t argmax = 0;
  /// Indices whose quotient exceeds the reference by more than 1%.
  std::vector<std::size_t> violations;
};

GnReport gn_check(const std::vector<Field>& states, double s, int dim, double q,
                  const std::optional<Field>& reference = std::nullopt);

struct ScalingFit {
  double fitted = 0.0;
  std::optional<double> predicted;
  std::optional<double> relative_deviation;
  std::size_t points = 0;
};

/// Least-squares slope of log Q against log(-lambda) over points with lambda in [lo, hi].
ScalingFit scaling_fit(const BranchRecord& record, const ProblemSpec& problem, double lo, double hi);

struct EnvelopeRow {
  double lambda = 0.0;
  double ratio = 0.0;  // Phi / (-lambda Q)
  std::optional<double> k;
  std::optional<double> l;
  bool ok = true;
};

std::vector<EnvelopeRow> envelope_check(const BranchRecord& record, const ProblemSpec& problem, double slack = 0.01);

}  // namespace fracgs
