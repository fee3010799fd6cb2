#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fracgs/branch.hpp"
#include "fracgs/grid.hpp"
#include "fracgs/model.hpp"
#include "fracgs/nehari.hpp"

namespace fracgs {

/// out(x) = amplitude * u(dilation * x) on `out_grid`, by separable periodic
/// band-limited interpolation of u.  Points mapped outside u's box get 0.
Field resample(const Field& u, const GridSpec& out_grid, double dilation = 1.0, double amplitude = 1.0);

enum class Frame { w, v };
std::string to_string(Frame f);

struct FrameMap {
  double amplitude = 1.0;
  double dilation = 1.0;
  /// Q(frame state) / Q(state)
  double mass_factor = 1.0;
};

/// w = |lambda|^{-1/(p-2)} u(|lambda|^{-1/(2 s_min)} x)
FrameMap w_frame_map(const ProblemSpec& problem, double lambda, double p_small);
/// v = |lambda|^{-1/(q-2)} u(|lambda|^{-1/(2 s_max)} x)
FrameMap v_frame_map(const ProblemSpec& problem, double lambda, double q_large);

/// Frame transforms; output on `out_grid` (u's grid when omitted).  Throw
/// FrameError when mass leaves the box or the result is under-resolved.
Field to_w_frame(const ProblemSpec& problem, double lambda, const Field& u, double p_small,
                 const std::optional<GridSpec>& out_grid = std::nullopt);
Field to_v_frame(const ProblemSpec& problem, double lambda, const Field& u, double q_large,
                 const std::optional<GridSpec>& out_grid = std::nullopt);

struct LimitProblem {
  double order = 1.0;
  double exponent = 3.0;
  double coeff = 1.0;  // m in (-Delta)^s w + w = m |w|^{p-2} w
};

ProblemSpec limit_problem(const LimitProblem& limit, const GridSpec& grid);
SolveReport limit_ground_state(const LimitProblem& limit, const GridSpec& grid, const SolveConfig& config = {});

struct ConvergenceRow {
  double lambda = 0.0;
  double l2_distance = 0.0;
  double energy_distance = 0.0;  // relative H^s seminorm distance
  bool skipped = false;
  std::string reason;
};

struct ConvergenceReport {
  Frame frame = Frame::w;
  std::vector<ConvergenceRow> rows;
  /// Distances decrease over the last five usable rows taken toward the limit.
  bool monotone_toward_limit = false;
};

/// Rows follow the record's order.  Every point must carry its state.
ConvergenceReport convergence_report(const ProblemSpec& problem, const BranchRecord& record, Frame frame,
                                     const SolveReport& limit_state, double limit_order);

}  // namespace fracgs
