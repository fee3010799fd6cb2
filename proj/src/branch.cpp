#include "fracgs/branch.hpp"

#include <algorithm>
#include <cmath>

#include "fracgs/krylov.hpp"
#include "fracgs/lspec.hpp"
#include "fracgs/rescale.hpp"
#include "fracgs/spectral.hpp"
#include "fracgs/verify.hpp"

namespace fracgs {

std::string to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::marginal: return "marginal";
  }
  return "?";
}

Stability stability_from_string(const std::string& s) {
  if (s == "stable") return Stability::stable;
  if (s == "unstable") return Stability::unstable;
  if (s == "marginal") return Stability::marginal;
  throw Error("unknown stability label '" + s + "'");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::range_end: return "range_end";
    case Termination::event_morse_change: return "event_morse_change";
    case Termination::event_kernel: return "event_kernel";
    case Termination::event_solver_failure: return "event_solver_failure";
    case Termination::event_boundary_mass: return "event_boundary_mass";
  }
  return "?";
}

Tangent tangent(const ProblemSpec& problem, double lambda, const Field& u, double rel_tol) {
  LinearizedOperator lp(problem, lambda, u, Variant::plus);
  const double a = preconditioner_shift(problem, lambda);
  KrylovOptions ko;
  ko.rel_tol = rel_tol * 1e-2;
  ko.max_iters = 3000;
  Tangent t;
  const Field rhs = even_part(u);
  auto kr = minres([&](const Field& v) { return even_part(lp.apply(v)); },
                   [&](const Field& v) { return even_part(solve_shifted(problem.op, a, v)); }, rhs, t.tau, ko);
  t.tau = even_part(t.tau);
  Field r = lp.apply(t.tau);
  r -= u;
  t.rel_residual = norm(r) / norm(u);
  t.dQ_dlambda = dot(u, t.tau);
  t.ok = kr.converged && t.rel_residual <= std::max(rel_tol, 1e-12) * 10.0 && t.tau.all_finite();
  return t;
}

double scaled_half_width(const OperatorSpec& op, double base_half_width, double lambda, double lambda_ref) {
  const double ratio = std::abs(lambda / lambda_ref);
  double f = 0.0;
  for (const auto& t : op.terms) f = std::max(f, std::pow(ratio, -1.0 / (2.0 * t.order)));
  return base_half_width * f;
}

GridSpec grid_at(const ProblemSpec& problem, double lambda, const StepControl& control) {
  GridSpec g = problem.grid;
  if (control.box_scaling) g.half_width = scaled_half_width(problem.op, g.half_width, lambda, control.box_ref_lambda);
  return g;
}

Stability classify_stability(double dQ_dlambda, double Q) {
  const double tol = 1e-3 * std::max(Q, 1.0);
  if (dQ_dlambda < -tol) return Stability::stable;
  if (dQ_dlambda > tol) return Stability::unstable;
  return Stability::marginal;
}

Stability classify_stability(const BranchPoint& point) { return classify_stability(point.dQ_dlambda, point.Q); }

double boundary_mass_fraction(const Field& u) {
  const GridSpec& g = u.grid();
  double out = 0.0, all = 0.0;
  std::vector<double> coords;
  for (int i = 0; i < g.points; ++i) coords.push_back(std::abs(g.coord(i)));
  const double R = 0.75 * g.half_width;
  for (std::size_t idx = 0; idx < u.size(); ++idx) {
    std::size_t rem = idx;
    bool outer = false;
    for (int a = 0; a < g.dim; ++a) {
      if (coords[rem % static_cast<std::size_t>(g.points)] > R) outer = true;
      rem /= static_cast<std::size_t>(g.points);
    }
    const double m = u[idx] * u[idx];
    all += m;
    if (outer) out += m;
  }
  return all > 0.0 ? out / all : 0.0;
}

namespace {

struct Measured {
  BranchPoint point;
  Tangent tan;
};

Measured measure(const ProblemSpec& problem, const SolveReport& solve, bool with_morse, double kernel_tol) {
  Measured m;
  BranchPoint& p = m.point;
  const Field& u = solve.state;
  p.lambda = solve.lambda;
  p.Q = solve.functionals.Q;
  p.Phi = solve.functionals.Phi;
  p.gradient_residual = solve.residual;
  p.nehari_rel_residual = solve.nehari_residual;
  p.pohozaev_rel_residual = pohozaev_residual(problem, solve.lambda, u);
  p.half_width = u.grid().half_width;
  m.tan = tangent(problem, solve.lambda, u);
  p.dQ_dlambda = m.tan.dQ_dlambda;
  p.stability = classify_stability(p);
  if (with_morse) {
    LinearizedOperator lp(problem, solve.lambda, u, Variant::plus);
    p.morse_index = morse_and_kernel(lp, kernel_tol).morse_index;
  }
  return m;
}

}  // namespace

BranchPoint measure_point(const ProblemSpec& problem, const SolveReport& solve, bool with_morse, double kernel_tol) {
  return measure(problem.with_grid(solve.state.grid()), solve, with_morse, kernel_tol).point;
}

std::vector<double> lambda_nodes(double a, double b, int count, bool geometric) {
  std::vector<double> out;
  if (count < 2) return {a, b};
  for (int i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / (count - 1);
    if (geometric) {
      if (!(a * b > 0.0)) throw Error("lambda_nodes: geometric spacing needs a range of one sign");
      out.push_back(std::copysign(std::exp((1 - t) * std::log(std::abs(a)) + t * std::log(std::abs(b))), a));
    } else {
      out.push_back((1 - t) * a + t * b);
    }
  }
  out.front() = a;
  out.back() = b;
  return out;
}

BranchRecord continue_branch(const ProblemSpec& problem, const SolveReport& start, std::pair<double, double> range,
                             const StepControl& control) {
  BranchRecord rec;
  rec.problem_hash = problem.hash_hex();
  const auto [a, b] = range;
  rec.direction = b >= a ? 1 : -1;
  const double dir = rec.direction;
  if (!start.converged) throw Error("continue_branch: start state is not converged");
  if (std::abs(start.lambda - a) > 1e-9 * std::max(1.0, std::abs(a)))
    throw Error("continue_branch: start lambda must equal the first end of the range");

  auto problem_at = [&](double l) { return problem.with_grid(grid_at(problem, l, control)); };

  std::vector<double> goals;
  for (double t : control.targets)
    if (dir * (t - a) > 1e-12 * std::max(1.0, std::abs(a)) && dir * (b - t) >= -1e-12 * std::max(1.0, std::abs(b)))
      goals.push_back(t);
  std::sort(goals.begin(), goals.end(), [dir](double x, double y) { return dir * x < dir * y; });
  const bool every_step = goals.empty();
  if (every_step || std::abs(goals.back() - b) > 1e-12 * std::max(1.0, std::abs(b))) goals.push_back(b);

  int recorded = 0;
  auto record_point = [&](Measured& m, const Field& state) -> bool {
    BranchPoint& p = m.point;
    if (p.pohozaev_rel_residual > control.pohozaev_warn)
      rec.warnings.push_back("pohozaev residual " + std::to_string(p.pohozaev_rel_residual) + " at lambda " +
                             std::to_string(p.lambda));
    if (control.keep_states) p.state = state;
    if (control.on_point) control.on_point(p, state);
    rec.points.push_back(p);
    ++recorded;
    if (p.morse_index >= 0 && p.morse_index != 1) {
      rec.termination = Termination::event_morse_change;
      rec.message = "Morse index " + std::to_string(p.morse_index) + " at lambda " + std::to_string(p.lambda);
      return false;
    }
    if (!m.tan.ok) {
      rec.termination = Termination::event_kernel;
      rec.message = "tangent solve failed (near-singular L+) at lambda " + std::to_string(p.lambda);
      return false;
    }
    if (boundary_mass_fraction(state) > control.boundary_mass_tol) {
      rec.termination = Termination::event_boundary_mass;
      rec.message = "mass reaches the box boundary at lambda " + std::to_string(p.lambda);
      return false;
    }
    return true;
  };

  auto want_morse = [&]() { return control.morse_every > 0 && recorded % control.morse_every == 0; };

  SolveReport cur = start;
  if (cur.state.grid() != grid_at(problem, a, control))
    throw Error("continue_branch: start state is not on the grid required at the first lambda");
  Measured m = measure(problem_at(a), cur, want_morse(), control.kernel_tol);
  if (!record_point(m, cur.state)) return rec;
  Tangent tan = m.tan;

  double step = std::clamp(control.step_initial, control.step_min, control.step_max);
  int easy = 0;
  std::size_t gi = 0;
  double lam = a;
  while (gi < goals.size()) {
    const double goal = goals[gi];
    double dl = std::min(step, std::abs(goal - lam));
    if (lam != 0.0) dl = std::min(dl, control.max_rel_step * std::abs(lam));
    if (dl < control.step_min && std::abs(goal - lam) > control.step_min) {
      rec.termination = Termination::event_solver_failure;
      rec.message = "step fell below the minimum at lambda " + std::to_string(lam);
      return rec;
    }
    double lnew = lam + dir * dl;
    if (std::abs(goal - lnew) <= 1e-12 * std::max(1.0, std::abs(goal))) lnew = goal;

    Field pred = cur.state;
    pred.axpy(lnew - lam, tan.tau);
    const ProblemSpec pnew = problem_at(lnew);
    if (pnew.grid != pred.grid()) pred = resample(pred, pnew.grid);

    auto fail = [&]() {
      step = dl * 0.5;
      easy = 0;
    };
    SolveReport corr;
    try {
      corr = newton_correct(pnew, lnew, pred, control.corrector);
    } catch (const Error&) {
      fail();
      continue;
    }
    if (!corr.converged || relative_distance(corr.state, pred) > 0.25 || !is_positive(corr.state)) {
      fail();
      continue;
    }
    const bool at_goal = lnew == goal;
    Measured mm = measure(pnew, corr, (every_step || at_goal) && want_morse(), control.kernel_tol);
    if (mm.point.pohozaev_rel_residual > control.pohozaev_reject) {
      rec.warnings.push_back("rejected point with pohozaev residual " + std::to_string(mm.point.pohozaev_rel_residual));
      fail();
      continue;
    }
    lam = lnew;
    cur = std::move(corr);
    tan = mm.tan;
    if (every_step || at_goal) {
      if (!record_point(mm, cur.state)) return rec;
      if (at_goal) ++gi;
    } else if (!tan.ok) {
      rec.termination = Termination::event_kernel;
      rec.message = "tangent solve failed (near-singular L+) at lambda " + std::to_string(lam);
      return rec;
    }
    if (cur.newton_iterations <= 3 && ++easy >= 2) {
      step = std::min(step * 1.5, control.step_max);
      easy = 0;
    }
  }
  rec.termination = Termination::range_end;
  return rec;
}

double central_difference(const std::vector<double>& x, const std::vector<double>& f, std::size_t i) {
  const double h1 = x[i] - x[i - 1];
  const double h2 = x[i + 1] - x[i];
  return -h2 / (h1 * (h1 + h2)) * f[i - 1] + (h2 - h1) / (h1 * h2) * f[i] + h1 / (h2 * (h1 + h2)) * f[i + 1];
}

std::vector<MassCurveRow> mass_curve(const BranchRecord& record) {
  std::vector<MassCurveRow> rows;
  std::vector<double> x, phi;
  for (const auto& p : record.points) {
    x.push_back(p.lambda);
    phi.push_back(p.Phi);
    rows.push_back({p.lambda, p.Q, p.dQ_dlambda, p.stability, std::nullopt, std::nullopt});
  }
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
    const double d = central_difference(x, phi, i);
    rows[i].dPhi_dlambda = d;
    rows[i].identity_rel_error = std::abs(d + rows[i].Q) / rows[i].Q;
  }
  return rows;
}

}  // namespace fracgs
