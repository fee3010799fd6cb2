#include "fracgs/normalized.hpp"

#include <algorithm>
#include <cmath>

#include "fracgs/rescale.hpp"

namespace fracgs {

namespace {

Field blend(const Field& a, const Field& b, double t, const GridSpec& g) {
  Field fa = a.grid() == g ? a : resample(a, g);
  Field fb = b.grid() == g ? b : resample(b, g);
  fa *= 1.0 - t;
  fa.axpy(t, fb);
  return fa;
}

}  // namespace

NormalizedResult solve_normalized(const ProblemSpec& problem, double rho, const BranchRecord& record, bool refine,
                                  const StepControl& control) {
  if (record.points.empty()) throw Error("solve_normalized: empty branch record");
  if (!(rho > 0.0)) throw Error("solve_normalized: rho must be positive");
  NormalizedResult res;
  res.rho = rho;
  res.q_min = res.q_max = record.points.front().Q;
  for (const auto& p : record.points) {
    res.q_min = std::min(res.q_min, p.Q);
    res.q_max = std::max(res.q_max, p.Q);
  }
  if (rho < res.q_min || rho > res.q_max) {
    res.message = "rho outside the traced Q range";
    return res;
  }
  const auto& pts = record.points;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double fa0 = pts[i].Q - rho, fb0 = pts[i + 1].Q - rho;
    if (fa0 == 0.0 && i > 0) continue;  // counted as the right end of the previous bracket
    if (!(fa0 * fb0 < 0.0 || fb0 == 0.0 || (fa0 == 0.0 && i == 0))) continue;
    NormalizedSolution sol;
    const double t_lin = fa0 / (fa0 - fb0);
    double la = pts[i].lambda, lb = pts[i + 1].lambda;
    sol.lambda = la + t_lin * (lb - la);
    if (!refine || !pts[i].state || !pts[i + 1].state) {
      BranchPoint bp;
      bp.lambda = sol.lambda;
      bp.Q = rho;
      bp.Phi = pts[i].Phi + t_lin * (pts[i + 1].Phi - pts[i].Phi);
      bp.dQ_dlambda = pts[i].dQ_dlambda + t_lin * (pts[i + 1].dQ_dlambda - pts[i].dQ_dlambda);
      bp.stability = classify_stability(bp);
      sol.point = bp;
      res.solutions.push_back(sol);
      continue;
    }
    // Illinois-safeguarded secant on f(lambda) = Q(lambda) - rho.
    double fa = fa0, fb = fb0;
    int side = 0;
    SolveReport best;
    bool have = false;
    for (int it = 0; it < 40; ++it) {
      double lc = (la * fb - lb * fa) / (fb - fa);
      if (!(std::min(la, lb) < lc && lc < std::max(la, lb))) lc = 0.5 * (la + lb);
      const double t = (lc - pts[i].lambda) / (pts[i + 1].lambda - pts[i].lambda);
      const ProblemSpec pc = problem.with_grid(grid_at(problem, lc, control));
      const Field guess = blend(*pts[i].state, *pts[i + 1].state, t, pc.grid);
      SolveReport r = newton_correct(pc, lc, guess, control.corrector);
      ++sol.corrector_solves;
      if (!r.converged) {
        res.message = "corrector failed during refinement";
        break;
      }
      const double fc = r.functionals.Q - rho;
      best = r;
      have = true;
      if (std::abs(fc) <= 1e-4 * rho) break;
      if (fc * fb < 0.0) {
        la = lb;
        fa = fb;
        lb = lc;
        fb = fc;
        side = 0;
      } else {
        lb = lc;
        fb = fc;
        if (side == -1) fa *= 0.5;
        side = -1;
      }
    }
    if (have) {
      sol.lambda = best.lambda;
      sol.point = measure_point(problem, best, true, control.kernel_tol);
      if (control.keep_states) sol.point.state = best.state;
      sol.refined = std::abs(best.functionals.Q - rho) <= 1e-4 * rho;
    }
    res.solutions.push_back(sol);
  }
  std::sort(res.solutions.begin(), res.solutions.end(),
            [](const NormalizedSolution& x, const NormalizedSolution& y) { return x.lambda < y.lambda; });
  return res;
}

RegimeReport asymptotic_regimes(const ProblemSpec& problem) {
  const auto h = validate_exponents(problem);
  RegimeReport r;
  r.gamma_small = h.gamma_small;
  r.gamma_large = h.gamma_large;
  r.sign_at_zero = h.gamma_small - 2.0 / (h.alpha - 2.0);
  r.sign_at_minus_infinity = h.gamma_large - 2.0 / (h.beta - 2.0);
  r.limit_at_zero = h.limit_at_zero;
  r.limit_at_minus_infinity = h.limit_at_minus_infinity;
  r.existence_regime = h.existence_regime;
  r.notes = h.notes;
  if (!problem.autonomous())
    r.notes.push_back("non-autonomous problem: frame signs are indicative; limits follow the envelope constants");
  return r;
}

}  // namespace fracgs
