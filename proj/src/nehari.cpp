#include "fracgs/nehari.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fracgs/discretization.hpp"
#include "fracgs/krylov.hpp"
#include "fracgs/lspec.hpp"
#include "fracgs/spectral.hpp"

namespace fracgs {

double quadratic_part(const ProblemSpec& problem, double lambda, const Field& u) {
  auto d = discretize(problem);
  double a = d->ctx->quadratic_form(u, d->table->total);
  double loc = 0.0;
  if (d->has_potential())
    for (std::size_t i = 0; i < u.size(); ++i) loc += d->potential[i] * u[i] * u[i];
  a += loc * problem.grid.cell_volume();
  a -= lambda * dot(u, u);
  return a;
}

std::vector<double> power_integrals(const ProblemSpec& problem, const Field& u) {
  auto d = discretize(problem);
  std::vector<double> b;
  for (std::size_t t = 0; t < problem.nonlinearity.terms.size(); ++t) {
    const double p = problem.nonlinearity.terms[t].exponent;
    const auto& h = d->weight[t];
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += h[i] * abs_pow(u[i], p);
    b.push_back(s * problem.grid.cell_volume());
  }
  return b;
}

namespace {

bool is_zero(const Field& u) {
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u[i] != 0.0) return false;
  return true;
}

double solve_ray(double A, const std::vector<double>& B, const std::vector<double>& p) {
  if (B.size() == 1) return std::pow(A / B[0], 1.0 / (p[0] - 2.0));
  auto g = [&](double t) {
    double s = A;
    for (std::size_t i = 0; i < B.size(); ++i) s -= std::pow(t, p[i] - 2.0) * B[i];
    return s;
  };
  auto dg = [&](double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < B.size(); ++i) s -= (p[i] - 2.0) * std::pow(t, p[i] - 3.0) * B[i];
    return s;
  };
  // Each term alone bounds the root from above; n times the largest from below.
  const double n = static_cast<double>(B.size());
  double lo = std::numeric_limits<double>::infinity(), hi = lo;
  for (std::size_t i = 0; i < B.size(); ++i) {
    if (!(B[i] > 0.0)) continue;
    hi = std::min(hi, std::pow(A / B[i], 1.0 / (p[i] - 2.0)));
    lo = std::min(lo, std::pow(A / (n * B[i]), 1.0 / (p[i] - 2.0)));
  }
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 40; ++it) {
    t = 0.5 * (lo + hi);
    if (g(t) > 0.0) lo = t;
    else hi = t;
    if (hi - lo <= 1e-3 * hi) break;
  }
  t = 0.5 * (lo + hi);
  for (int it = 0; it < 50; ++it) {
    const double step = g(t) / dg(t);
    double tn = t - step;
    if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
    if (g(tn) > 0.0) lo = tn;
    else hi = tn;
    const bool done = std::abs(tn - t) <= 1e-14 * tn;
    t = tn;
    if (done || hi - lo <= 1e-13 * hi) break;
  }
  return t;
}

}  // namespace

RayProjection ray_project(const ProblemSpec& problem, double lambda, const Field& u) {
  require_on_grid(u, problem.grid, "ray_project");
  require_finite(u, "ray_project");
  if (is_zero(u)) throw ZeroField("ray_project: zero field");
  const double A = quadratic_part(problem, lambda, u);
  if (!(A > 0.0)) throw InadmissibleLambda("ray_project: quadratic part A(u) <= 0; lambda lies above the linear ground level");
  const auto B = power_integrals(problem, u);
  double bsum = 0.0;
  std::vector<double> p;
  for (std::size_t i = 0; i < B.size(); ++i) {
    bsum += B[i];
    p.push_back(problem.nonlinearity.terms[i].exponent);
  }
  if (!(bsum > 0.0)) throw ZeroField("ray_project: nonlinear part vanishes");
  RayProjection r;
  r.t = solve_ray(A, B, p);
  r.tu = r.t * u;
  return r;
}

double nehari_residual(const ProblemSpec& problem, double lambda, const Field& u) {
  if (is_zero(u)) throw ZeroField("nehari_residual: zero field");
  const double A = quadratic_part(problem, lambda, u);
  double B = 0.0;
  for (double b : power_integrals(problem, u)) B += b;
  const double den = std::max(std::abs(A), std::abs(B));
  return den > 0.0 ? std::abs(A - B) / den : 0.0;
}

double preconditioner_shift(const ProblemSpec& problem, double lambda) {
  double a = -lambda;
  if (problem.potential.kind == PotentialSpec::Kind::bounded) a += problem.potential.sup_value();
  return a > 1e-3 ? a : 1.0;
}

Field default_initial_guess(const ProblemSpec& problem, double lambda) {
  const double s = problem.op.min_order();
  double decay = -lambda;
  if (problem.potential.kind == PotentialSpec::Kind::bounded) decay += problem.potential.sup_value();
  const double sigma = decay > 1e-3 ? std::pow(decay, -1.0 / (2.0 * s)) : 1.0;
  Field g = gaussian(problem.grid, std::min(sigma, 0.25 * problem.grid.half_width));
  return ray_project(problem, lambda, g).tu;
}

namespace {

Field tidy(const Field& u, const SolveConfig& cfg, bool positivity) {
  Field v = u;
  if (positivity)
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::abs(v[i]);
  if (cfg.symmetrize) v = even_part(v);
  return v;
}

void finish(const ProblemSpec& problem, double lambda, SolveReport& rep) {
  rep.lambda = lambda;
  rep.functionals = evaluate_functionals(problem, rep.state, lambda);
  rep.residual = relative_residual(problem, rep.state, lambda);
  rep.nehari_residual = is_zero(rep.state) ? 1.0 : nehari_residual(problem, lambda, rep.state);
}

bool collapsed(const Field& u, const SolveConfig& cfg) {
  const double vol = std::pow(2.0 * u.grid().half_width, u.grid().dim);
  return norm(u) < cfg.collapse_threshold * std::sqrt(vol);
}

}  // namespace

SolveReport newton_correct(const ProblemSpec& problem, double lambda, const Field& init, const SolveConfig& cfg) {
  require_on_grid(init, problem.grid, "newton_correct");
  require_finite(init, "newton_correct");
  SolveReport rep;
  rep.lambda = lambda;
  Field u = cfg.symmetrize ? even_part(init) : init;
  const double a = preconditioner_shift(problem, lambda);
  auto proj = [&cfg](Field v) { return cfg.symmetrize ? even_part(v) : v; };

  Field g = gradient(problem, u, lambda);
  double res = relative_residual(problem, u, lambda);
  Field best = u;
  double best_res = res;
  for (int it = 0; it < cfg.max_newton_iters && res > cfg.gradient_tol; ++it) {
    LinearizedOperator lp(problem, lambda, u, Variant::plus);
    KrylovOptions ko;
    ko.rel_tol = std::clamp(0.1 * std::sqrt(res), 1e-12, 1e-2);
    ko.max_iters = 600;
    Field rhs = -1.0 * g;
    Field delta;
    minres(
        [&](const Field& v) { return proj(lp.apply(v)); },
        [&](const Field& v) { return proj(solve_shifted(problem.op, a, v)); }, proj(rhs), delta, ko);
    delta = proj(delta);
    double step = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 12; ++bt) {
      Field trial = u;
      trial.axpy(step, delta);
      if (trial.all_finite() && !is_zero(trial)) {
        const double tr = relative_residual(problem, trial, lambda);
        if (tr < res || (bt == 0 && tr < 2.0 * res)) {
          u = std::move(trial);
          res = tr;
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    ++rep.newton_iterations;
    if (!accepted) break;
    if (collapsed(u, cfg)) {
      rep.collapsed = true;
      break;
    }
    g = gradient(problem, u, lambda);
    if (res < best_res) {
      best = u;
      best_res = res;
    }
  }
  rep.state = (res <= best_res) ? u : best;
  finish(problem, lambda, rep);
  rep.converged = !rep.collapsed && rep.residual <= cfg.gradient_tol && rep.nehari_residual <= cfg.gradient_tol;
  return rep;
}

SolveReport ground_state(const ProblemSpec& problem, double lambda, const SolveConfig& cfg,
                         const std::optional<Field>& init) {
  problem.validate();
  if (!(cfg.gradient_tol > 0.0) || !(cfg.newton_switch_tol > 0.0)) throw Error("ground_state: tolerances must be positive");
  Field u = init ? ray_project(problem, lambda, tidy(*init, cfg, cfg.positivity_enforced)).tu
                 : default_initial_guess(problem, lambda);
  const double a = preconditioner_shift(problem, lambda);

  auto energy = [&](const Field& v) { return evaluate_functionals(problem, v, lambda).Phi; };
  SolveReport rep;
  double J = energy(u);
  Field g = gradient(problem, u, lambda);
  Field d = solve_shifted(problem.op, a, g);
  double res = relative_residual(problem, u, lambda);
  double eta = cfg.step_initial;
  Field u_prev, g_prev, d_prev;
  bool have_prev = false;

  int it = 0;
  for (; it < cfg.max_outer_iters && res > cfg.newton_switch_tol; ++it) {
    if (have_prev) {
      Field s = u - u_prev;
      Field y = g - g_prev;
      Field z = d - d_prev;
      const double yz = dot(y, z);
      if (yz > 0.0) eta = std::clamp(dot(s, y) / yz, cfg.step_min, cfg.step_max);
    }
    bool accepted = false;
    Field next;
    double Jn = 0.0;
    double step = eta;
    for (int bt = 0; bt < 30; ++bt) {
      Field trial = u;
      trial.axpy(-step, d);
      trial = tidy(trial, cfg, cfg.positivity_enforced);
      if (trial.all_finite() && !is_zero(trial)) {
        try {
          next = ray_project(problem, lambda, trial).tu;
          Jn = energy(next);
          if (Jn <= J + 1e-14 * std::abs(J)) {
            accepted = true;
            break;
          }
        } catch (const ZeroField&) {
        }
      }
      step *= 0.5;
    }
    if (!accepted) break;
    u_prev = std::move(u);
    g_prev = std::move(g);
    d_prev = std::move(d);
    have_prev = true;
    u = std::move(next);
    J = Jn;
    if (collapsed(u, cfg)) {
      rep.collapsed = true;
      break;
    }
    g = gradient(problem, u, lambda);
    d = solve_shifted(problem.op, a, g);
    res = relative_residual(problem, u, lambda);
  }
  rep.iterations = it;
  if (rep.collapsed) {
    rep.state = u;
    finish(problem, lambda, rep);
    return rep;
  }
  SolveReport nr = newton_correct(problem, lambda, u, cfg);
  nr.iterations = rep.iterations;
  return nr;
}

}  // namespace fracgs
