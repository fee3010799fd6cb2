#include "fracgs/homotopy.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fracgs/krylov.hpp"
#include "fracgs/lspec.hpp"
#include "fracgs/spectral.hpp"

namespace fracgs {

std::string to_string(HomotopyKind k) { return k == HomotopyKind::weight_zeta ? "weight_zeta" : "potential_eta"; }

ProblemSpec weight_homotopy_problem(const ProblemSpec& problem, double zeta) {
  ProblemSpec p = problem;
  auto& w = p.nonlinearity.terms.at(0).weight;
  if (w.kind != WeightProfile::Kind::rational) throw Error("weight homotopy requires a rational weight");
  if (zeta <= 0.0) w = WeightProfile::constant(1.0);
  else w = WeightProfile::rational(w.k, w.l * zeta);
  return p;
}

ProblemSpec potential_homotopy_problem(const ProblemSpec& problem, double eta, double lambda1) {
  ProblemSpec p = problem;
  p.potential.scale = eta;
  p.potential.offset = (1.0 - eta) * lambda1;
  return p;
}

HomotopyPath homotopy_path(const ProblemSpec& problem, double lambda, HomotopyKind kind, int nodes,
                           const SolveReport& start, const HomotopyOptions& opt) {
  if (nodes < 2) throw Error("homotopy_path: need at least 2 nodes");
  HomotopyPath path;
  path.kind = kind;
  path.lambda = lambda;
  if (kind == HomotopyKind::weight_zeta) {
    if (problem.nonlinearity.terms.size() != 1 ||
        problem.nonlinearity.terms[0].weight.kind != WeightProfile::Kind::rational)
      throw Error("weight homotopy requires a single power with a rational weight");
  } else {
    if (problem.potential.kind != PotentialSpec::Kind::bounded)
      throw Error("potential homotopy requires a bounded potential");
    if (lambda > 0.0) throw Error("potential homotopy requires lambda <= 0");
    path.lambda1 = linear_ground(problem.op, problem.potential, problem.grid).lambda1;
  }
  auto problem_at = [&](double t) {
    return kind == HomotopyKind::weight_zeta ? weight_homotopy_problem(problem, t)
                                             : potential_homotopy_problem(problem, t, path.lambda1);
  };
  auto make_node = [&](double t, const SolveReport& r) {
    HomotopyNode n;
    const ProblemSpec pt = problem_at(t);
    n.parameter = t;
    n.state = r.state;
    n.functionals = r.functionals;
    n.residual = r.residual;
    n.positive = is_positive(r.state);
    if (kind == HomotopyKind::weight_zeta) n.phi = power_integrals(pt, r.state)[0];
    if (opt.morse) n.morse_index = morse_and_kernel(LinearizedOperator(pt, lambda, r.state, Variant::plus)).morse_index;
    if (opt.on_node) opt.on_node(n);
    return n;
  };

  path.nodes.push_back(make_node(1.0, start));
  std::vector<double> targets;
  for (int i = 1; i < nodes; ++i) targets.push_back(1.0 - static_cast<double>(i) / (nodes - 1));
  double cur = 1.0;
  SolveReport state = start;
  for (double target : targets) {
    while (cur > target) {
      double next = target;
      SolveReport r;
      bool ok = false;
      while (true) {
        r = newton_correct(problem_at(next), lambda, state.state, opt.corrector);
        ok = r.converged && is_positive(r.state);
        if (ok) break;
        const double mid = 0.5 * (cur + next);
        if (cur - mid < opt.min_spacing) break;
        next = mid;
      }
      if (!ok) {
        path.termination = "corrector_failure";
        return path;
      }
      cur = next;
      state = r;
    }
    path.nodes.push_back(make_node(target, state));
    if (opt.morse && path.nodes.back().morse_index != 1) {
      path.termination = "kernel";
      return path;
    }
  }
  path.termination = "completed";
  path.completed = true;
  return path;
}

Field random_start(const ProblemSpec& problem, double lambda, std::uint64_t seed, int index) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(index) + 1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const GridSpec& g = problem.grid;
  double decay = -lambda;
  if (problem.potential.kind == PotentialSpec::Kind::bounded) decay += problem.potential.sup_value();
  const double sigma = decay > 1e-3 ? std::pow(decay, -1.0 / (2.0 * problem.op.min_order())) : 1.0;
  const int bumps = 1 + static_cast<int>(U(rng) * 3.0);
  std::vector<std::vector<double>> x;
  for (int a = 0; a < g.dim; ++a) x.push_back(node_coordinate(g, a));
  Field f(g);
  for (int b = 0; b < bumps; ++b) {
    std::vector<double> c(static_cast<std::size_t>(g.dim));
    for (auto& ci : c) ci = (2.0 * U(rng) - 1.0) * sigma;
    const double w = sigma * (0.5 + U(rng));
    const double amp = 0.5 + U(rng);
    for (std::size_t i = 0; i < f.size(); ++i) {
      double r2 = 0.0;
      for (int a = 0; a < g.dim; ++a) r2 += (x[static_cast<std::size_t>(a)][i] - c[static_cast<std::size_t>(a)]) *
                                             (x[static_cast<std::size_t>(a)][i] - c[static_cast<std::size_t>(a)]);
      f[i] += amp * std::exp(-r2 / (2.0 * w * w));
    }
  }
  return even_part(f);
}

namespace {

// grad ln M for M = prod (1/|u-u_j|^2 + 1)
Field grad_log_deflation(const Field& u, const std::vector<Field>& known, double& M) {
  Field g(u.grid());
  M = 1.0;
  for (const auto& k : known) {
    Field d = u - k;
    const double n2 = dot(d, d);
    const double m = 1.0 / n2 + 1.0;
    M *= m;
    g.axpy(-2.0 / (n2 * n2 * m), d);
  }
  return g;
}

}  // namespace

double deflated_residual(const ProblemSpec& problem, double lambda, const Field& u, const std::vector<Field>& known) {
  double M = 1.0;
  grad_log_deflation(u, known, M);
  return norm(gradient(problem, u, lambda)) * M;
}

double shift_invariant_distance(const Field& a, const Field& b) {
  double best = relative_distance(a, b);
  const unsigned masks = 1u << a.grid().dim;
  for (unsigned m = 1; m < masks; ++m) best = std::min(best, relative_distance(half_box_shift(a, m), b));
  return best;
}

namespace {

SolveReport deflated_newton(const ProblemSpec& problem, double lambda, Field u, const std::vector<Field>& known,
                            const SolveConfig& cfg) {
  const double a = preconditioner_shift(problem, lambda);
  SolveReport rep;
  double res = relative_residual(problem, u, lambda);
  double dres = deflated_residual(problem, lambda, u, known);
  for (int it = 0; it < 80 && res > cfg.gradient_tol; ++it) {
    LinearizedOperator lp(problem, lambda, u, Variant::plus);
    Field g = gradient(problem, u, lambda);
    KrylovOptions ko;
    ko.rel_tol = 1e-6;
    ko.max_iters = 400;
    Field d0;
    minres([&](const Field& v) { return even_part(lp.apply(v)); },
           [&](const Field& v) { return even_part(solve_shifted(problem.op, a, v)); }, even_part(-1.0 * g), d0, ko);
    double M = 1.0;
    Field gl = grad_log_deflation(u, known, M);
    const double denom = 1.0 - dot(gl, d0);
    Field delta = d0;
    if (std::abs(denom) > 1e-12) delta *= 1.0 / denom;
    double step = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 10; ++bt) {
      Field trial = u;
      trial.axpy(step, delta);
      if (trial.all_finite() && trial.max_abs() > 0.0) {
        const double dr = deflated_residual(problem, lambda, trial, known);
        if (dr < dres) {
          u = std::move(trial);
          dres = dr;
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    ++rep.newton_iterations;
    if (!accepted) break;
    res = relative_residual(problem, u, lambda);
  }
  rep.state = u;
  rep.lambda = lambda;
  rep.functionals = evaluate_functionals(problem, u, lambda);
  rep.residual = res;
  rep.nehari_residual = u.max_abs() > 0.0 ? nehari_residual(problem, lambda, u) : 1.0;
  rep.converged = res <= cfg.gradient_tol && u.max_abs() > 0.0;
  return rep;
}

}  // namespace

ProbeResult uniqueness_probe(const ProblemSpec& problem, double lambda, int n_starts, int deflation_depth,
                             std::uint64_t seed, const SolveConfig& config) {
  if (n_starts < 2) throw Error("uniqueness_probe: n_starts must be >= 2");
  ProbeResult out;
  auto add_if_new = [&](const SolveReport& r) {
    for (const auto& d : out.distinct)
      if (shift_invariant_distance(r.state, d.state) <= 1e-2) return false;
    out.distinct.push_back(r);
    return true;
  };
  std::vector<Field> inits;
  for (int i = 0; i < n_starts; ++i) {
    inits.push_back(random_start(problem, lambda, seed, i));
    SolveReport r;
    try {
      r = ground_state(problem, lambda, config, inits.back());
    } catch (const Error&) {
      ++out.failed_starts;
      continue;
    }
    if (!r.converged || !is_positive(r.state)) {
      ++out.failed_starts;
      continue;
    }
    ++out.converged_starts;
    add_if_new(r);
  }
  for (int depth = 0; depth < deflation_depth && !out.distinct.empty(); ++depth) {
    std::vector<Field> known;
    for (const auto& d : out.distinct) known.push_back(d.state);
    for (const auto& init : inits) {
      ++out.deflation_attempts;
      SolveReport r;
      try {
        r = deflated_newton(problem, lambda, ray_project(problem, lambda, init).tu, known, config);
      } catch (const Error&) {
        continue;
      }
      if (r.converged && is_positive(r.state) && add_if_new(r)) {
        ++out.deflation_found;
        break;
      }
    }
  }
  std::sort(out.distinct.begin(), out.distinct.end(),
            [](const SolveReport& a, const SolveReport& b) { return a.functionals.Phi < b.functionals.Phi; });
  if (!out.distinct.empty()) {
    const double pmin = out.distinct.front().functionals.Phi;
    for (const auto& d : out.distinct)
      if (is_positive(d.state) && d.functionals.Phi <= pmin + 1e-3 * std::abs(pmin)) out.ground_states.push_back(d);
  }
  return out;
}

}  // namespace fracgs
