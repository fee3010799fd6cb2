#include "fracgs/verify.hpp"

#include <algorithm>
#include <cmath>

#include "fracgs/discretization.hpp"
#include "fracgs/spectral.hpp"

namespace fracgs {

PohozaevSides pohozaev_sides(const ProblemSpec& problem, double lambda, const Field& u) {
  require_on_grid(u, problem.grid, "pohozaev_residual");
  auto d = discretize(problem);
  const double N = problem.grid.dim;
  const double dv = problem.grid.cell_volume();
  PohozaevSides s;
  double scale = 0.0;  // sum of |individual contributions|
  const auto terms = seminorm_terms(problem.op, u);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    s.lhs += (N - 2.0 * problem.op.terms[i].order) * terms[i];
    scale += std::abs((N - 2.0 * problem.op.terms[i].order) * terms[i]);
  }
  if (d->has_potential()) {
    double a = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) a += (N * d->potential[i] + d->r_potential[i]) * u[i] * u[i];
    s.lhs += a * dv;
    scale += std::abs(a * dv);
  }
  s.rhs = N * lambda * dot(u, u);
  scale += std::abs(s.rhs);
  for (std::size_t t = 0; t < problem.nonlinearity.terms.size(); ++t) {
    const double p = problem.nonlinearity.terms[t].exponent;
    const auto& h = d->weight[t];
    const auto& rh = d->r_weight[t];
    double b = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) b += (2.0 * N * h[i] + 2.0 * rh[i]) * abs_pow(u[i], p);
    s.rhs += b * dv / p;
    scale += std::abs(b * dv / p);
  }
  // When both sides cancel to ~0 (e.g. N = 2s with the mass-critical power)
  // fall back to the size of the individual contributions.
  double den = std::max(std::abs(s.lhs), std::abs(s.rhs));
  if (den < 1e-3 * scale) den = scale;
  s.residual = den > 0.0 ? std::abs(s.lhs - s.rhs) / den : 0.0;
  return s;
}

double pohozaev_residual(const ProblemSpec& problem, double lambda, const Field& u) {
  return pohozaev_sides(problem, lambda, u).residual;
}

double gn_quotient(const Field& u, double s, double q) {
  const int N = u.grid().dim;
  OperatorSpec op;
  op.terms = {{s, 1.0}};
  const double semi = seminorm_terms(op, u)[0];
  const double mass = dot(u, u);
  const double a = N * (q - 2.0) / (4.0 * s);
  return integral_pow(u, q) / (std::pow(semi, a) * std::pow(mass, q / 2.0 - a));
}

GnReport gn_check(const std::vector<Field>& states, double s, int dim, double q, const std::optional<Field>& reference) {
  GnReport r;
  for (const auto& u : states) {
    if (u.grid().dim != dim) throw GridMismatch("gn_check: dimension mismatch");
    r.quotients.push_back(gn_quotient(u, s, q));
  }
  for (std::size_t i = 0; i < r.quotients.size(); ++i)
    if (r.quotients[i] > r.max_quotient) {
      r.max_quotient = r.quotients[i];
      r.argmax = i;
    }
  if (reference) {
    const double ref = gn_quotient(*reference, s, q);
    for (std::size_t i = 0; i < r.quotients.size(); ++i)
      if (r.quotients[i] > 1.01 * ref) r.violations.push_back(i);
  }
  return r;
}

ScalingFit scaling_fit(const BranchRecord& record, const ProblemSpec& problem, double lo, double hi) {
  if (lo > hi) std::swap(lo, hi);
  std::vector<double> x, y;
  for (const auto& p : record.points)
    if (p.lambda >= lo && p.lambda <= hi && p.lambda < 0.0 && p.Q > 0.0) {
      x.push_back(std::log(-p.lambda));
      y.push_back(std::log(p.Q));
    }
  if (x.size() < 5) throw Error("scaling_fit: fewer than 5 points in the window");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  if (!(std::abs(den) > 1e-14 * n * sxx)) throw Error("scaling_fit: degenerate window");
  ScalingFit f;
  f.points = x.size();
  f.fitted = (n * sxy - sx * sy) / den;
  const auto rep = validate_exponents(problem);
  if (rep.d_exponent) {
    f.predicted = rep.d_exponent;
    const double scale = std::max(std::abs(*rep.d_exponent), 1e-12);
    f.relative_deviation = std::abs(f.fitted - *rep.d_exponent) / scale;
  }
  return f;
}

std::vector<EnvelopeRow> envelope_check(const BranchRecord& record, const ProblemSpec& problem, double slack) {
  const auto rep = validate_exponents(problem);
  std::vector<EnvelopeRow> rows;
  for (const auto& p : record.points) {
    if (!(p.lambda < 0.0)) continue;
    EnvelopeRow r;
    r.lambda = p.lambda;
    r.ratio = p.Phi / (-p.lambda * p.Q);
    r.k = rep.k;
    r.l = rep.l_at(p.lambda);
    if (r.k && *r.k > 0.0 && r.ratio < *r.k * (1.0 - slack)) r.ok = false;
    if (r.l && r.ratio > *r.l * (1.0 + slack)) r.ok = false;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace fracgs
