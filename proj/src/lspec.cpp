#include "fracgs/lspec.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "fracgs/discretization.hpp"
#include "fracgs/lobpcg.hpp"
#include "fracgs/spectral.hpp"

namespace fracgs {

std::string to_string(Sector s) { return s == Sector::even ? "even" : "full"; }

LinearizedOperator::LinearizedOperator(const ProblemSpec& problem, double lambda, const Field& state, Variant variant)
    : problem_(problem), lambda_(lambda), state_(state), variant_(variant) {
  require_on_grid(state, problem.grid, "LinearizedOperator");
  require_finite(state, "LinearizedOperator");
  auto d = discretize(problem);
  const std::size_t n = state.size();
  local_.assign(n, -lambda);
  if (d->has_potential())
    for (std::size_t i = 0; i < n; ++i) local_[i] += d->potential[i];
  for (std::size_t t = 0; t < problem.nonlinearity.terms.size(); ++t) {
    const double p = problem.nonlinearity.terms[t].exponent;
    const double factor = variant == Variant::plus ? p - 1.0 : 1.0;
    const auto& h = d->weight[t];
    for (std::size_t i = 0; i < n; ++i) local_[i] -= factor * h[i] * abs_pow(state[i], p - 2.0);
  }
  max_symbol_ = *std::max_element(d->table->total.begin(), d->table->total.end());
  state_residual_ = norm(state) > 0.0 ? relative_residual(problem, state, lambda) : 0.0;
}

Field LinearizedOperator::apply(const Field& v) const {
  auto d = discretize(problem_);
  Field out = d->ctx->apply_multiplier(v, d->table->total);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] += local_[i] * v[i];
  return out;
}

double LinearizedOperator::norm_estimate() const {
  double m = 0.0;
  for (double x : local_) m = std::max(m, std::abs(x));
  return max_symbol_ + m;
}

double default_kernel_tol(const LinearizedOperator& linop) { return 1e-6 * linop.norm_estimate(); }

Field random_smooth_field(const GridSpec& grid, std::uint64_t seed, bool even) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Field f(grid);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = nd(rng);
  OperatorSpec lap;
  f = solve_shifted(lap, 1.0, f);
  f = solve_shifted(lap, 1.0, f);
  if (even) f = even_part(f);
  const double n = norm(f);
  if (n > 0.0) f *= 1.0 / n;
  return f;
}

namespace {

std::size_t sector_dimension(const GridSpec& g, Sector sector) {
  if (sector == Sector::full) return g.size();
  const std::size_t per = static_cast<std::size_t>(g.cell_centered ? g.points / 2 : g.points / 2 + 1);
  std::size_t n = 1;
  for (int a = 0; a < g.dim; ++a) n *= per;
  return n;
}

struct Eig {
  std::vector<double> values;
  std::vector<Field> vectors;
  std::vector<double> residuals;
  int iterations = 0;
  bool converged = false;
};

template <class ApplyA>
Eig lowest(const GridSpec& grid, const OperatorSpec& op, ApplyA&& apply_a, int m, Sector sector,
           std::vector<Field> seeds, const EigenOptions& opt) {
  const bool even = sector == Sector::even;
  const int block = m + opt.guard_vectors;
  std::vector<Field> x0;
  for (auto& s : seeds)
    if (static_cast<int>(x0.size()) < block) x0.push_back(std::move(s));
  std::uint64_t k = 0;
  while (static_cast<int>(x0.size()) < block) x0.push_back(random_smooth_field(grid, opt.seed * 1000003ull + k++, even));

  auto project = [even](const Field& v) { return even ? even_part(v) : v; };
  auto precond = [&op](const Field& r, double theta) { return solve_shifted(op, std::abs(theta) + 1.0, r); };
  LobpcgOptions lo;
  lo.tol = opt.residual_tol;
  lo.max_iters = opt.max_iters;
  auto res = lobpcg(apply_a, precond, project, std::move(x0), lo);

  Eig e;
  e.iterations = res.iterations;
  const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(m), res.values.size());
  e.converged = true;
  for (std::size_t j = 0; j < keep; ++j) {
    e.values.push_back(res.values[j]);
    e.vectors.push_back(res.vectors[j]);
    e.residuals.push_back(res.residuals[j]);
    if (res.residuals[j] > opt.residual_tol * 1.5) e.converged = false;
  }
  if (keep < static_cast<std::size_t>(m)) e.converged = false;
  return e;
}

}  // namespace

SpectrumReport smallest_eigenpairs(const LinearizedOperator& linop, int m, Sector sector, double tol,
                                   const EigenOptions& opt) {
  if (m < 1) throw Error("smallest_eigenpairs: m must be >= 1");
  const GridSpec& g = linop.problem().grid;
  if (static_cast<std::size_t>(m + opt.guard_vectors) > sector_dimension(g, sector))
    throw Error("smallest_eigenpairs: requested count exceeds the sector dimension");
  SpectrumReport rep;
  rep.sector = sector;
  rep.tol = tol > 0.0 ? tol : default_kernel_tol(linop);

  std::vector<Field> seeds;
  const double un = norm(linop.state());
  if (un > 0.0) seeds.push_back((1.0 / un) * linop.state());
  auto apply = [&linop](const Field& v) { return linop.apply(v); };
  Eig e = lowest(g, linop.problem().op, apply, m, sector, std::move(seeds), opt);

  rep.eigenvalues = e.values;
  rep.eigenfields = std::move(e.vectors);
  rep.residuals = e.residuals;
  rep.iterations = e.iterations;
  rep.converged = e.converged;
  for (double ev : rep.eigenvalues) {
    if (ev < -rep.tol) ++rep.morse_index;
    else if (ev <= rep.tol) ++rep.kernel_dim_estimate;
  }
  if (!rep.converged) rep.warnings.push_back("eigensolver did not reach the residual tolerance");
  if (linop.state_residual() > 1e-4)
    rep.warnings.push_back("linearization point is not a solution (relative gradient residual " +
                           std::to_string(linop.state_residual()) + ")");
  return rep;
}

double calibrated_kernel_tol(const LinearizedOperator& fine, const LinearizedOperator& coarse) {
  auto smallest_abs = [](const LinearizedOperator& l) {
    auto r = smallest_eigenpairs(l, 3, Sector::even, 1e-300);
    double m = std::numeric_limits<double>::infinity();
    for (double ev : r.eigenvalues) m = std::min(m, std::abs(ev));
    return m;
  };
  const double delta = std::abs(smallest_abs(fine) - smallest_abs(coarse));
  return std::max(10.0 * delta, default_kernel_tol(fine));
}

LinearGround linear_ground(const OperatorSpec& op, const PotentialSpec& potential, const GridSpec& grid) {
  LinearGround out;
  if (potential.is_zero()) {
    out.lambda1 = 0.0;
    out.eigenfield = Field(grid, 1.0 / std::sqrt(std::pow(2.0 * grid.half_width, grid.dim)));
    return out;
  }
  std::vector<double> V = node_radii(grid);
  for (auto& r : V) r = potential.value(r);
  auto apply = [&](const Field& v) {
    Field o = apply_operator(op, v);
    for (std::size_t i = 0; i < v.size(); ++i) o[i] += V[i] * v[i];
    return o;
  };
  std::vector<Field> seeds{Field(grid, 1.0)};
  EigenOptions opt;
  opt.residual_tol = 1e-9;
  opt.max_iters = 2000;
  Eig e = lowest(grid, op, apply, 1, Sector::even, std::move(seeds), opt);
  if (!e.converged) throw ConvergenceError("linear_ground: eigensolver did not converge");
  out.lambda1 = e.values[0];
  out.eigenfield = std::move(e.vectors[0]);
  out.residual = e.residuals[0];
  double s = 0.0;
  for (std::size_t i = 0; i < out.eigenfield.size(); ++i) s += out.eigenfield[i];
  if (s < 0.0) out.eigenfield *= -1.0;
  return out;
}

MorseVerdict morse_and_kernel(const LinearizedOperator& linop, double tol, int count) {
  MorseVerdict v;
  auto rep = smallest_eigenpairs(linop, count, Sector::even, tol);
  v.tol = rep.tol;
  v.morse_index = rep.morse_index;
  v.eigenvalues = rep.eigenvalues;
  v.warnings = rep.warnings;
  v.min_abs_eig_even = std::numeric_limits<double>::infinity();
  for (double ev : rep.eigenvalues) v.min_abs_eig_even = std::min(v.min_abs_eig_even, std::abs(ev));
  v.nondegenerate = rep.kernel_dim_estimate == 0;
  v.marginal = v.nondegenerate && v.min_abs_eig_even <= 10.0 * v.tol;
  return v;
}

namespace {

// |P_span d| / |d| for the span of `basis`
double span_cosine(const std::vector<Field>& basis, const Field& d) {
  if (basis.empty()) return 0.0;
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd G(n, n);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b(i) = dot(basis[static_cast<std::size_t>(i)], d);
    for (Eigen::Index j = 0; j < n; ++j) G(i, j) = dot(basis[static_cast<std::size_t>(i)], basis[static_cast<std::size_t>(j)]);
  }
  const Eigen::VectorXd c = G.ldlt().solve(b);
  const double dd = dot(d, d);
  return dd > 0.0 ? std::sqrt(std::max(0.0, b.dot(c)) / dd) : 0.0;
}

}  // namespace

TranslationModes translation_modes(const LinearizedOperator& linop, double tol) {
  const int N = linop.state().grid().dim;
  TranslationModes t;
  auto rep = smallest_eigenpairs(linop, N + 2, Sector::full, tol);
  t.tol = rep.tol;
  t.eigenvalues = rep.eigenvalues;
  std::vector<Field> zero, nearest;
  std::vector<std::size_t> order(rep.eigenvalues.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(rep.eigenvalues[a]) < std::abs(rep.eigenvalues[b]);
  });
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t i = order[k];
    if (std::abs(rep.eigenvalues[i]) <= t.tol) zero.push_back(rep.eigenfields[i]);
    if (static_cast<int>(nearest.size()) < N && rep.eigenvalues[i] > -t.tol) nearest.push_back(rep.eigenfields[i]);
  }
  t.near_zero = static_cast<int>(zero.size());
  t.ok = t.near_zero == N;
  for (int a = 0; a < N; ++a) {
    const Field d = partial_derivative(linop.state(), a);
    t.cosine.push_back(span_cosine(zero, d));
    t.cosine_nearest.push_back(span_cosine(nearest, d));
    if (!(t.cosine.back() > 0.99)) t.ok = false;
  }
  return t;
}

}  // namespace fracgs
