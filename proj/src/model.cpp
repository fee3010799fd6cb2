#include "fracgs/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include "fracgs/discretization.hpp"
#include "fracgs/spectral.hpp"

namespace fracgs {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

// ---------------------------------------------------------------- operator

double OperatorSpec::min_order() const {
  double s = kInf;
  for (const auto& t : terms) s = std::min(s, t.order);
  return s;
}

double OperatorSpec::max_order() const {
  double s = 0.0;
  for (const auto& t : terms) s = std::max(s, t.order);
  return s;
}

double OperatorSpec::symbol(double xi2) const {
  double m = 0.0;
  for (const auto& t : terms) m += t.coeff * std::pow(xi2, t.order);
  return m;
}

std::vector<std::string> OperatorSpec::violations() const {
  std::vector<std::string> v;
  if (terms.empty()) v.push_back("operator needs at least one term");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    if (!(t.order > 0.0 && t.order <= 1.0)) v.push_back("operator term " + std::to_string(i) + ": order s must lie in (0,1]");
    if (!(t.coeff > 0.0)) v.push_back("operator term " + std::to_string(i) + ": coefficient must be positive");
    if (i > 0 && !(t.order > terms[i - 1].order)) v.push_back("operator orders must be strictly increasing");
  }
  return v;
}

// ---------------------------------------------------------------- weights

std::string to_string(WeightProfile::Kind k) {
  switch (k) {
    case WeightProfile::Kind::constant: return "constant";
    case WeightProfile::Kind::rational: return "rational";
    case WeightProfile::Kind::one_minus_rational: return "one_minus_rational";
  }
  return "?";
}

double WeightProfile::value(double r) const {
  switch (kind) {
    case Kind::constant: return c;
    case Kind::rational: return std::pow(1.0 + std::pow(r, k), -l);
    case Kind::one_minus_rational: return 1.0 - std::pow(1.0 + std::pow(r, k), -l);
  }
  return 0.0;
}

double WeightProfile::derivative(double r) const {
  if (kind == Kind::constant) return 0.0;
  if (r == 0.0) {
    if (k > 1.0) return 0.0;
    return kind == Kind::rational ? -l : l;  // k == 1
  }
  const double rk = std::pow(r, k);
  const double d = l * k * std::pow(r, k - 1.0) * std::pow(1.0 + rk, -l - 1.0);
  return kind == Kind::rational ? -d : d;
}

double WeightProfile::r_derivative(double r) const {
  if (kind == Kind::constant || r == 0.0) return 0.0;
  const double rk = std::pow(r, k);
  const double d = l * k * rk * std::pow(1.0 + rk, -l - 1.0);
  return kind == Kind::rational ? -d : d;
}

double WeightProfile::asymptotic_slope() const {
  switch (kind) {
    case Kind::constant: return 0.0;
    case Kind::rational: return -k * l;
    case Kind::one_minus_rational: return 0.0;
  }
  return 0.0;
}

std::vector<std::string> WeightProfile::violations(const std::string& where) const {
  std::vector<std::string> v;
  switch (kind) {
    case Kind::constant:
      if (!(c > 0.0)) v.push_back(where + ": constant weight must be positive");
      break;
    case Kind::rational:
      if (!(k >= 1.0)) v.push_back(where + ": rational weight needs k >= 1");
      if (!(l > 0.0)) v.push_back(where + ": rational weight needs l > 0");
      break;
    case Kind::one_minus_rational:
      if (!(k >= 1.0)) v.push_back(where + ": one_minus_rational profile needs k >= 1");
      if (!(k * l >= 1.0)) v.push_back(where + ": one_minus_rational profile needs k*l >= 1");
      break;
  }
  return v;
}

// ---------------------------------------------------------------- potential

std::string to_string(PotentialSpec::Kind k) {
  switch (k) {
    case PotentialSpec::Kind::none: return "none";
    case PotentialSpec::Kind::bounded: return "bounded";
    case PotentialSpec::Kind::hardy: return "hardy";
  }
  return "?";
}

double PotentialSpec::value(double r) const {
  double v = 0.0;
  switch (kind) {
    case Kind::none: v = 0.0; break;
    case Kind::bounded: v = profile.value(r); break;
    case Kind::hardy: v = hardy_coeff / (r * r); break;
  }
  return scale * v + offset;
}

double PotentialSpec::r_derivative(double r) const {
  double v = 0.0;
  switch (kind) {
    case Kind::none: v = 0.0; break;
    case Kind::bounded: v = profile.r_derivative(r); break;
    case Kind::hardy: v = -2.0 * hardy_coeff / (r * r); break;
  }
  return scale * v;
}

double PotentialSpec::sup_value() const {
  switch (kind) {
    case Kind::none: return offset;
    case Kind::bounded: return scale * 1.0 + offset;
    case Kind::hardy: return kInf;
  }
  return kInf;
}

std::optional<double> PotentialSpec::gamma() const {
  if (kind != Kind::bounded) return std::nullopt;
  // r V'/V -> k as r -> 0 for this family; sample the rest.
  double g = profile.k;
  for (int i = 0; i <= 4000; ++i) {
    const double r = std::pow(10.0, -4.0 + 8.0 * i / 4000.0);
    const double v = profile.value(r);
    if (v > 0.0) g = std::max(g, profile.r_derivative(r) / v);
  }
  return g;
}

std::vector<std::string> PotentialSpec::violations(const GridSpec& grid) const {
  std::vector<std::string> v;
  if (!(scale >= 0.0)) v.push_back("potential scale must be nonnegative");
  switch (kind) {
    case Kind::none: break;
    case Kind::bounded: {
      if (profile.kind != WeightProfile::Kind::one_minus_rational)
        v.push_back("bounded potential must use the one_minus_rational profile");
      auto pv = profile.violations("potential");
      v.insert(v.end(), pv.begin(), pv.end());
      if (pv.empty()) {
        // V and V + rV' nondecreasing, sampled.
        double prev_v = -kInf, prev_w = -kInf;
        for (int i = 0; i <= 2000; ++i) {
          const double r = 50.0 * i / 2000.0;
          const double val = profile.value(r);
          const double w = val + profile.r_derivative(r);
          if (val < prev_v - 1e-12) { v.push_back("potential V must be nondecreasing"); break; }
          if (w < prev_w - 1e-12) { v.push_back("potential V + rV' must be nondecreasing"); break; }
          prev_v = val;
          prev_w = w;
        }
      }
      break;
    }
    case Kind::hardy:
      if (!(hardy_coeff > 0.0)) v.push_back("hardy coefficient a must be positive");
      if (!grid.cell_centered) v.push_back("hardy potential requires a cell_centered grid (no node at the origin)");
      break;
  }
  return v;
}

// ---------------------------------------------------------------- nonlinearity

double NonlinearitySpec::alpha() const {
  double a = kInf;
  for (const auto& t : terms) a = std::min(a, t.exponent);
  return a;
}

double NonlinearitySpec::beta() const {
  double b = -kInf;
  for (const auto& t : terms) b = std::max(b, t.exponent);
  return b;
}

bool NonlinearitySpec::autonomous() const {
  return std::all_of(terms.begin(), terms.end(),
                     [](const PowerTerm& t) { return t.weight.kind == WeightProfile::Kind::constant; });
}

std::vector<std::string> NonlinearitySpec::violations() const {
  std::vector<std::string> v;
  if (terms.empty()) v.push_back("nonlinearity needs at least one term");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    const std::string where = "nonlinearity term " + std::to_string(i);
    if (!(t.exponent > 2.0)) v.push_back(where + ": exponent p must exceed 2");
    if (t.weight.kind == WeightProfile::Kind::one_minus_rational)
      v.push_back(where + ": one_minus_rational is a potential profile, not a weight");
    auto wv = t.weight.violations(where);
    v.insert(v.end(), wv.begin(), wv.end());
  }
  return v;
}

// ---------------------------------------------------------------- problem

double critical_sobolev_exponent(int dim, double s) {
  if (dim <= 2.0 * s) return kInf;
  return 2.0 * dim / (dim - 2.0 * s);
}

std::vector<std::string> ProblemSpec::violations() const {
  std::vector<std::string> v = grid.violations();
  auto add = [&v](std::vector<std::string> w) { v.insert(v.end(), w.begin(), w.end()); };
  add(op.violations());
  add(potential.violations(grid));
  add(nonlinearity.violations());
  if (v.empty()) {
    const double crit = critical_sobolev_exponent(grid.dim, op.min_order());
    if (!(nonlinearity.beta() < crit))
      v.push_back("largest exponent " + fmt(nonlinearity.beta()) + " is not below the critical Sobolev exponent " + fmt(crit));
    if (potential.kind == PotentialSpec::Kind::hardy &&
        (op.terms.size() != 1 || op.terms[0].order != 1.0))
      v.push_back("hardy potential is supported only with the plain Laplacian (s = 1)");
  }
  return v;
}

void ProblemSpec::validate() const {
  auto v = violations();
  if (!v.empty()) throw ConfigError(std::move(v));
}

std::string ProblemSpec::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "grid:" << grid.dim << ',' << grid.half_width << ',' << grid.points << ',' << grid.cell_centered << ';';
  os << "op:";
  for (const auto& t : op.terms) os << t.order << ',' << t.coeff << ';';
  os << "pot:" << to_string(potential.kind) << ',' << to_string(potential.profile.kind) << ',' << potential.profile.c
     << ',' << potential.profile.k << ',' << potential.profile.l << ',' << potential.hardy_coeff << ','
     << potential.scale << ',' << potential.offset << ';';
  os << "nl:";
  for (const auto& t : nonlinearity.terms)
    os << t.exponent << ',' << to_string(t.weight.kind) << ',' << t.weight.c << ',' << t.weight.k << ',' << t.weight.l
       << ';';
  return os.str();
}

std::uint64_t ProblemSpec::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : canonical()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string ProblemSpec::hash_hex() const {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << hash();
  return os.str();
}

ProblemSpec ProblemSpec::with_grid(const GridSpec& g) const {
  ProblemSpec p = *this;
  p.grid = g;
  return p;
}

// ---------------------------------------------------------------- discretization

std::shared_ptr<const Discretization> discretize(const ProblemSpec& problem) {
  static std::mutex mutex;
  static std::map<std::string, std::shared_ptr<const Discretization>> cache;
  const std::string key = problem.canonical();
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  problem.validate();
  auto d = std::make_shared<Discretization>();
  d->problem = problem;
  d->ctx = spectral_context(problem.grid);
  d->table = multiplier_table(problem.grid, problem.op);
  d->radius = node_radii(problem.grid);
  const std::size_t n = d->radius.size();
  for (const auto& t : problem.nonlinearity.terms) {
    std::vector<double> h(n), rh(n);
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = t.weight.value(d->radius[i]);
      rh[i] = t.weight.r_derivative(d->radius[i]);
    }
    d->weight.push_back(std::move(h));
    d->r_weight.push_back(std::move(rh));
  }
  if (!problem.potential.is_zero()) {
    d->potential.resize(n);
    d->r_potential.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      d->potential[i] = problem.potential.value(d->radius[i]);
      d->r_potential[i] = problem.potential.r_derivative(d->radius[i]);
    }
  }
  std::lock_guard lock(mutex);
  if (cache.size() >= 32) cache.clear();
  auto [it, inserted] = cache.emplace(key, std::move(d));
  return it->second;
}

// ---------------------------------------------------------------- functionals

FunctionalReport evaluate_functionals(const ProblemSpec& problem, const Field& u, double lambda) {
  require_on_grid(u, problem.grid, "evaluate_functionals");
  require_finite(u, "evaluate_functionals");
  auto d = discretize(problem);
  const double dv = problem.grid.cell_volume();
  FunctionalReport r;
  r.lambda = lambda;
  double seminorm = 0.0;
  for (double t : seminorm_terms(problem.op, u)) seminorm += t;
  r.S = 0.5 * seminorm;
  if (d->has_potential()) {
    double g = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) g += d->potential[i] * u[i] * u[i];
    r.G = 0.5 * g * dv;
  }
  for (std::size_t t = 0; t < problem.nonlinearity.terms.size(); ++t) {
    const double p = problem.nonlinearity.terms[t].exponent;
    const auto& h = d->weight[t];
    double f = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) f += h[i] * abs_pow(u[i], p);
    r.F += f * dv / p;
  }
  r.Q = 0.5 * integral_pow(u, 2.0);
  r.Phi = r.S + r.G - r.F - lambda * r.Q;
  return r;
}

Field nonlinearity_field(const ProblemSpec& problem, const Field& u) {
  auto d = discretize(problem);
  Field f(u.grid());
  for (std::size_t t = 0; t < problem.nonlinearity.terms.size(); ++t) {
    const double e = problem.nonlinearity.terms[t].exponent - 2.0;
    const auto& h = d->weight[t];
    for (std::size_t i = 0; i < u.size(); ++i) f[i] += h[i] * abs_pow(u[i], e) * u[i];
  }
  return f;
}

Field gradient(const ProblemSpec& problem, const Field& u, double lambda) {
  require_on_grid(u, problem.grid, "gradient");
  require_finite(u, "gradient");
  auto d = discretize(problem);
  Field g = d->ctx->apply_multiplier(u, d->table->total);
  if (d->has_potential())
    for (std::size_t i = 0; i < u.size(); ++i) g[i] += d->potential[i] * u[i];
  g.axpy(-lambda, u);
  g -= nonlinearity_field(problem, u);
  return g;
}

double relative_residual(const ProblemSpec& problem, const Field& u, double lambda) {
  auto d = discretize(problem);
  Field lin = d->ctx->apply_multiplier(u, d->table->total);
  if (d->has_potential())
    for (std::size_t i = 0; i < u.size(); ++i) lin[i] += d->potential[i] * u[i];
  lin.axpy(-lambda, u);
  Field g = lin - nonlinearity_field(problem, u);
  const double denom = norm(lin);
  return denom > 0.0 ? norm(g) / denom : norm(g);
}

// ---------------------------------------------------------------- hypotheses

std::string to_string(Criticality c) {
  switch (c) {
    case Criticality::subcritical: return "subcritical";
    case Criticality::critical: return "critical";
    case Criticality::supercritical: return "supercritical";
  }
  return "?";
}

std::string to_string(LimitBehavior b) {
  switch (b) {
    case LimitBehavior::zero: return "zero";
    case LimitBehavior::infinity: return "infinity";
    case LimitBehavior::constant: return "constant";
    case LimitBehavior::unknown: return "unknown";
  }
  return "?";
}

std::optional<double> HypothesisReport::l_at(double lambda) const {
  if (!l) return std::nullopt;
  if (family != "bounded_potential" || !lambda_star_bound) return l;
  if (!(lambda <= *lambda_star_bound) || !(lambda < 0.0)) return std::nullopt;
  return *l * (1.0 - (2.0 * s_min + potential_gamma) * potential_sup / (2.0 * s_min * lambda));
}

namespace {

constexpr double kExact = 1e-12;

Criticality classify(double p, double threshold) {
  if (std::abs(p - threshold) <= kExact * std::max(1.0, threshold)) return Criticality::critical;
  return p < threshold ? Criticality::subcritical : Criticality::supercritical;
}

LimitBehavior from_sign(double g, bool positive_means_zero) {
  if (std::abs(g) <= kExact) return LimitBehavior::constant;
  const bool pos = g > 0.0;
  return (pos == positive_means_zero) ? LimitBehavior::zero : LimitBehavior::infinity;
}

// d(lambda) ~ (-lambda)^e: zero at 0- when e > 0, zero at -inf when e < 0.
void limits_from_exponent(double e, HypothesisReport& r) {
  r.limit_at_zero = from_sign(e, true);
  r.limit_at_minus_infinity = from_sign(e, false);
}

std::string regime(LimitBehavior a, LimitBehavior b) {
  using LB = LimitBehavior;
  if (a == LB::constant && b == LB::constant) return "single_rho";
  if (a == LB::zero && b == LB::zero) return "two_solutions_small_rho";
  if (a == LB::infinity && b == LB::infinity) return "two_solutions_large_rho";
  if ((a == LB::zero && b == LB::infinity) || (a == LB::infinity && b == LB::zero)) return "all_rho";
  if (a == LB::zero || b == LB::zero) return "small_rho";
  if (a == LB::infinity || b == LB::infinity) return "large_rho";
  return "undetermined";
}

}  // namespace

HypothesisReport validate_exponents(const ProblemSpec& problem) {
  HypothesisReport r;
  const int N = problem.grid.dim;
  r.dim = N;
  r.violations = problem.violations();
  if (problem.op.terms.empty() || problem.nonlinearity.terms.empty()) return r;

  r.s_min = problem.op.min_order();
  r.s_max = problem.op.max_order();
  r.alpha = problem.nonlinearity.alpha();
  r.beta = problem.nonlinearity.beta();
  r.theta = 0.0;
  for (const auto& t : problem.nonlinearity.terms) r.theta = std::min(r.theta, t.weight.asymptotic_slope());
  r.tau = 0.0;
  r.gamma_small = N / (2.0 * r.s_min);
  r.gamma_large = N / (2.0 * r.s_max);
  r.mass_critical_exponent = 2.0 + 4.0 * r.s_min / N;
  r.shifted_threshold = 2.0 + (2.0 * r.theta + 4.0 * r.s_min) / N;
  for (const auto& t : problem.nonlinearity.terms)
    r.exponents.push_back({t.exponent, classify(t.exponent, r.mass_critical_exponent),
                           classify(t.exponent, r.shifted_threshold)});
  if (N == 1) r.notes.push_back("dim = 1 lies outside the stated range N >= 2; supported for analytic checks only");

  const double a = r.alpha, b = r.beta, th = r.theta, ta = r.tau;
  const bool single_op = problem.op.terms.size() == 1;
  const double s = r.s_min;
  const auto kind = problem.potential.kind;

  if (!single_op) r.family = "mixed_operator";
  else if (kind == PotentialSpec::Kind::hardy) r.family = "hardy";
  else if (kind == PotentialSpec::Kind::bounded) r.family = "bounded_potential";
  else if (problem.nonlinearity.terms.size() > 1) r.family = "mixed_power";
  else if (!problem.nonlinearity.autonomous()) r.family = "weighted_power";
  else r.family = "pure_power";

  if (single_op && kind == PotentialSpec::Kind::none) {
    if ((N - 2.0 * s) * b >= 2.0 * (N + th)) {
      r.violations.push_back("(N-2s) beta >= 2(N+theta): envelope constants undefined");
    } else {
      const double up_thr = (2.0 * (N + th) + 4.0 * s) / N;
      const double lo_thr = (2.0 * (N + ta) + 4.0 * s) / N;
      const double num_l = N * b - 2.0 * (N + th) - 4.0 * s;
      const double num_k = N * a - 2.0 * (N + ta) - 4.0 * s;
      const double den_theta = 2.0 * (N + th) - b * (N - 2.0 * s);
      const double den_tau = 2.0 * (N + ta) - a * (N - 2.0 * s);
      r.l = 1.0 + num_l / (b > up_thr ? den_theta : den_tau);
      r.k = 1.0 + num_k / (a > lo_thr ? den_tau : den_theta);
      if (*r.k <= 0.0) r.notes.push_back("computed k is not positive; the lower envelope carries no information");
    }
  } else if (kind == PotentialSpec::Kind::hardy) {
    if (problem.nonlinearity.terms.size() == 1 && problem.nonlinearity.autonomous()) {
      const double q = b;
      r.k = 1.0 + ((q - 2.0) * N - 4.0) / (2.0 * N - (N - 2.0) * q);
      r.l = r.k;
    } else {
      r.notes.push_back("hardy envelope constants are available for a single unweighted power only");
    }
    if (N < 3) r.notes.push_back("hardy case is stated for N >= 3");
  } else if (kind == PotentialSpec::Kind::bounded) {
    if (problem.nonlinearity.terms.size() == 1) {
      const double q = b;
      const double den = 2.0 * N - q * (N - 2.0 * s);
      if (q > (2.0 * N + 4.0 * s) / N) r.k = 1.0 + (q * N - 2.0 * N - 4.0 * s) / den;
      if (q < (2.0 * (N + th) + 4.0 * s) / N) {
        r.l = 1.0 + (q * N - 2.0 * (N + th) - 4.0 * s) / den;
        const double gamma_v = problem.potential.gamma().value_or(0.0);
        const double vinf = problem.potential.sup_value();
        r.potential_gamma = gamma_v;
        r.potential_sup = vinf;
        r.lambda_star_bound = -((2.0 * s + gamma_v) * vinf / (2.0 * s)) * (2.0 * s * (q - 2.0) - 2.0 * th) /
                              (2.0 * (N + th) + 4.0 * s - q * N);
        r.notes.push_back("bounded potential: l(lambda) = l * (1 - (2s+gamma) |V|_inf / (2 s lambda)) for lambda <= lambda*");
      }
    } else {
      r.notes.push_back("bounded potential envelope constants are available for a single power only");
    }
  } else {
    r.notes.push_back("mixed operators: envelope constants not defined; limits follow the rescaling frames");
  }

  if (r.k && r.l && std::abs(*r.k - *r.l) <= kExact && *r.k > 0.0) r.d_exponent = 1.0 / *r.k - 1.0;

  // Predicted limits of d(lambda).
  if (r.d_exponent && kind != PotentialSpec::Kind::bounded) {
    limits_from_exponent(*r.d_exponent, r);
  } else if (kind == PotentialSpec::Kind::none && problem.nonlinearity.autonomous()) {
    // Rescaling frames: Q(w) = |lambda|^{gamma - 2/(p-2)} Q(u).
    r.limit_at_zero = from_sign(r.gamma_small - 2.0 / (a - 2.0), false);
    r.limit_at_minus_infinity = from_sign(r.gamma_large - 2.0 / (b - 2.0), true);
  } else {
    if (r.k && r.l && *r.k > 0.0) {
      if (*r.k < *r.l && *r.l < 1.0) r.limit_at_zero = LimitBehavior::zero;
      if (*r.l > *r.k && *r.k > 1.0) r.limit_at_zero = LimitBehavior::infinity;
    }
    if (r.l && *r.l < 1.0) r.limit_at_minus_infinity = LimitBehavior::infinity;
    if (r.k && *r.k > 1.0) r.limit_at_minus_infinity = LimitBehavior::zero;
    if (kind == PotentialSpec::Kind::bounded) r.limit_at_zero = LimitBehavior::unknown;
  }
  r.existence_regime = regime(r.limit_at_zero, r.limit_at_minus_infinity);
  return r;
}

double suggested_half_width(const ProblemSpec& problem, double lambda) {
  const int N = problem.grid.dim;
  double decay = -lambda;
  if (problem.potential.kind == PotentialSpec::Kind::bounded) decay = problem.potential.sup_value() - lambda;
  if (!(decay > 0.0)) decay = 1e-2;
  double width = 0.0;
  for (const auto& t : problem.op.terms) width = std::max(width, std::pow(decay / t.coeff, -1.0 / (2.0 * t.order)));
  const double s_min = problem.op.min_order();
  if (s_min < 1.0) return width * std::pow(1e4, 1.0 / (N + 2.0 * s_min));
  return std::log(1e4) / std::sqrt(decay / problem.op.terms.front().coeff) + 2.0 * width;
}

}  // namespace fracgs
