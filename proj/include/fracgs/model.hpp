#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fracgs/grid.hpp"

namespace fracgs {

struct OperatorTerm {
  double order = 1.0;  // s in (0, 1]
  double coeff = 1.0;  // c > 0
  friend bool operator==(const OperatorTerm&, const OperatorTerm&) = default;
};

/// sum_i c_i (-Delta)^{s_i}; one term is the plain fractional Laplacian,
/// two terms the mixed operator.
struct OperatorSpec {
  std::vector<OperatorTerm> terms{{1.0, 1.0}};

  double min_order() const;
  double max_order() const;
  /// Fourier symbol at |xi|^2 = xi2.
  double symbol(double xi2) const;
  std::vector<std::string> violations() const;

  friend bool operator==(const OperatorSpec&, const OperatorSpec&) = default;
};

/// Radial profile used both for nonlinearity weights h(r) and bounded potentials.
struct WeightProfile {
  enum class Kind { constant, rational, one_minus_rational };

  Kind kind = Kind::constant;
  double c = 1.0;  // constant value
  double k = 1.0;  // r^k
  double l = 1.0;  // outer power

  static WeightProfile constant(double c) { return {Kind::constant, c, 1.0, 1.0}; }
  /// r -> 1/(1+r^k)^l
  static WeightProfile rational(double k, double l) { return {Kind::rational, 1.0, k, l}; }
  /// r -> 1 - 1/(1+r^k)^l
  static WeightProfile one_minus_rational(double k, double l) { return {Kind::one_minus_rational, 1.0, k, l}; }

  double value(double r) const;
  double derivative(double r) const;
  /// r h'(r)
  double r_derivative(double r) const;
  /// lim_{r->inf} r h'/h
  double asymptotic_slope() const;
  bool nonincreasing() const { return kind != Kind::one_minus_rational; }
  std::vector<std::string> violations(const std::string& where) const;

  friend bool operator==(const WeightProfile&, const WeightProfile&) = default;
};

std::string to_string(WeightProfile::Kind k);

struct PotentialSpec {
  enum class Kind { none, bounded, hardy };

  Kind kind = Kind::none;
  WeightProfile profile = WeightProfile::one_minus_rational(1.0, 1.0);  // bounded kind
  double hardy_coeff = 1.0;                                             // a in a/|x|^2
  /// V_used = scale * V + offset (used by the potential homotopy).
  double scale = 1.0;
  double offset = 0.0;

  static PotentialSpec none() { return {}; }
  static PotentialSpec bounded(double k, double l) {
    PotentialSpec p;
    p.kind = Kind::bounded;
    p.profile = WeightProfile::one_minus_rational(k, l);
    return p;
  }
  static PotentialSpec hardy(double a) {
    PotentialSpec p;
    p.kind = Kind::hardy;
    p.hardy_coeff = a;
    return p;
  }

  bool is_zero() const { return (kind == Kind::none || scale == 0.0) && offset == 0.0; }
  double value(double r) const;
  /// r V'(r)
  double r_derivative(double r) const;
  /// sup V (finite for none/bounded)
  double sup_value() const;
  /// sup_{r>0} r V'/V for the bounded kind, sampled.
  std::optional<double> gamma() const;
  std::vector<std::string> violations(const GridSpec& grid) const;

  friend bool operator==(const PotentialSpec&, const PotentialSpec&) = default;
};

std::string to_string(PotentialSpec::Kind k);

struct PowerTerm {
  double exponent = 4.0;
  WeightProfile weight = WeightProfile::constant(1.0);
  friend bool operator==(const PowerTerm&, const PowerTerm&) = default;
};

/// f(|x|, u) = sum_i h_i(|x|) |u|^{p_i - 2} u
struct NonlinearitySpec {
  std::vector<PowerTerm> terms{PowerTerm{}};

  double alpha() const;
  double beta() const;
  bool autonomous() const;
  std::vector<std::string> violations() const;

  friend bool operator==(const NonlinearitySpec&, const NonlinearitySpec&) = default;
};

struct ProblemSpec {
  OperatorSpec op;
  PotentialSpec potential;
  NonlinearitySpec nonlinearity;
  GridSpec grid;

  /// Every violated constraint, empty when admissible.
  std::vector<std::string> violations() const;
  void validate() const;
  /// Canonical text of all fields (17 significant digits).
  std::string canonical() const;
  std::uint64_t hash() const;
  std::string hash_hex() const;
  ProblemSpec with_grid(const GridSpec& g) const;
  bool autonomous() const { return potential.is_zero() && nonlinearity.autonomous(); }

  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

/// 2N/(N-2s), or +inf when N <= 2s.
double critical_sobolev_exponent(int dim, double s);

struct FunctionalReport {
  double S = 0.0;
  double G = 0.0;
  double F = 0.0;
  double Q = 0.0;
  double Phi = 0.0;
  double lambda = 0.0;
};

/// Phi_lambda = S + G - F - lambda Q with midpoint quadrature on the grid.
FunctionalReport evaluate_functionals(const ProblemSpec& problem, const Field& u, double lambda);

/// L2 representation of D Phi_lambda(u):
/// sum c_i(-Delta)^{s_i} u + V u - lambda u - sum h_i |u|^{p_i-2} u.
Field gradient(const ProblemSpec& problem, const Field& u, double lambda);

/// Pointwise nonlinearity f(|x|, u).
Field nonlinearity_field(const ProblemSpec& problem, const Field& u);

/// Relative residual |grad| / |(L + V - lambda) u|.
double relative_residual(const ProblemSpec& problem, const Field& u, double lambda);

enum class Criticality { subcritical, critical, supercritical };
enum class LimitBehavior { zero, infinity, constant, unknown };

std::string to_string(Criticality c);
std::string to_string(LimitBehavior b);

struct ExponentClass {
  double exponent = 0.0;
  Criticality mass_class = Criticality::subcritical;     // vs 2 + 4s/N
  Criticality shifted_class = Criticality::subcritical;  // vs 2 + (2 theta + 4s)/N
};

struct HypothesisReport {
  std::string family;  // pure_power, weighted_power, mixed_power, mixed_operator, hardy, bounded_potential
  int dim = 0;
  double s_min = 0.0;
  double s_max = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double theta = 0.0;
  double tau = 0.0;
  double gamma_small = 0.0;  // N / (2 s_min), lambda -> 0- frame
  double gamma_large = 0.0;  // N / (2 s_max), lambda -> -inf frame
  double mass_critical_exponent = 0.0;
  double shifted_threshold = 0.0;
  std::optional<double> k;
  std::optional<double> l;
  /// Lower bound on lambda* below which the bounded-potential l applies.
  std::optional<double> lambda_star_bound;
  double potential_gamma = 0.0;  // sup r V'/V
  double potential_sup = 0.0;    // |V|_inf
  /// Exponent 1/k - 1 of d(lambda) = C (-lambda)^{1/k-1} when k = l.
  std::optional<double> d_exponent;
  std::vector<ExponentClass> exponents;
  LimitBehavior limit_at_zero = LimitBehavior::unknown;
  LimitBehavior limit_at_minus_infinity = LimitBehavior::unknown;
  std::string existence_regime;
  std::vector<std::string> violations;
  std::vector<std::string> notes;

  /// Upper envelope constant at a given lambda (bounded potentials depend on lambda).
  std::optional<double> l_at(double lambda) const;
};

HypothesisReport validate_exponents(const ProblemSpec& problem);

/// Box half width for which the predicted tail amplitude is below 1e-4 of the peak.
double suggested_half_width(const ProblemSpec& problem, double lambda);

}  // namespace fracgs
