#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fracgs/lspec.hpp"
#include "fracgs/model.hpp"
#include "fracgs/spectral.hpp"
#include "support.hpp"

using namespace fracgs;
using namespace fracgs::testing;

TEST(Functionals, ZeroField) {
  const ProblemSpec p = pure_power(2, 5.0, 32, 3.0);
  const auto f = evaluate_functionals(p, Field(p.grid), -1.0);
  EXPECT_EQ(f.S, 0.0);
  EXPECT_EQ(f.G, 0.0);
  EXPECT_EQ(f.F, 0.0);
  EXPECT_EQ(f.Q, 0.0);
  EXPECT_EQ(f.Phi, 0.0);
  EXPECT_EQ(gradient(p, Field(p.grid), -1.0).max_abs(), 0.0);
}

TEST(Functionals, LatticeModeParseval) {
  ProblemSpec p = pure_power(1, 4.0, 64, 4.0);
  Field u(p.grid);
  for (int i = 0; i < p.grid.points; ++i) u[static_cast<std::size_t>(i)] = std::cos(2.0 * std::numbers::pi * p.grid.coord(i) / p.grid.half_width);
  const auto f = evaluate_functionals(p, u, 0.0);
  const double xi = 2.0 * std::numbers::pi / p.grid.half_width;
  EXPECT_LT(rel(f.S, 0.5 * xi * xi * dot(u, u)), 1e-12);
  EXPECT_LT(rel(dot(u, u), p.grid.half_width), 1e-12);  // int cos^2 over [-L, L) = L
}

TEST(Functionals, SechSoliton) {
  const ProblemSpec p = pure_power(1, 40.0, 4096, 4.0);
  const Field u = sech_soliton(p.grid);
  const auto f = evaluate_functionals(p, u, -1.0);
  // int 2 sech^2 = 4, int |u'|^2 = 4/3, int u^4 = 16/3
  EXPECT_NEAR(f.Q, 2.0, 1e-6);
  EXPECT_NEAR(f.S, 2.0 / 3.0, 1e-6);
  EXPECT_NEAR(f.F, 4.0 / 3.0, 1e-6);
  EXPECT_NEAR(f.Phi, 4.0 / 3.0, 1e-5);
  EXPECT_EQ(f.Phi, f.S + f.G - f.F - f.lambda * f.Q);
  EXPECT_LT(relative_residual(p, u, -1.0), 1e-5);
}

namespace {

ProblemSpec kitchen_sink() {
  ProblemSpec p;
  p.grid = {2, 8.0, 64, false};
  p.op.terms = {{0.6, 1.0}, {1.0, 0.5}};
  p.potential = PotentialSpec::bounded(1.0, 1.0);
  p.nonlinearity.terms = {{3.0, WeightProfile::rational(2.0, 0.5)}, {3.5, WeightProfile::constant(0.7)}};
  return p;
}

double fd_error(const ProblemSpec& p, const Field& u, double lambda, std::uint64_t seed) {
  const Field v = random_smooth_field(p.grid, seed, false);
  const double eps = 1e-5;
  Field up = u, um = u;
  up.axpy(eps, v);
  um.axpy(-eps, v);
  const double fd = (evaluate_functionals(p, up, lambda).Phi - evaluate_functionals(p, um, lambda).Phi) / (2.0 * eps);
  const Field g = gradient(p, u, lambda);
  return std::abs(fd - dot(g, v)) / (norm(g) * norm(v));
}

}  // namespace

TEST(Gradient, MatchesFiniteDifferences) {
  const ProblemSpec p = kitchen_sink();
  Field u = gaussian(p.grid, 1.5, 1.2);
  u += 0.3 * random_smooth_field(p.grid, 99, false);
  for (std::uint64_t s = 0; s < 10; ++s) EXPECT_LT(fd_error(p, u, -0.7, s), 1e-6) << "direction " << s;
}

TEST(Gradient, HardyFiniteDifferences) {
  ProblemSpec p;
  p.grid = {3, 6.0, 24, true};
  p.potential = PotentialSpec::hardy(1.0);
  p.nonlinearity.terms = {{3.0, WeightProfile::constant(1.0)}};
  const Field u = gaussian(p.grid, 1.2, 2.0);
  for (std::uint64_t s = 0; s < 5; ++s) EXPECT_LT(fd_error(p, u, -1.0, s), 1e-6);
}

TEST(Weights, RationalInvariants) {
  for (auto [k, l] : {std::pair{1.0, 1.0}, {2.0, 0.5}, {3.0, 2.0}}) {
    const WeightProfile h = WeightProfile::rational(k, l);
    EXPECT_EQ(h.asymptotic_slope(), -k * l);
    double prev_h = h.value(0.0), prev_q = 0.0;
    for (int i = 1; i < 2000; ++i) {
      const double r = 0.01 * i;
      const double q = h.r_derivative(r) / h.value(r);
      EXPECT_LE(h.value(r), prev_h);
      EXPECT_LE(q, prev_q + 1e-14);
      prev_h = h.value(r);
      prev_q = q;
      const double fd = (h.value(r + 1e-6) - h.value(r - 1e-6)) / 2e-6;
      EXPECT_NEAR(h.derivative(r), fd, 1e-6);
    }
  }
  EXPECT_EQ(WeightProfile::constant(2.0).asymptotic_slope(), 0.0);
}

TEST(Config, ViolationsAreCollected) {
  ProblemSpec p;
  p.grid = {2, -1.0, 7, false};
  p.op.terms = {{1.5, -1.0}};
  p.nonlinearity.terms = {{1.5, WeightProfile::constant(-1.0)}};
  EXPECT_GE(p.violations().size(), 4u);
  EXPECT_THROW(p.validate(), ConfigError);

  ProblemSpec h;
  h.grid = {3, 5.0, 16, false};
  h.potential = PotentialSpec::hardy(1.0);
  EXPECT_FALSE(h.violations().empty()) << "Hardy needs a cell-centered grid";

  ProblemSpec super = pure_power(3, 5.0, 16, 7.0);  // above 2N/(N-2) = 6
  EXPECT_FALSE(super.violations().empty());
  EXPECT_EQ(critical_sobolev_exponent(3, 1.0), 6.0);
  EXPECT_TRUE(std::isinf(critical_sobolev_exponent(2, 1.0)));
}

TEST(Config, HashIsContentBased) {
  const ProblemSpec a = kitchen_sink();
  ProblemSpec b = kitchen_sink();
  EXPECT_EQ(a.hash(), b.hash());
  b.nonlinearity.terms[1].exponent = 3.5000000001;
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_EQ(a.hash_hex().size(), 16u);
}

// d(lambda) ~ (-lambda)^{2/(p-2) - N/(2s)} for a pure power, and k = 1/(1 + d).
TEST(Exponents, PurePowerTable) {
  struct Row {
    int N;
    double s, p, d;
  };
  for (const Row r : {Row{2, 1.0, 3.0, 1.0}, Row{2, 0.5, 2.5, 2.0}, Row{1, 1.0, 4.0, 0.5}, Row{2, 1.0, 4.0, 0.0},
                      Row{3, 1.0, 3.0, 0.5}}) {
    const auto rep = validate_exponents(pure_power(r.N, 10.0, 16, r.p, r.s));
    ASSERT_TRUE(rep.d_exponent.has_value());
    EXPECT_NEAR(*rep.d_exponent, r.d, 1e-12) << r.N << " " << r.s << " " << r.p;
    ASSERT_TRUE(rep.k && rep.l);
    EXPECT_NEAR(*rep.k, 1.0 / (1.0 + r.d), 1e-12);
    EXPECT_EQ(*rep.k, *rep.l);
    EXPECT_EQ(rep.family, "pure_power");
  }
  const auto q3 = validate_exponents(pure_power(2, 10.0, 16, 3.0));
  EXPECT_NEAR(*q3.k, 0.5, 1e-12);
  const auto mc = validate_exponents(pure_power(2, 10.0, 16, 4.0));
  EXPECT_EQ(mc.exponents[0].mass_class, Criticality::critical);
}

TEST(Exponents, Hardy) {
  ProblemSpec p;
  p.grid = {3, 8.0, 16, true};
  p.potential = PotentialSpec::hardy(1.0);
  p.nonlinearity.terms = {{3.0, WeightProfile::constant(1.0)}};
  const auto rep = validate_exponents(p);
  EXPECT_EQ(rep.family, "hardy");
  EXPECT_NEAR(*rep.k, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(*rep.l, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(*rep.d_exponent, 0.5, 1e-12);
}

TEST(Exponents, MixedAndWeighted) {
  ProblemSpec m = pure_power(2, 10.0, 16, 3.0);
  m.nonlinearity.terms.push_back({5.0, WeightProfile::constant(1.0)});
  const auto rm = validate_exponents(m);
  EXPECT_EQ(rm.family, "mixed_power");
  EXPECT_EQ(rm.alpha, 3.0);
  EXPECT_EQ(rm.beta, 5.0);
  EXPECT_FALSE(rm.d_exponent.has_value());
  ASSERT_TRUE(rm.k && rm.l);
  EXPECT_LT(*rm.k, *rm.l);

  ProblemSpec w = pure_power(2, 10.0, 16, 3.0);
  w.nonlinearity.terms[0].weight = WeightProfile::rational(1.0, 1.0);
  const auto rw = validate_exponents(w);
  EXPECT_EQ(rw.family, "weighted_power");
  EXPECT_EQ(rw.theta, -1.0);
  EXPECT_EQ(rw.tau, 0.0);
  EXPECT_TRUE(rw.violations.empty());
}

TEST(Exponents, PureFunction) {
  const ProblemSpec p = kitchen_sink();
  const auto a = validate_exponents(p), b = validate_exponents(p);
  EXPECT_EQ(a.k, b.k);
  EXPECT_EQ(a.l, b.l);
  EXPECT_EQ(a.notes, b.notes);
  EXPECT_EQ(a.existence_regime, b.existence_regime);
}
