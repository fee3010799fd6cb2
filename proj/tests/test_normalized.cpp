#include <gtest/gtest.h>

#include <cmath>

#include "fracgs/normalized.hpp"
#include "support.hpp"

using namespace fracgs;
using namespace fracgs::testing;

TEST(Normalized, HumpGivesTwoSolutions) {
  // Q = 1 - (lambda + 1)^2 on [-2, -0.02]; Q = 1/2 at -1 -+ 1/sqrt(2)
  BranchRecord rec;
  for (double lambda : lambda_nodes(-2.0, -0.02, 100, false)) {
    BranchPoint pt;
    pt.lambda = lambda;
    pt.Q = 1.0 - (lambda + 1.0) * (lambda + 1.0);
    pt.dQ_dlambda = -2.0 * (lambda + 1.0);
    pt.stability = classify_stability(pt);
    rec.points.push_back(pt);
  }
  const ProblemSpec p = pure_power(1, 10.0, 32, 4.0);
  const auto res = solve_normalized(p, 0.5, rec, false);
  ASSERT_EQ(res.solutions.size(), 2u);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(res.solutions[0].lambda, -1.0 - r, 1e-3);
  EXPECT_NEAR(res.solutions[1].lambda, -1.0 + r, 1e-3);
  EXPECT_EQ(res.solutions[0].point.stability, Stability::unstable);
  EXPECT_EQ(res.solutions[1].point.stability, Stability::stable);
  for (const auto& s : res.solutions) EXPECT_FALSE(s.refined);
  EXPECT_NEAR(res.q_max, 1.0, 1e-3);

  EXPECT_TRUE(solve_normalized(p, 2.0, rec, false).solutions.empty());
}

TEST(Normalized, RefinedOnSechBranch) {
  const ProblemSpec p = pure_power(1, 40.0, 512, 4.0);
  StepControl c;
  c.targets = lambda_nodes(-2.0, -0.5, 4, false);
  c.morse_every = 0;
  const auto rec = continue_branch(p, ground_state(p, -2.0), {-2.0, -0.5}, c);
  // Q = 2 sqrt|lambda| = 2.4 at lambda = -1.44
  const auto res = solve_normalized(p, 2.4, rec, true, c);
  ASSERT_EQ(res.solutions.size(), 1u);
  EXPECT_TRUE(res.solutions[0].refined);
  const auto& sol = res.solutions[0];
  EXPECT_LE(std::abs(sol.point.Q - 2.4), 1e-4 * 2.4);
  EXPECT_NEAR(sol.lambda, -0.25 * sol.point.Q * sol.point.Q, 1e-8);
  EXPECT_EQ(sol.point.stability, Stability::stable);
}

// Pure power: Q ~ (-lambda)^d with d = 2/(p-2) - N/(2s).
TEST(Regimes, PurePowerLimits) {
  const auto sub = asymptotic_regimes(pure_power(1, 10.0, 16, 4.0));  // d = 1/2
  EXPECT_EQ(sub.limit_at_zero, LimitBehavior::zero);
  EXPECT_EQ(sub.limit_at_minus_infinity, LimitBehavior::infinity);
  EXPECT_NEAR(sub.sign_at_zero, -0.5, 1e-12);

  const auto crit = asymptotic_regimes(pure_power(2, 10.0, 16, 4.0));  // d = 0
  EXPECT_EQ(crit.limit_at_zero, LimitBehavior::constant);
  EXPECT_EQ(crit.limit_at_minus_infinity, LimitBehavior::constant);

  const auto sup = asymptotic_regimes(pure_power(3, 10.0, 16, 3.5));  // d = -1/6
  EXPECT_EQ(sup.limit_at_zero, LimitBehavior::infinity);
  EXPECT_EQ(sup.limit_at_minus_infinity, LimitBehavior::zero);
}

TEST(Regimes, MixedPowerHump) {
  // alpha = 3 (d = 1) near zero, beta = 5 (d = -1/3) at -inf: Q -> 0 at both ends
  ProblemSpec p = pure_power(2, 10.0, 16, 3.0);
  p.nonlinearity.terms.push_back({5.0, WeightProfile::constant(1.0)});
  const auto r = asymptotic_regimes(p);
  EXPECT_NEAR(r.sign_at_zero, -1.0, 1e-12);
  EXPECT_NEAR(r.sign_at_minus_infinity, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(r.limit_at_zero, LimitBehavior::zero);
  EXPECT_EQ(r.limit_at_minus_infinity, LimitBehavior::zero);
}
