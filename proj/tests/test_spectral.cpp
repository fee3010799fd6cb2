#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "fracgs/spectral.hpp"
#include "support.hpp"

using namespace fracgs;
using namespace fracgs::testing;

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

OperatorSpec mixed_op() {
  OperatorSpec op;
  op.terms = {{0.5, 1.0}, {1.0, 0.7}};
  return op;
}

}  // namespace

TEST(Grid, NodeLayout) {
  GridSpec g{1, 2.0, 8, false};
  EXPECT_DOUBLE_EQ(g.spacing(), 0.5);
  EXPECT_DOUBLE_EQ(g.coord(0), -2.0);
  EXPECT_DOUBLE_EQ(g.coord(4), 0.0);
  GridSpec c{1, 2.0, 8, true};
  EXPECT_DOUBLE_EQ(c.coord(0), -1.75);
  for (int i = 0; i < 8; ++i) EXPECT_DOUBLE_EQ(c.coord(c.reflect(i)), -c.coord(i));
  for (int i = 1; i < 8; ++i) EXPECT_DOUBLE_EQ(g.coord(g.reflect(i)), -g.coord(i));
}

TEST(Grid, Violations) {
  EXPECT_FALSE(GridSpec({4, 1.0, 8, false}).violations().empty());
  EXPECT_FALSE(GridSpec({2, -1.0, 8, false}).violations().empty());
  EXPECT_FALSE(GridSpec({2, 1.0, 7, false}).violations().empty());
  EXPECT_TRUE(GridSpec({3, 1.0, 8, true}).violations().empty());
}

TEST(Grid, EvenPartAndShifts) {
  GridSpec g{2, 3.0, 16, false};
  Field f = noise(g, 7);
  Field e = even_part(f);
  EXPECT_LT(relative_distance(even_part(e), e), 1e-15);
  EXPECT_LT(relative_distance(reflect_axis(e, 0), e), 1e-15);
  EXPECT_LT(relative_distance(reflect_axis(e, 1), e), 1e-15);
  EXPECT_EQ(half_box_shift(half_box_shift(f, 3u), 3u).values()[5], f.values()[5]);
  EXPECT_DOUBLE_EQ(dot(f, f), norm(f) * norm(f));
}

TEST(Spectral, ConstantAndLatticeMode) {
  GridSpec g{1, 5.0, 64, false};
  const OperatorSpec op = mixed_op();
  EXPECT_LT(apply_operator(op, Field(g, 3.0)).max_abs(), 1e-12);
  for (int k : {1, 3, 32}) {
    Field u(g);
    for (int i = 0; i < g.points; ++i) u[static_cast<std::size_t>(i)] = std::cos(std::numbers::pi * k * g.coord(i) / g.half_width);
    const double xi = std::numbers::pi * k / g.half_width;
    const double m = std::pow(xi, 1.0) * 1.0 + 0.7 * xi * xi;
    Field Au = apply_operator(op, u);
    Au.axpy(-m, u);
    EXPECT_LT(Au.max_abs(), 1e-12 * m) << "k=" << k;
    const auto terms = seminorm_terms(op, u);
    EXPECT_LT(rel(terms[0], xi * dot(u, u)), 1e-12);
    EXPECT_LT(rel(terms[1], 0.7 * xi * xi * dot(u, u)), 1e-12);
  }
}

TEST(Spectral, SelfAdjointPositiveParseval) {
  GridSpec g{2, 4.0, 32, false};
  const OperatorSpec op = mixed_op();
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Field u = noise(g, 2 * s), v = noise(g, 2 * s + 1);
    const double a = dot(apply_operator(op, u), v), b = dot(u, apply_operator(op, v));
    EXPECT_LT(std::abs(a - b), 1e-12 * norm(apply_operator(op, u)) * norm(v));
    const double q = dot(apply_operator(op, u), u);
    EXPECT_GT(q, 0.0);
    const auto t = seminorm_terms(op, u);
    EXPECT_LT(rel(t[0] + t[1], q), 1e-12);
  }
}

TEST(Spectral, ResolventIdentity) {
  GridSpec g{3, 3.0, 16, true};
  const OperatorSpec op = mixed_op();
  const Field rhs = noise(g, 11);
  for (double a : {0.3, 1.0, 17.0}) {
    const Field x = solve_shifted(op, a, rhs);
    Field back = apply_operator(op, x);
    back.axpy(a, x);
    EXPECT_LT(relative_distance(back, rhs), 1e-12);
  }
  EXPECT_LT(solve_shifted(op, 1.0, Field(g)).max_abs(), 1e-300);
  EXPECT_THROW(solve_shifted(op, 0.0, rhs), Error);
}

// Dense periodic second-derivative matrix (spectral differentiation on [0, 2pi),
// Trefethen, "Spectral Methods in MATLAB", ch. 3), mapped to [-L, L).
TEST(Spectral, MatchesDenseSecondDerivativeMatrix) {
  const int M = 24;
  GridSpec g{1, 3.0, M, false};
  OperatorSpec lap;
  const double hh = 2.0 * std::numbers::pi / M;
  Eigen::MatrixXd D2(M, M);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      const int k = i - j;
      if (k == 0) D2(i, j) = -std::numbers::pi * std::numbers::pi / (3.0 * hh * hh) - 1.0 / 6.0;
      else D2(i, j) = -0.5 * ((k % 2 == 0) ? 1.0 : -1.0) / std::pow(std::sin(k * hh / 2.0), 2);
    }
  const double scale = std::pow(std::numbers::pi / g.half_width, 2);
  const Field u = noise(g, 3);
  Eigen::VectorXd uv(M);
  for (int i = 0; i < M; ++i) uv(i) = u[static_cast<std::size_t>(i)];
  const Eigen::VectorXd ref = -scale * (D2 * uv);
  const Field got = apply_operator(lap, u);
  double err = 0.0;
  for (int i = 0; i < M; ++i) err = std::max(err, std::abs(got[static_cast<std::size_t>(i)] - ref(i)));
  EXPECT_LT(err, 1e-11 * ref.cwiseAbs().maxCoeff());
}

TEST(Spectral, GaussianSecondDerivative) {
  GridSpec g{1, 20.0, 512, false};
  const double sigma = 1.3;
  const Field u = gaussian(g, sigma);
  const Field got = apply_operator(OperatorSpec{}, u);
  double err = 0.0;
  for (int i = 0; i < g.points; ++i) {
    const double x = g.coord(i);
    const double exact = (1.0 / (sigma * sigma) - x * x / std::pow(sigma, 4)) * u[static_cast<std::size_t>(i)];
    err = std::max(err, std::abs(got[static_cast<std::size_t>(i)] - exact));
  }
  EXPECT_LT(err, 1e-8);

  GridSpec g2{2, 12.0, 128, false};
  const Field u2 = gaussian(g2, 1.0);
  const Field l2 = apply_operator(OperatorSpec{}, u2);
  const auto r = node_radii(g2);
  double err2 = 0.0;
  for (std::size_t i = 0; i < u2.size(); ++i) err2 = std::max(err2, std::abs(l2[i] - (2.0 - r[i] * r[i]) * u2[i]));
  EXPECT_LT(err2, 1e-8);
}

// (-d2/dx2)^{1/2} of a Gaussian against direct quadrature of its Fourier
// integral on the line, plus the periodic images from the far-field expansion
// f(y) ~ -(sigma sqrt(2 pi) / pi) (1/y^2 + 3 sigma^2 / y^4).
TEST(Spectral, HalfLaplacianOfGaussian) {
  GridSpec g{1, 30.0, 1024, false};
  const double sigma = 1.0;
  OperatorSpec half;
  half.terms = {{0.5, 1.0}};
  const Field got = apply_operator(half, gaussian(g, sigma));
  const int K = 400000;
  const double xmax = 40.0 / sigma, dxi = xmax / K;
  const double c = sigma * std::sqrt(2.0 * std::numbers::pi) / std::numbers::pi;
  for (int i : {512, 525, 546, 597}) {
    const double x = g.coord(i);
    double s = 0.0;
    for (int k = 0; k <= K; ++k) {
      const double xi = k * dxi;
      const double w = (k == 0 || k == K) ? 0.5 : 1.0;
      s += w * xi * sigma * std::sqrt(2.0 * std::numbers::pi) * std::exp(-0.5 * sigma * sigma * xi * xi) * std::cos(xi * x);
    }
    double images = 0.0;
    for (long n = 1; n <= 1000000; ++n)
      for (double y : {x + 2.0 * g.half_width * n, x - 2.0 * g.half_width * n})
        images -= c * (1.0 / (y * y) + 3.0 * sigma * sigma / (y * y * y * y));
    const double exact = s * dxi / std::numbers::pi + images;
    EXPECT_NEAR(got[static_cast<std::size_t>(i)], exact, 1e-7) << "x=" << x;
  }
}

// (-d2/dx2 + 1)^{-1} has kernel exp(-|x|)/2; against a unit-mass Gaussian the
// convolution has a closed form in the normal CDF.
TEST(Spectral, YukawaKernel) {
  GridSpec g{1, 30.0, 2048, false};
  const double sigma = 0.5;
  const Field f = gaussian(g, sigma, 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi)));
  const Field got = solve_shifted(OperatorSpec{}, 1.0, f);
  double err = 0.0;
  for (int i = 0; i < g.points; ++i) {
    const double x = g.coord(i);
    if (std::abs(x) > 20.0) continue;
    const double exact = 0.5 * std::exp(0.5 * sigma * sigma) *
                         (std::exp(-x) * normal_cdf(x / sigma - sigma) + std::exp(x) * normal_cdf(-x / sigma - sigma));
    err = std::max(err, std::abs(got[static_cast<std::size_t>(i)] - exact));
  }
  EXPECT_LT(err, 1e-6);
}

TEST(Spectral, PartialDerivative) {
  GridSpec g{2, 10.0, 64, false};
  const Field u = gaussian(g, 1.2);
  const Field d0 = partial_derivative(u, 0);
  const Field d1 = partial_derivative(u, 1);
  const auto x0 = node_coordinate(g, 0), x1 = node_coordinate(g, 1);
  double err = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    err = std::max(err, std::abs(d0[i] + x0[i] / 1.44 * u[i]));
    err = std::max(err, std::abs(d1[i] + x1[i] / 1.44 * u[i]));
  }
  EXPECT_LT(err, 1e-10);
}

TEST(Spectral, GridMismatchThrows) {
  GridSpec g{1, 5.0, 32, false};
  auto ctx = spectral_context(g);
  std::vector<double> m(ctx->spectrum_size() + 1, 1.0);
  EXPECT_THROW(ctx->apply_multiplier(Field(GridSpec{1, 5.0, 64, false}), m), GridMismatch);
}
