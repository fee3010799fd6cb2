#pragma once

#include <cmath>
#include <numbers>
#include <utility>

namespace fracgs::testing {

// Radial shooting for R'' + R'/r - R + R^3 = 0, R'(0) = 0, R -> 0.
struct Townes {
  double R0 = 0.0;
  double mass = 0.0;  // pi * int R^2 r dr = (1/2) int_{R^2} R^2
};

// +1 if R crosses zero (start too high), -1 if R turns up first (too low).
inline int shoot(double R0, double* mass) {
  const double h = 1e-3;
  double r = 1e-6, R = R0, P = 0.0, m = 0.0;
  auto rhs = [](double r, double R, double P) { return std::pair{P, -P / r + R - R * R * R}; };
  while (r < 15.0) {
    auto [k1r, k1p] = rhs(r, R, P);
    auto [k2r, k2p] = rhs(r + h / 2, R + h / 2 * k1r, P + h / 2 * k1p);
    auto [k3r, k3p] = rhs(r + h / 2, R + h / 2 * k2r, P + h / 2 * k2p);
    auto [k4r, k4p] = rhs(r + h, R + h * k3r, P + h * k3p);
    m += h * R * R * r;
    R += h / 6 * (k1r + 2 * k2r + 2 * k3r + k4r);
    P += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p);
    r += h;
    if (R < 0.0) return +1;
    if (P > 0.0) return -1;
    if (mass) *mass = std::numbers::pi * m;
  }
  return 0;
}

inline Townes townes_oracle() {
  double lo = 1.5, hi = 3.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (shoot(mid, nullptr) > 0 ? hi : lo) = mid;
  }
  Townes t;
  t.R0 = 0.5 * (lo + hi);
  shoot(lo, &t.mass);
  return t;
}

}  // namespace fracgs::testing
