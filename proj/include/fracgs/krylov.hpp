#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

namespace fracgs {

struct KrylovOptions {
  double rel_tol = 1e-10;
  int max_iters = 500;
};

struct KrylovResult {
  int iterations = 0;
  double rel_residual = 0.0;  // in the preconditioner norm
  bool converged = false;
};

/// Preconditioned MINRES for symmetric (possibly indefinite) A and SPD M.
///
/// Vec needs copy, `*=`, `axpy(c, v)` and a free `dot(a, b)`.  `apply_a(v)`
/// and `apply_m(v)` return new vectors.  x starts from zero.
template <class Vec, class ApplyA, class ApplyM>
KrylovResult minres(ApplyA&& apply_a, ApplyM&& apply_m, const Vec& b, Vec& x, const KrylovOptions& opt) {
  KrylovResult res;
  x = b;
  x *= 0.0;
  Vec r1 = b;
  Vec y = apply_m(r1);
  double beta1 = dot(r1, y);
  if (!(beta1 > 0.0)) {
    res.converged = beta1 == 0.0;
    return res;
  }
  beta1 = std::sqrt(beta1);
  Vec r2 = r1;
  Vec w = b, w1 = b, w2 = b;
  w *= 0.0;
  w2 *= 0.0;
  double oldb = 0.0, beta = beta1, dbar = 0.0, epsln = 0.0, phibar = beta1;
  double cs = -1.0, sn = 0.0;
  constexpr double tiny = std::numeric_limits<double>::min();

  for (int it = 1; it <= opt.max_iters; ++it) {
    Vec v = y;
    v *= 1.0 / beta;
    y = apply_a(v);
    if (it >= 2) y.axpy(-beta / oldb, r1);
    const double alfa = dot(v, y);
    y.axpy(-alfa / beta, r2);
    r1 = r2;
    r2 = y;
    y = apply_m(r2);
    oldb = beta;
    beta = std::sqrt(std::max(dot(r2, y), 0.0));
    const double oldeps = epsln;
    const double delta = cs * dbar + sn * alfa;
    const double gbar = sn * dbar - cs * alfa;
    epsln = sn * beta;
    dbar = -cs * beta;
    const double gamma = std::max(std::hypot(gbar, beta), tiny);
    cs = gbar / gamma;
    sn = beta / gamma;
    const double phi = cs * phibar;
    phibar = sn * phibar;

    w1 = w2;
    w2 = w;
    w = v;
    w.axpy(-oldeps, w1);
    w.axpy(-delta, w2);
    w *= 1.0 / gamma;
    x.axpy(phi, w);

    res.iterations = it;
    res.rel_residual = phibar / beta1;
    if (res.rel_residual <= opt.rel_tol || beta == 0.0) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace fracgs
