#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

namespace fracgs {

struct LobpcgOptions {
  double tol = 1e-7;  // absolute eigen-residual |Av - ev| for unit v
  int max_iters = 400;
  int refresh_every = 15;  // recompute A X from scratch
};

template <class Vec>
struct LobpcgResult {
  std::vector<double> values;
  std::vector<Vec> vectors;
  std::vector<double> residuals;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

/// Orthonormalise `v` against `basis` (two passes); false if it collapsed.
template <class Vec>
bool orthonormalize_against(Vec& v, const std::vector<Vec>& basis) {
  const double n0 = std::sqrt(dot(v, v));
  if (!(n0 > 0.0)) return false;
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& b : basis) v.axpy(-dot(b, v), b);
  const double n1 = std::sqrt(dot(v, v));
  if (!(n1 > 1e-10 * n0)) return false;
  v *= 1.0 / n1;
  return true;
}

template <class Vec>
Vec combine(const std::vector<Vec>& s, const Eigen::VectorXd& c, std::size_t from, std::size_t to) {
  Vec out = s[0];
  out *= 0.0;
  for (std::size_t i = from; i < to; ++i) out.axpy(c(static_cast<Eigen::Index>(i)), s[i]);
  return out;
}

}  // namespace detail

/// Locally optimal block preconditioned CG for the lowest eigenpairs of a
/// symmetric operator restricted to the range of the projector `project`.
///
/// `apply_a(v)`, `precond(r, shift)` and `project(v)` return new vectors.
template <class Vec, class ApplyA, class Precond, class Project>
LobpcgResult<Vec> lobpcg(ApplyA&& apply_a, Precond&& precond, Project&& project, std::vector<Vec> x0,
                         const LobpcgOptions& opt) {
  LobpcgResult<Vec> out;
  std::vector<Vec> X;
  for (auto& v : x0) {
    Vec p = project(v);
    if (detail::orthonormalize_against(p, X)) X.push_back(std::move(p));
  }
  const std::size_t m = X.size();
  if (m == 0) return out;
  std::vector<Vec> AX;
  for (const auto& v : X) AX.push_back(apply_a(v));
  std::vector<Vec> P, AP;
  std::vector<double> theta(m, 0.0);

  auto ritz = [&](const std::vector<Vec>& S, const std::vector<Vec>& AS, std::size_t keep) {
    const auto n = static_cast<Eigen::Index>(S.size());
    Eigen::MatrixXd H(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j) {
        const double hij = 0.5 * (dot(S[i], AS[j]) + dot(S[j], AS[i]));
        H(i, j) = hij;
        H(j, i) = hij;
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    std::vector<Vec> nX, nAX, nP, nAP;
    for (std::size_t j = 0; j < keep; ++j) {
      const Eigen::VectorXd c = es.eigenvectors().col(static_cast<Eigen::Index>(j));
      theta[j] = es.eigenvalues()(static_cast<Eigen::Index>(j));
      nX.push_back(detail::combine(S, c, 0, S.size()));
      nAX.push_back(detail::combine(AS, c, 0, S.size()));
      if (S.size() > keep) {
        nP.push_back(detail::combine(S, c, keep, S.size()));
        nAP.push_back(detail::combine(AS, c, keep, S.size()));
      }
    }
    X = std::move(nX);
    AX = std::move(nAX);
    P = std::move(nP);
    AP = std::move(nAP);
  };

  ritz(X, AX, m);
  P.clear();
  AP.clear();

  std::vector<double> res(m, 0.0);
  for (int it = 1; it <= opt.max_iters; ++it) {
    out.iterations = it;
    if (it % opt.refresh_every == 0)
      for (std::size_t j = 0; j < m; ++j) AX[j] = apply_a(X[j]);

    std::vector<std::size_t> active;
    std::vector<Vec> R;
    for (std::size_t j = 0; j < m; ++j) {
      Vec r = AX[j];
      r.axpy(-theta[j], X[j]);
      res[j] = std::sqrt(dot(r, r));
      if (res[j] > opt.tol) active.push_back(j);
      R.push_back(std::move(r));
    }
    if (active.empty()) {
      out.converged = true;
      break;
    }

    std::vector<Vec> S = X, AS = AX;
    std::vector<Vec> fresh;
    for (std::size_t j : active) {
      Vec w = project(precond(R[j], theta[j]));
      std::vector<Vec> all = S;
      all.insert(all.end(), fresh.begin(), fresh.end());
      if (detail::orthonormalize_against(w, all)) fresh.push_back(std::move(w));
    }
    for (std::size_t j : active) {
      if (j >= P.size()) continue;
      Vec p = project(P[j]);
      std::vector<Vec> all = S;
      all.insert(all.end(), fresh.begin(), fresh.end());
      if (detail::orthonormalize_against(p, all)) fresh.push_back(std::move(p));
    }
    if (fresh.empty()) break;
    for (auto& f : fresh) {
      AS.push_back(apply_a(f));
      S.push_back(std::move(f));
    }
    ritz(S, AS, m);
  }

  // Final residuals from a fresh application.
  out.values = theta;
  out.residuals.assign(m, 0.0);
  bool ok = true;
  for (std::size_t j = 0; j < m; ++j) {
    Vec r = apply_a(X[j]);
    r.axpy(-theta[j], X[j]);
    out.residuals[j] = std::sqrt(dot(r, r));
    ok = ok && out.residuals[j] <= opt.tol * 1.5;
  }
  out.converged = ok;
  out.vectors = std::move(X);
  return out;
}

}  // namespace fracgs
