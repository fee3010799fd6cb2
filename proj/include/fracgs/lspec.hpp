#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fracgs/grid.hpp"
#include "fracgs/model.hpp"

namespace fracgs {

enum class Variant { plus, minus };
enum class Sector { even, full };

std::string to_string(Sector s);

/// L+ = Op + V - lambda - sum (p_i - 1) h_i |u|^{p_i-2}
/// L- = Op + V - lambda - sum h_i |u|^{p_i-2}
class LinearizedOperator {
 public:
  LinearizedOperator(const ProblemSpec& problem, double lambda, const Field& state, Variant variant);

  const ProblemSpec& problem() const { return problem_; }
  double lambda() const { return lambda_; }
  const Field& state() const { return state_; }
  Variant variant() const { return variant_; }
  /// Node-wise multiplication part V - lambda - (...).
  const std::vector<double>& local_term() const { return local_; }

  Field apply(const Field& v) const;
  /// Upper bound on the operator norm: max symbol + max |local term|.
  double norm_estimate() const;
  /// Relative gradient residual of the state it was built at.
  double state_residual() const { return state_residual_; }

 private:
  ProblemSpec problem_;
  double lambda_;
  Field state_;
  Variant variant_;
  std::vector<double> local_;
  double max_symbol_ = 0.0;
  double state_residual_ = 0.0;
};

struct SpectrumReport {
  Sector sector = Sector::even;
  std::vector<double> eigenvalues;  // ascending
  std::vector<Field> eigenfields;
  std::vector<double> residuals;    // |Av - ev| for unit v
  int morse_index = 0;
  int kernel_dim_estimate = 0;
  double tol = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

struct EigenOptions {
  double residual_tol = 1e-7;
  int max_iters = 600;
  int guard_vectors = 2;
  std::uint64_t seed = 0;
};

/// Default kernel band: 1e-6 * |L|.
double default_kernel_tol(const LinearizedOperator& linop);

/// 10 x the change of the smallest |eigenvalue| in the even sector between
/// two resolutions of the same solution, floored at the default band.
double calibrated_kernel_tol(const LinearizedOperator& fine, const LinearizedOperator& coarse);

SpectrumReport smallest_eigenpairs(const LinearizedOperator& linop, int m, Sector sector, double tol = -1.0,
                                   const EigenOptions& opt = {});

struct LinearGround {
  double lambda1 = 0.0;
  Field eigenfield;
  double residual = 0.0;
};

/// Bottom of the spectrum of Op + V on the grid.
LinearGround linear_ground(const OperatorSpec& op, const PotentialSpec& potential, const GridSpec& grid);

struct MorseVerdict {
  int morse_index = 0;
  bool nondegenerate = false;
  /// Smallest even eigenvalue magnitude falls within a decade above the band.
  bool marginal = false;
  double min_abs_eig_even = 0.0;
  double tol = 0.0;
  std::vector<double> eigenvalues;
  std::vector<std::string> warnings;
};

/// tol <= 0 selects default_kernel_tol.
MorseVerdict morse_and_kernel(const LinearizedOperator& linop, double tol = -1.0, int count = 3);

struct TranslationModes {
  std::vector<double> eigenvalues;  // full sector, ascending
  int near_zero = 0;                // |ev| <= tol
  /// Per axis: |projection of d_i u onto the near-zero eigenspace| / |d_i u|.
  std::vector<double> cosine;
  /// Same, onto the span of the N eigenvalues closest to zero whatever their size.
  std::vector<double> cosine_nearest;
  double tol = 0.0;
  bool ok = false;  // exactly N near-zero modes, every cosine > 0.99
};

/// Full-sector check for the N translation modes d_i u of L+.
TranslationModes translation_modes(const LinearizedOperator& linop, double tol = -1.0);

/// Smooth seeded random field, even-projected when requested.
Field random_smooth_field(const GridSpec& grid, std::uint64_t seed, bool even);

}  // namespace fracgs
