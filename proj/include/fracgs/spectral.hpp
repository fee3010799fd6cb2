#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "fracgs/grid.hpp"
#include "fracgs/model.hpp"

namespace fracgs {

/// FFT plans and the dual lattice of one grid.  Dual frequencies are
/// (pi/L) * f with f in {-M/2+1, ..., M/2}; the Nyquist mode is taken with
/// positive magnitude.  Immutable and shareable across threads.
class SpectralContext {
 public:
  explicit SpectralContext(const GridSpec& grid);
  ~SpectralContext();
  SpectralContext(const SpectralContext&) = delete;
  SpectralContext& operator=(const SpectralContext&) = delete;

  const GridSpec& grid() const { return grid_; }
  /// Number of modes in the half spectrum (last axis has M/2+1 entries).
  std::size_t spectrum_size() const { return spectrum_size_; }
  /// |xi|^2 for every half-spectrum mode.
  const std::vector<double>& xi2() const { return xi2_; }
  /// Signed xi along one axis for every half-spectrum mode (0 at Nyquist).
  const std::vector<double>& xi_axis(int axis) const { return xi_axis_[static_cast<std::size_t>(axis)]; }
  /// 1 or 2: how many full-spectrum modes each half-spectrum entry stands for.
  const std::vector<double>& multiplicity() const { return multiplicity_; }

  std::vector<std::complex<double>> forward(std::span<const double> in) const;
  /// Inverse transform including the 1/M^N normalisation.  Consumes `spec`.
  void inverse(std::vector<std::complex<double>>& spec, std::span<double> out) const;

  /// out = F^{-1}[ m(xi) F[u] ] for a real even multiplier given per half-spectrum mode.
  Field apply_multiplier(const Field& u, std::span<const double> multiplier) const;
  /// sum_k multiplicity * m_k |U_k|^2 * h^N / M^N, i.e. <u, m(D) u>.
  double quadratic_form(const Field& u, std::span<const double> multiplier) const;

 private:
  GridSpec grid_;
  std::size_t spectrum_size_ = 0;
  std::vector<double> xi2_;
  std::vector<std::vector<double>> xi_axis_;
  std::vector<double> multiplicity_;
  void* forward_plan_ = nullptr;
  void* inverse_plan_ = nullptr;
};

/// Cached per grid.
std::shared_ptr<const SpectralContext> spectral_context(const GridSpec& grid);

/// m(xi) = sum_i c_i |xi|^{2 s_i} on the dual lattice, plus each term separately.
struct MultiplierTable {
  GridSpec grid;
  OperatorSpec op;
  std::vector<double> total;
  std::vector<std::vector<double>> per_term;
};

/// Cached per (grid, operator) content.
std::shared_ptr<const MultiplierTable> multiplier_table(const GridSpec& grid, const OperatorSpec& op);

Field apply_operator(const OperatorSpec& op, const Field& u);
/// (sum c_i (-Delta)^{s_i} + a)^{-1} rhs, exact in Fourier space; a > 0.
Field solve_shifted(const OperatorSpec& op, double a, const Field& rhs);
/// c_i * int |(-Delta)^{s_i/2} u|^2 for each operator term (Parseval).
std::vector<double> seminorm_terms(const OperatorSpec& op, const Field& u);
/// Spectral derivative along one axis (Nyquist mode dropped).
Field partial_derivative(const Field& u, int axis);

/// Drops all cached plans and tables, then sets the FFT thread count used for new plans.
void set_fft_threads(int threads);
void clear_spectral_caches();

}  // namespace fracgs
