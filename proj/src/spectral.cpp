#include "fracgs/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace fracgs {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

int& fft_threads() {
  static int n = 1;
  return n;
}

bool& threads_initialised() {
  static bool b = false;
  return b;
}

std::string grid_key(const GridSpec& g) {
  std::ostringstream os;
  os.precision(17);
  os << g.dim << ':' << g.half_width << ':' << g.points << ':' << g.cell_centered;
  return os.str();
}

std::string operator_key(const OperatorSpec& op) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& t : op.terms) os << t.order << ',' << t.coeff << ';';
  return os.str();
}

struct Caches {
  std::mutex mutex;
  std::map<std::string, std::shared_ptr<const SpectralContext>> contexts;
  std::map<std::string, std::shared_ptr<const MultiplierTable>> tables;
};

Caches& caches() {
  static Caches c;
  return c;
}

constexpr std::size_t kMaxCacheEntries = 64;

}  // namespace

SpectralContext::SpectralContext(const GridSpec& grid) : grid_(grid) {
  grid.validate();
  const int d = grid.dim;
  const int M = grid.points;
  std::vector<int> n(static_cast<std::size_t>(d), M);
  const std::size_t last = static_cast<std::size_t>(M / 2 + 1);
  spectrum_size_ = last;
  for (int a = 0; a < d - 1; ++a) spectrum_size_ *= static_cast<std::size_t>(M);

  const double k0 = std::numbers::pi / grid.half_width;
  xi2_.assign(spectrum_size_, 0.0);
  xi_axis_.assign(static_cast<std::size_t>(d), std::vector<double>(spectrum_size_, 0.0));
  multiplicity_.assign(spectrum_size_, 1.0);
  for (std::size_t idx = 0; idx < spectrum_size_; ++idx) {
    std::size_t rem = idx;
    for (int a = d - 1; a >= 0; --a) {
      const std::size_t extent = (a == d - 1) ? last : static_cast<std::size_t>(M);
      const int k = static_cast<int>(rem % extent);
      rem /= extent;
      const int f = (k <= M / 2) ? k : k - M;
      const double xi = k0 * f;
      xi2_[idx] += xi * xi;
      xi_axis_[static_cast<std::size_t>(a)][idx] = (k == M / 2) ? 0.0 : xi;
      if (a == d - 1 && k != 0 && k != M / 2) multiplicity_[idx] = 2.0;
    }
  }

  std::lock_guard lock(planner_mutex());
  if (threads_initialised()) fftw_plan_with_nthreads(fft_threads());
  std::vector<double> real(grid.size());
  std::vector<fftw_complex> cplx(spectrum_size_);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  forward_plan_ = fftw_plan_dft_r2c(d, n.data(), real.data(), cplx.data(), flags);
  inverse_plan_ = fftw_plan_dft_c2r(d, n.data(), cplx.data(), real.data(), flags | FFTW_DESTROY_INPUT);
  if (!forward_plan_ || !inverse_plan_) throw Error("FFTW planning failed");
}

SpectralContext::~SpectralContext() {
  std::lock_guard lock(planner_mutex());
  if (forward_plan_) fftw_destroy_plan(static_cast<fftw_plan>(forward_plan_));
  if (inverse_plan_) fftw_destroy_plan(static_cast<fftw_plan>(inverse_plan_));
}

std::vector<std::complex<double>> SpectralContext::forward(std::span<const double> in) const {
  if (in.size() != grid_.size()) throw GridMismatch("SpectralContext::forward: size mismatch");
  std::vector<double> buf(in.begin(), in.end());
  std::vector<std::complex<double>> out(spectrum_size_);
  fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), buf.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

void SpectralContext::inverse(std::vector<std::complex<double>>& spec, std::span<double> out) const {
  if (spec.size() != spectrum_size_ || out.size() != grid_.size())
    throw GridMismatch("SpectralContext::inverse: size mismatch");
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), reinterpret_cast<fftw_complex*>(spec.data()),
                       out.data());
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (auto& x : out) x *= scale;
}

Field SpectralContext::apply_multiplier(const Field& u, std::span<const double> multiplier) const {
  require_on_grid(u, grid_, "apply_multiplier");
  auto spec = forward(u.values());
  for (std::size_t k = 0; k < spectrum_size_; ++k) spec[k] *= multiplier[k];
  Field out(grid_);
  inverse(spec, out.values());
  return out;
}

double SpectralContext::quadratic_form(const Field& u, std::span<const double> multiplier) const {
  require_on_grid(u, grid_, "quadratic_form");
  auto spec = forward(u.values());
  double s = 0.0;
  for (std::size_t k = 0; k < spectrum_size_; ++k) s += multiplicity_[k] * multiplier[k] * std::norm(spec[k]);
  return s * grid_.cell_volume() / static_cast<double>(grid_.size());
}

std::shared_ptr<const SpectralContext> spectral_context(const GridSpec& grid) {
  auto& c = caches();
  const std::string key = grid_key(grid);
  {
    std::lock_guard lock(c.mutex);
    if (auto it = c.contexts.find(key); it != c.contexts.end()) return it->second;
  }
  auto ctx = std::make_shared<const SpectralContext>(grid);
  std::lock_guard lock(c.mutex);
  if (c.contexts.size() >= kMaxCacheEntries) c.contexts.clear();
  auto [it, inserted] = c.contexts.emplace(key, ctx);
  return it->second;
}

std::shared_ptr<const MultiplierTable> multiplier_table(const GridSpec& grid, const OperatorSpec& op) {
  auto& c = caches();
  const std::string key = grid_key(grid) + '|' + operator_key(op);
  {
    std::lock_guard lock(c.mutex);
    if (auto it = c.tables.find(key); it != c.tables.end()) return it->second;
  }
  auto ctx = spectral_context(grid);
  auto table = std::make_shared<MultiplierTable>();
  table->grid = grid;
  table->op = op;
  const auto& xi2 = ctx->xi2();
  table->total.assign(xi2.size(), 0.0);
  for (const auto& term : op.terms) {
    std::vector<double> m(xi2.size());
    for (std::size_t k = 0; k < xi2.size(); ++k) m[k] = term.coeff * std::pow(xi2[k], term.order);
    for (std::size_t k = 0; k < xi2.size(); ++k) table->total[k] += m[k];
    table->per_term.push_back(std::move(m));
  }
  std::lock_guard lock(c.mutex);
  if (c.tables.size() >= kMaxCacheEntries) c.tables.clear();
  auto [it, inserted] = c.tables.emplace(key, std::move(table));
  return it->second;
}

Field apply_operator(const OperatorSpec& op, const Field& u) {
  auto table = multiplier_table(u.grid(), op);
  return spectral_context(u.grid())->apply_multiplier(u, table->total);
}

Field solve_shifted(const OperatorSpec& op, double a, const Field& rhs) {
  if (!(a > 0.0)) throw Error("solve_shifted: shift must be positive");
  auto table = multiplier_table(rhs.grid(), op);
  std::vector<double> inv(table->total.size());
  for (std::size_t k = 0; k < inv.size(); ++k) inv[k] = 1.0 / (table->total[k] + a);
  return spectral_context(rhs.grid())->apply_multiplier(rhs, inv);
}

std::vector<double> seminorm_terms(const OperatorSpec& op, const Field& u) {
  auto table = multiplier_table(u.grid(), op);
  auto ctx = spectral_context(u.grid());
  auto spec = ctx->forward(u.values());
  const auto& mult = ctx->multiplicity();
  const double scale = u.grid().cell_volume() / static_cast<double>(u.grid().size());
  std::vector<double> out;
  for (const auto& m : table->per_term) {
    double s = 0.0;
    for (std::size_t k = 0; k < m.size(); ++k) s += mult[k] * m[k] * std::norm(spec[k]);
    out.push_back(s * scale);
  }
  return out;
}

Field partial_derivative(const Field& u, int axis) {
  auto ctx = spectral_context(u.grid());
  auto spec = ctx->forward(u.values());
  const auto& xi = ctx->xi_axis(axis);
  for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= std::complex<double>(0.0, xi[k]);
  Field out(u.grid());
  ctx->inverse(spec, out.values());
  return out;
}

void clear_spectral_caches() {
  auto& c = caches();
  std::lock_guard lock(c.mutex);
  c.tables.clear();
  c.contexts.clear();
}

void set_fft_threads(int threads) {
  clear_spectral_caches();
  std::lock_guard lock(planner_mutex());
  if (!threads_initialised()) {
    fftw_init_threads();
    threads_initialised() = true;
  }
  fft_threads() = threads < 1 ? 1 : threads;
}

}  // namespace fracgs
