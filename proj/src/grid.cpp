#include "fracgs/grid.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace fracgs {

std::vector<std::string> GridSpec::violations() const {
  std::vector<std::string> v;
  if (dim < 1 || dim > 3) v.push_back("grid dim must be 1, 2 or 3 (got " + std::to_string(dim) + ")");
  if (!(half_width > 0.0) || !std::isfinite(half_width)) v.push_back("grid box half width must be positive");
  if (points < 2 || points % 2 != 0) v.push_back("grid points per axis must be a positive even integer (got " + std::to_string(points) + ")");
  return v;
}

void GridSpec::validate() const {
  auto v = violations();
  if (!v.empty()) throw ConfigError(std::move(v));
}

Field::Field(const GridSpec& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    std::ostringstream os;
    os << "field has " << values_.size() << " values but grid has " << grid_.size() << " nodes";
    throw GridMismatch(os.str());
  }
}

Field& Field::operator+=(const Field& o) {
  require_same_grid(*this, o, "Field::operator+=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  require_same_grid(*this, o, "Field::operator-=");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

Field& Field::operator*=(double c) {
  for (auto& x : values_) x *= c;
  return *this;
}

Field& Field::axpy(double c, const Field& o) {
  require_same_grid(*this, o, "Field::axpy");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += c * o.values_[i];
  return *this;
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }
double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }
double Field::max_abs() const {
  double m = 0.0;
  for (double x : values_) m = std::max(m, std::abs(x));
  return m;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double c, Field a) { return a *= c; }

void require_same_grid(const Field& a, const Field& b, const char* where) {
  if (!(a.grid() == b.grid()) || a.size() != b.size())
    throw GridMismatch(std::string(where) + ": fields live on different grids");
}

void require_on_grid(const Field& u, const GridSpec& g, const char* where) {
  if (!(u.grid() == g) || u.size() != g.size())
    throw GridMismatch(std::string(where) + ": field is not on the problem grid");
}

void require_finite(const Field& u, const char* where) {
  if (!u.all_finite()) throw NonFiniteValue(std::string(where) + ": field has non-finite entries");
}

double dot(const Field& a, const Field& b) {
  require_same_grid(a, b, "dot");
  double s = 0.0;
  const double* x = a.data();
  const double* y = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) s += x[i] * y[i];
  return s * a.grid().cell_volume();
}

double norm(const Field& a) { return std::sqrt(dot(a, a)); }

double integral_pow(const Field& u, double p) {
  double s = 0.0;
  if (p == 2.0) {
    for (double x : u.values()) s += x * x;
  } else {
    for (double x : u.values()) s += std::pow(std::abs(x), p);
  }
  return s * u.grid().cell_volume();
}

double integral(const Field& u) {
  double s = 0.0;
  for (double x : u.values()) s += x;
  return s * u.grid().cell_volume();
}

std::vector<double> node_coordinate(const GridSpec& g, int axis) {
  std::vector<double> out(g.size());
  const std::size_t M = static_cast<std::size_t>(g.points);
  std::size_t stride = 1;
  for (int a = g.dim - 1; a > axis; --a) stride *= M;
  for (std::size_t idx = 0; idx < out.size(); ++idx) {
    int i = static_cast<int>((idx / stride) % M);
    out[idx] = g.coord(i);
  }
  return out;
}

std::vector<double> node_radii(const GridSpec& g) {
  std::vector<double> r2(g.size(), 0.0);
  for (int a = 0; a < g.dim; ++a) {
    auto x = node_coordinate(g, a);
    for (std::size_t i = 0; i < r2.size(); ++i) r2[i] += x[i] * x[i];
  }
  for (auto& v : r2) v = std::sqrt(v);
  return r2;
}

namespace {

// Calls f(flat_index, axis_index) for every node, where axis_index is the
// coordinate index along `axis`; returns the stride of that axis.
std::size_t axis_stride(const GridSpec& g, int axis) {
  std::size_t stride = 1;
  for (int a = g.dim - 1; a > axis; --a) stride *= static_cast<std::size_t>(g.points);
  return stride;
}

}  // namespace

Field reflect_axis(const Field& u, int axis) {
  const GridSpec& g = u.grid();
  Field out(g);
  const std::size_t M = static_cast<std::size_t>(g.points);
  const std::size_t stride = axis_stride(g, axis);
  for (std::size_t idx = 0; idx < u.size(); ++idx) {
    const int i = static_cast<int>((idx / stride) % M);
    const int j = g.reflect(i);
    const std::size_t target = idx + (static_cast<std::ptrdiff_t>(j) - i) * static_cast<std::ptrdiff_t>(stride);
    out[target] = u[idx];
  }
  return out;
}

Field even_part(const Field& u) {
  Field acc = u;
  for (int a = 0; a < u.grid().dim; ++a) {
    Field r = reflect_axis(acc, a);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = 0.5 * (acc[i] + r[i]);
  }
  return acc;
}

Field half_box_shift(const Field& u, unsigned mask) {
  const GridSpec& g = u.grid();
  Field cur = u;
  const std::size_t M = static_cast<std::size_t>(g.points);
  for (int a = 0; a < g.dim; ++a) {
    if (!(mask & (1u << a))) continue;
    Field next(g);
    const std::size_t stride = axis_stride(g, a);
    for (std::size_t idx = 0; idx < u.size(); ++idx) {
      const std::size_t i = (idx / stride) % M;
      const std::size_t j = (i + M / 2) % M;
      next[idx + (static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(i)) * static_cast<std::ptrdiff_t>(stride)] = cur[idx];
    }
    cur = std::move(next);
  }
  return cur;
}

Field gaussian(const GridSpec& g, double sigma, double amplitude) {
  auto r = node_radii(g);
  Field out(g);
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = amplitude * std::exp(-r[i] * r[i] / (2.0 * sigma * sigma));
  return out;
}

double relative_distance(const Field& a, const Field& b) {
  const double nb = norm(b);
  if (nb == 0.0) return norm(a) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return norm(a - b) / nb;
}

bool is_positive(const Field& u, double band) { return u.size() > 0 && u.min() >= -band * u.max_abs(); }

}  // namespace fracgs
