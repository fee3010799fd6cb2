#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fracgs/errors.hpp"

namespace fracgs {

/// Uniform periodic box [-L, L)^dim with M points per axis.
///
/// Node i on an axis sits at -L + i*h (or -L + (i+1/2)*h when cell centered),
/// with h = 2L/M.  Flat indices are row-major, axis 0 slowest.
struct GridSpec {
  int dim = 1;
  double half_width = 1.0;
  int points = 2;
  bool cell_centered = false;

  std::size_t size() const {
    std::size_t n = 1;
    for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(points);
    return n;
  }
  double spacing() const { return 2.0 * half_width / points; }
  double cell_volume() const { return std::pow(spacing(), dim); }
  double coord(int i) const { return -half_width + (i + (cell_centered ? 0.5 : 0.0)) * spacing(); }

  /// Index of the mirror image of node i under x -> -x.
  int reflect(int i) const { return cell_centered ? points - 1 - i : (points - i) % points; }

  std::vector<std::string> violations() const;
  void validate() const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Real grid function; the discrete stand-in for an element of the energy space.
class Field {
 public:
  Field() = default;
  explicit Field(const GridSpec& grid, double fill = 0.0) : grid_(grid), values_(grid.size(), fill) {}
  Field(const GridSpec& grid, std::vector<double> values);

  const GridSpec& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double c);
  /// this += c * o
  Field& axpy(double c, const Field& o);

  bool all_finite() const;
  double max() const;
  double min() const;
  double max_abs() const;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double c, Field a);

void require_same_grid(const Field& a, const Field& b, const char* where);
void require_on_grid(const Field& u, const GridSpec& g, const char* where);
void require_finite(const Field& u, const char* where);

/// Grid inner product sum(u v) * h^N (midpoint rule).
double dot(const Field& a, const Field& b);
double norm(const Field& a);
/// sum |u|^p h^N
double integral_pow(const Field& u, double p);
double integral(const Field& u);

/// |x| at every node.
std::vector<double> node_radii(const GridSpec& g);
/// x_axis at every node.
std::vector<double> node_coordinate(const GridSpec& g, int axis);

/// Average over all coordinate reflections (projection onto the even sector).
Field even_part(const Field& u);
/// Mirror image of u along one axis.
Field reflect_axis(const Field& u, int axis);
/// Cyclic shift by M/2 along every axis listed in mask bits.
Field half_box_shift(const Field& u, unsigned mask);

/// exp(-|x|^2 / (2 sigma^2)).
Field gaussian(const GridSpec& g, double sigma, double amplitude = 1.0);

/// Relative L2 distance |a-b|/|b|.
double relative_distance(const Field& a, const Field& b);

/// min u >= -band * max|u|; the default band absorbs spectral ringing near
/// non-smooth weights.
bool is_positive(const Field& u, double band = 1e-5);

}  // namespace fracgs
