#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

namespace qslsp {

using Point3 = std::array<double, 3>;

/// Uniform radial grid r_j = j*h, j = 0..n-1, with a zero ghost node at r_max + h.
class RadialGrid {
 public:
  RadialGrid(double r_max, std::size_t n);

  double r_max() const noexcept { return r_max_; }
  std::size_t size() const noexcept { return n_; }
  double spacing() const noexcept { return h_; }
  double node(std::size_t j) const noexcept { return static_cast<double>(j) * h_; }

  /// Trapezoidal weight of node j including the 4*pi*r^2 Jacobian.
  double weight(std::size_t j) const noexcept;

  bool operator==(const RadialGrid&) const = default;

 private:
  double r_max_;
  std::size_t n_;
  double h_;
};

/// Node-centred cube [c - L, c + L]^3 with n nodes per axis. All n^3 nodes are
/// unknowns; ghost values one spacing outside the cube are zero (Dirichlet).
class BoxGrid {
 public:
  BoxGrid(double half_width, std::size_t n_per_axis, Point3 center = {0.0, 0.0, 0.0});

  double half_width() const noexcept { return half_width_; }
  std::size_t n() const noexcept { return n_; }
  std::size_t size() const noexcept { return n_ * n_ * n_; }
  double spacing() const noexcept { return h_; }
  const Point3& center() const noexcept { return center_; }
  double cell_volume() const noexcept { return h_ * h_ * h_; }

  double coord(int axis, std::size_t k) const noexcept {
    return center_[axis] - half_width_ + static_cast<double>(k) * h_;
  }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return (i * n_ + j) * n_ + k;
  }
  Point3 point(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return {coord(0, i), coord(1, j), coord(2, k)};
  }

  bool operator==(const BoxGrid&) const = default;

 private:
  double half_width_;
  std::size_t n_;
  double h_;
  Point3 center_;
};

using Grid = std::variant<RadialGrid, BoxGrid>;

std::size_t grid_size(const Grid& grid);

/// Real values on the nodes of a radial or box grid.
class ScalarField {
 public:
  explicit ScalarField(Grid grid);
  ScalarField(Grid grid, std::vector<double> values);

  const Grid& grid() const noexcept { return grid_; }
  bool is_box() const noexcept { return std::holds_alternative<BoxGrid>(grid_); }
  const BoxGrid& box() const;
  const RadialGrid& radial() const;

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }

  bool all_finite() const noexcept;
  bool is_zero() const noexcept;
  double max_abs() const noexcept;

  /// this += a * x
  ScalarField& axpy(double a, const ScalarField& x);
  ScalarField& operator+=(const ScalarField& x) { return axpy(1.0, x); }
  ScalarField& operator-=(const ScalarField& x) { return axpy(-1.0, x); }
  ScalarField& operator*=(double a);
  ScalarField& fill(double value);

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }
  friend ScalarField operator*(ScalarField a, double s) { return a *= s; }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Pointwise product.
ScalarField hadamard(const ScalarField& a, const ScalarField& b);

void require_same_grid(const ScalarField& a, const ScalarField& b);

enum class Location { Node, Cell };

/// Three components per node or per cell on a box grid, or one radial component.
class VectorField {
 public:
  VectorField(Grid grid, Location where);

  const Grid& grid() const noexcept { return grid_; }
  Location location() const noexcept { return where_; }
  std::size_t components() const noexcept { return comp_.size(); }
  std::size_t points() const noexcept { return comp_.front().size(); }
  std::span<const double> component(int c) const noexcept { return comp_[c]; }
  std::span<double> component(int c) noexcept { return comp_[c]; }

 private:
  Grid grid_;
  Location where_;
  std::vector<std::vector<double>> comp_;
};

/// Samples f(x) on every node of a box grid.
template <class F>
ScalarField sample(const BoxGrid& grid, F&& f) {
  ScalarField out(grid);
  const std::size_t n = grid.n();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) out[grid.index(i, j, k)] = f(grid.point(i, j, k));
  return out;
}

template <class F>
ScalarField sample(const RadialGrid& grid, F&& f) {
  ScalarField out(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) out[j] = f(grid.node(j));
  return out;
}

}  // namespace qslsp
