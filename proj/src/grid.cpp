#include "qslsp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qslsp/error.hpp"

namespace qslsp {

RadialGrid::RadialGrid(double r_max, std::size_t n) : r_max_(r_max), n_(n), h_(0.0) {
  if (!(r_max > 0.0)) throw ConfigError("radial grid: r_max must be positive");
  if (n < 16) throw ConfigError("radial grid: need at least 16 nodes");
  h_ = r_max / static_cast<double>(n - 1);
}

double RadialGrid::weight(std::size_t j) const noexcept {
  const double r = node(j);
  const double w = 4.0 * std::numbers::pi * r * r * h_;
  return (j + 1 == n_) ? 0.5 * w : w;
}

BoxGrid::BoxGrid(double half_width, std::size_t n_per_axis, Point3 center)
    : half_width_(half_width), n_(n_per_axis), h_(0.0), center_(center) {
  if (!(half_width > 0.0)) throw ConfigError("box grid: half_width must be positive");
  if (n_per_axis < 3) throw ConfigError("box grid: need at least 3 nodes per axis");
  h_ = 2.0 * half_width / static_cast<double>(n_per_axis - 1);
}

std::size_t grid_size(const Grid& grid) {
  return std::visit([](const auto& g) { return g.size(); }, grid);
}

ScalarField::ScalarField(Grid grid) : grid_(std::move(grid)), values_(grid_size(grid_), 0.0) {}

ScalarField::ScalarField(Grid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_size(grid_)) throw UsageError("field: value count does not match grid");
}

const BoxGrid& ScalarField::box() const {
  if (const auto* g = std::get_if<BoxGrid>(&grid_)) return *g;
  throw UsageError("field: expected a box grid");
}

const RadialGrid& ScalarField::radial() const {
  if (const auto* g = std::get_if<RadialGrid>(&grid_)) return *g;
  throw UsageError("field: expected a radial grid");
}

bool ScalarField::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

bool ScalarField::is_zero() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

double ScalarField::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

ScalarField& ScalarField::axpy(double a, const ScalarField& x) {
  require_same_grid(*this, x);
  const double* xs = x.values_.data();
  double* ys = values_.data();
  const std::size_t n = values_.size();
  for (std::size_t i = 0; i < n; ++i) ys[i] += a * xs[i];
  return *this;
}

ScalarField& ScalarField::operator*=(double a) {
  for (double& v : values_) v *= a;
  return *this;
}

ScalarField& ScalarField::fill(double value) {
  std::fill(values_.begin(), values_.end(), value);
  return *this;
}

ScalarField hadamard(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b);
  ScalarField out(a.grid());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

void require_same_grid(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw UsageError("fields live on different grids");
}

VectorField::VectorField(Grid grid, Location where) : grid_(std::move(grid)), where_(where) {
  if (const auto* box = std::get_if<BoxGrid>(&grid_)) {
    const std::size_t m = where == Location::Node ? box->n() : box->n() + 1;
    comp_.assign(3, std::vector<double>(m * m * m, 0.0));
  } else {
    if (where != Location::Node) throw UsageError("radial vector fields live on nodes");
    comp_.assign(1, std::vector<double>(grid_size(grid_), 0.0));
  }
}

}  // namespace qslsp
