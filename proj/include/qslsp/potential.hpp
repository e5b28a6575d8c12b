#pragma once

#include <array>
#include <string>
#include <vector>

#include "qslsp/grid.hpp"

namespace qslsp {

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// External potential V with analytic first and second derivatives.
///   constant(c):             V = c
///   bump(a, b, x0, sigma):   V = a + b exp(-|x - x0|^2 / sigma^2)
///   ring(a, b, rho0, sigma): V = a + b exp(-((rho - rho0)^2 + x3^2) / sigma^2), rho = |(x1, x2)|
///   table(x0, dr, v...):     V = v(|x - x0|), clamped cubic spline with v'(0) = 0,
///                            constant beyond the last sample
class PotentialSpec {
 public:
  enum class Kind { Constant, Bump, Ring, Table };

  static PotentialSpec constant(double c);
  static PotentialSpec bump(double a, double b, Point3 x0, double sigma);
  static PotentialSpec ring(double a, double b, double rho0, double sigma);
  static PotentialSpec table(Point3 x0, double dr, std::vector<double> values);

  /// Parses "constant 1", "bump a b x y z sigma", "ring a b rho0 sigma",
  /// "table x y z dr v0 v1 ...".
  static PotentialSpec parse(const std::string& text);

  Kind kind() const noexcept { return kind_; }
  std::string describe() const;

  double value(const Point3& x) const;
  Point3 gradient(const Point3& x) const;
  Matrix3 hessian(const Point3& x) const;

  /// Infimum of V over R^3 (closed form for every kind).
  double infimum() const;

 private:
  Kind kind_ = Kind::Constant;
  double a_ = 1.0, b_ = 0.0, sigma_ = 1.0, rho0_ = 0.0, dr_ = 1.0;
  Point3 x0_{0.0, 0.0, 0.0};
  std::vector<double> table_;
  std::vector<double> second_;  // spline second derivatives at the samples

  // value, first and second derivative of the radial table
  std::array<double, 3> table_eval(double r) const;
};

}  // namespace qslsp
