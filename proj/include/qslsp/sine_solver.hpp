#pragma once

#include <span>
#include <vector>

#include "qslsp/grid.hpp"

namespace qslsp {

/// Direct solver for (a*(-Lap_h) + b) x = r on a BoxGrid, where Lap_h is the
/// 7-point Laplacian with zero ghosts. The operator is diagonal in the type-I
/// discrete sine basis, so one forward and one backward transform suffice.
class DirichletSineSolver {
 public:
  explicit DirichletSineSolver(const BoxGrid& grid);

  void solve(std::span<const double> rhs, std::span<double> out, double a, double b) const;

  /// Smallest and largest eigenvalue of -Lap_h.
  double min_eigenvalue() const noexcept;
  double max_eigenvalue() const noexcept;

 private:
  std::size_t n_;
  std::vector<double> axis_eig_;
};

}  // namespace qslsp
