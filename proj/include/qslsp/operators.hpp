#pragma once

#include <cmath>

#include "qslsp/grid.hpp"

namespace qslsp {

/// u |u|^{p-1}
inline double signed_pow(double u, double p) {
  return p == 3.0 ? u * u * u : std::copysign(std::pow(std::abs(u), p), u);
}

/// Discrete Laplacian. Box: 7-point stencil, zero ghosts. Radial:
/// u'' + (2/r) u' by centred differences, 3u''(0) at the origin, zero ghost
/// at r_max + h.
ScalarField laplacian_apply(const ScalarField& f);

/// Node gradient: centred differences, second-order one-sided at the boundary.
/// Radial grids give the single component u'(r) (zero at r = 0).
VectorField grad(const ScalarField& f);

/// Fourth-order centred node gradient of a box field, zero outside the box.
VectorField grad4(const ScalarField& f);

/// Gradient on the (n+1)^3 cells of a box (zero ghost nodes). Each component is
/// the average of the four edge differences of the cell.
VectorField cell_gradient(const ScalarField& f);

/// Negative transpose of cell_gradient: sum_nodes div_cell(F) z = -sum_cells F . G z.
ScalarField div_cell(const VectorField& F);

/// div(|g|^2 g). Cell fields use div_cell (the exact gradient of the discrete
/// quartic energy); node fields use centred differences.
ScalarField div_p4(const VectorField& g);

/// Node quadrature: uniform h^3 on boxes, 4 pi r^2 trapezoid on radial grids.
double integrate(const ScalarField& f);
double inner_l2(const ScalarField& f, const ScalarField& g);

/// int grad f . grad g by face differences; on a box this is exactly the form
/// of the 7-point Laplacian.
double dirichlet_form(const ScalarField& f, const ScalarField& g);

/// int grad f . grad g + weight f g (weight defaults to 1).
double inner_h1(const ScalarField& f, const ScalarField& g, const ScalarField* weight = nullptr);
double norm_h1(const ScalarField& f);
double norm_d12(const ScalarField& f);
double norm_lq(const ScalarField& f, double q);

/// Solves <g | w>_{H1} = int residual * w for all grid fields w.
ScalarField riesz_h1_solve(const ScalarField& residual, double tol);

/// Quartic cell energy sum_cells h^3 |G f|^4, i.e. ||grad f||_4^4.
double grad_l4_pow4(const ScalarField& f);

/// Node density of the linearisation of -div(|g|^2 g) at the cell gradient g:
/// -div_cell(|g|^2 G psi + 2 (g . G psi) g).
ScalarField p4_linearized_apply(const VectorField& g, const ScalarField& psi);

}  // namespace qslsp
