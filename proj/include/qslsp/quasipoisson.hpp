#pragma once

#include <utility>
#include <vector>

#include "qslsp/grid.hpp"

namespace qslsp {

/// -eps^{-2} Lap phi - beta eps^{-4} Lap_4 phi = source.
struct PoissonParams {
  double eps = 0.1;
  double beta = 0.0;
  double tol = 1e-8;   ///< relative first-order optimality in the discrete H^{-1} norm
  int max_iter = 50;   ///< Newton iterations
};

struct PoissonSolution {
  explicit PoissonSolution(ScalarField field) : phi(std::move(field)) {}
  ScalarField phi;
  double energy_value = 0.0;       ///< minimum of E(phi)
  double identity_residual = 0.0;  ///< |eps^-2 ||grad phi||^2 + beta eps^-4 ||grad phi||_4^4 - int phi src| / int phi src
  int iterations = 0;
  bool degenerate = false;         ///< zero source: phi = 0 returned without solving
  double optimality = 0.0;         ///< ||T(phi) - src||_{H^-1} / ||src||_{H^-1}
  double dirichlet = 0.0;          ///< ||grad phi||_2^2
  double quartic = 0.0;            ///< ||grad phi||_4^4
  double coupling = 0.0;           ///< int phi src
  std::vector<double> energy_history;  ///< E at every Newton iterate
};

/// Validates eps in (0, 1), beta >= 0, tol > 0, max_iter > 0.
void validate(const PoissonParams& params);

/// E(phi) = ||grad phi||^2 / (2 eps^2) + beta ||grad phi||_4^4 / (4 eps^4) - int phi src.
double poisson_energy(const ScalarField& phi, const ScalarField& source, const PoissonParams& params);

/// Nodal density of T(phi) = -eps^{-2} Lap_h phi - beta eps^{-4} div(|G phi|^2 G phi) on a box.
ScalarField poisson_operator(const ScalarField& phi, const PoissonParams& params);

/// Minimises E for a non-negative source by damped Newton with preconditioned CG
/// inner solves, starting from the beta = 0 solution or from `initial`. Radial
/// sources are delegated to the flux-law solver.
PoissonSolution solve_phi(const ScalarField& source, const PoissonParams& params,
                          const ScalarField* initial = nullptr);

/// The same Newton iteration for a box source of either sign.
PoissonSolution minimize_poisson_energy(const ScalarField& source, const PoissonParams& params,
                                        const ScalarField* initial = nullptr);

/// Radial fast path for the source u^2: integrates the flux law
/// eps^-2 r^2 g + beta eps^-4 r^2 g^3 = -int_0^r s^2 u^2 ds for g = phi' and
/// then phi inward from the monopole value eps^2 Q / r_max. Energies include
/// the monopole continuation beyond r_max.
PoissonSolution solve_phi_radial(const ScalarField& u, const PoissonParams& params);
PoissonSolution solve_phi_radial_source(const ScalarField& source, const PoissonParams& params);

/// The real root of a g + b g^3 = c for a > 0, b >= 0.
double solve_monotone_cubic(double a, double b, double c);

/// D_u phi[w]: solves eps^-2 (-Lap) psi + beta eps^-4 L_phi psi = 2 u w, where
/// L_phi is the linearised 4-Laplacian at phi.
ScalarField linearized_phi(const ScalarField& u, const ScalarField& phi, const ScalarField& w,
                           const PoissonParams& params);

/// Discrete H^{-1} norm sqrt(<r, (-Lap_h + 1)^{-1} r>).
double dual_norm(const ScalarField& r);

}  // namespace qslsp
