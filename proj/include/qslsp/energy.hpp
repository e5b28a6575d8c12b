#pragma once

#include <optional>

#include "qslsp/grid.hpp"
#include "qslsp/potential.hpp"
#include "qslsp/quasipoisson.hpp"

namespace qslsp {

struct ProblemParams {
  double eps = 0.1;
  double beta = 0.0;
  double p = 3.0;
  PotentialSpec potential = PotentialSpec::constant(1.0);
  bool coupling = true;        ///< false drops phi: the functional I_eps
  double poisson_tol = 1e-10;
  int poisson_max_iter = 50;

  PoissonParams poisson() const { return {eps, beta, poisson_tol, poisson_max_iter}; }
};

/// eps in (0, 1), beta >= 0, p in (1, 5); the potential is checked when built.
void validate(const ProblemParams& params);

/// J_eps(u) = (1/2)||u||^2_{H1_eps} + (1/2) int phi u^2
///            - (1/2)(||grad phi||^2 / (2 eps^2) + beta ||grad phi||_4^4 / (4 eps^4))
///            - ||u||_{p+1}^{p+1} / (p+1),  phi = phi_eps(u).
struct EnergyBreakdown {
  double kinetic = 0.0;     ///< (1/2) int |grad u|^2
  double potential = 0.0;   ///< (1/2) int V(eps x) u^2
  double coupling = 0.0;    ///< (1/2) int phi u^2
  double field = 0.0;       ///< -(1/2)(||grad phi||^2 / (2 eps^2) + beta ||grad phi||_4^4 / (4 eps^4))
  double field_quartic = 0.0;  ///< the beta part of `field`
  double nonlinear = 0.0;   ///< -||u||_{p+1}^{p+1} / (p+1)
  double total = 0.0;
  double total_reduced = 0.0;  ///< (1/2)||u||^2 + (3/8) int phi u^2 - ||grad phi||^2 / (8 eps^2) - ...
  bool degenerate = false;     ///< u = 0
};

/// phi_eps(u) together with the fields it was computed for.
struct EnergyState {
  ScalarField u;
  std::optional<PoissonSolution> phi;  ///< empty when coupling is off or u = 0
};

/// Evaluates J_eps and its derivatives on one grid, with V(eps x) sampled once.
class EnergyModel {
 public:
  EnergyModel(ProblemParams params, const Grid& grid);
  const ProblemParams& params() const noexcept { return params_; }
  const Grid& grid() const noexcept { return grid_; }
  const ScalarField& potential_field() const noexcept { return v_; }

  /// Solves for phi_eps(u) (warm started from `warm` when given).
  EnergyState state(const ScalarField& u, const ScalarField* warm = nullptr) const;
  EnergyBreakdown energy(const EnergyState& s) const;
  /// H1-Riesz representative of D J_eps(u).
  ScalarField gradient(const EnergyState& s) const;
  /// H1-Riesz representative of D^2 J_eps(u)[w, .].
  ScalarField hessian_apply(const EnergyState& s, const ScalarField& w) const;
  /// D_u phi[w] (zero when coupling is off).
  ScalarField phi_derivative(const EnergyState& s, const ScalarField& w) const;

 private:
  ProblemParams params_;
  Grid grid_;
  ScalarField v_;
};

double j_eps(const ScalarField& u, const ProblemParams& params);
EnergyBreakdown j_eps_terms(const ScalarField& u, const ProblemParams& params);
/// j_eps with the coupling switched off.
double i_eps(const ScalarField& u, const ProblemParams& params);
ScalarField grad_j_eps(const ScalarField& u, const ProblemParams& params);
ScalarField hess_j_eps_apply(const ScalarField& u, const ScalarField& w, const ProblemParams& params);

/// (1/2)||u||^2_{D12} + (lambda^2/2)||u||_2^2 - ||u||_{p+1}^{p+1} / (p+1).
double i_bar(const ScalarField& u, double lambda, double p = 3.0);

}  // namespace qslsp
