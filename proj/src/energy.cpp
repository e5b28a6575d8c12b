#include "qslsp/energy.hpp"

#include <cmath>

#include "qslsp/error.hpp"
#include "qslsp/operators.hpp"

namespace qslsp {
namespace {

constexpr double kRieszTol = 1e-10;

ScalarField sample_potential(const ProblemParams& prm, const Grid& grid) {
  const double eps = prm.eps;
  if (const auto* box = std::get_if<BoxGrid>(&grid))
    return sample(*box, [&](const Point3& x) { return prm.potential.value({eps * x[0], eps * x[1], eps * x[2]}); });
  if (prm.potential.kind() != PotentialSpec::Kind::Constant)
    throw UsageError("energy: radial grids need a constant potential");
  const double c = prm.potential.value({0.0, 0.0, 0.0});
  ScalarField v(grid);
  v.fill(c);
  return v;
}

// |u|^{p-1} pointwise
ScalarField abs_pow(const ScalarField& u, double q) {
  ScalarField out(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = q == 2.0 ? u[i] * u[i] : std::pow(std::abs(u[i]), q);
  return out;
}

}  // namespace

void validate(const ProblemParams& p) {
  if (!(p.eps > 0.0 && p.eps < 1.0)) throw ConfigError("eps must lie in (0, 1)");
  if (!(p.beta >= 0.0) || !std::isfinite(p.beta)) throw ConfigError("beta must be >= 0");
  if (!(p.p > 1.0 && p.p < 5.0)) throw ConfigError("p must lie in (1, 5)");
  if (!(p.potential.infimum() > 0.0)) throw DomainError("potential must have a positive infimum");
  validate(p.poisson());
}

EnergyModel::EnergyModel(ProblemParams params, const Grid& grid)
    : params_(std::move(params)), grid_(grid), v_(grid) {
  validate(params_);
  v_ = sample_potential(params_, grid_);
}

EnergyState EnergyModel::state(const ScalarField& u, const ScalarField* warm) const {
  if (!(u.grid() == grid_)) throw UsageError("energy: field lives on a different grid");
  if (!u.all_finite()) throw UsageError("energy: field is not finite");
  EnergyState s{u, std::nullopt};
  if (params_.coupling && !u.is_zero()) s.phi.emplace(solve_phi(hadamard(u, u), params_.poisson(), warm));
  return s;
}

EnergyBreakdown EnergyModel::energy(const EnergyState& s) const {
  EnergyBreakdown e;
  const ScalarField& u = s.u;
  if (u.is_zero()) {
    e.degenerate = true;
    return e;
  }
  const double p = params_.p;
  e.kinetic = 0.5 * dirichlet_form(u, u);
  e.potential = 0.5 * inner_l2(hadamard(v_, u), u);
  e.nonlinear = -integrate(abs_pow(u, p + 1.0)) / (p + 1.0);
  double d12 = 0.0;
  if (s.phi) {
    const double e2 = 1.0 / (params_.eps * params_.eps);
    e.coupling = 0.5 * s.phi->coupling;
    d12 = s.phi->dirichlet;
    e.field_quartic = -0.125 * params_.beta * e2 * e2 * s.phi->quartic;
    e.field = -0.25 * e2 * d12 + e.field_quartic;
  }
  e.total = e.kinetic + e.potential + e.coupling + e.field + e.nonlinear;
  e.total_reduced = e.kinetic + e.potential + 0.75 * e.coupling -
                    d12 / (8.0 * params_.eps * params_.eps) + e.nonlinear;
  return e;
}

ScalarField EnergyModel::gradient(const EnergyState& s) const {
  // <u|w>_{H1} carries the Dirichlet part; the rest is a density.
  const ScalarField& u = s.u;
  const double p = params_.p;
  ScalarField m(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double phi = s.phi ? s.phi->phi[i] : 0.0;
    m[i] = (v_[i] - 1.0 + phi) * u[i] - signed_pow(u[i], p);
  }
  ScalarField g = riesz_h1_solve(m, kRieszTol);
  g += u;
  return g;
}

ScalarField EnergyModel::phi_derivative(const EnergyState& s, const ScalarField& w) const {
  if (!s.phi) return ScalarField(s.u.grid());
  return linearized_phi(s.u, s.phi->phi, w, params_.poisson());
}

ScalarField EnergyModel::hessian_apply(const EnergyState& s, const ScalarField& w) const {
  if (s.u.is_zero()) throw UsageError("hessian: J is not twice differentiable at u = 0");
  require_same_grid(s.u, w);
  const ScalarField& u = s.u;
  const double p = params_.p;
  const ScalarField up = abs_pow(u, p - 1.0);
  ScalarField m(u.grid());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double phi = s.phi ? s.phi->phi[i] : 0.0;
    m[i] = (v_[i] - 1.0 + phi - p * up[i]) * w[i];
  }
  if (s.phi) m += hadamard(phi_derivative(s, w), u);
  ScalarField g = riesz_h1_solve(m, kRieszTol);
  g += w;
  return g;
}

EnergyBreakdown j_eps_terms(const ScalarField& u, const ProblemParams& params) {
  const EnergyModel model(params, u.grid());
  return model.energy(model.state(u));
}

double j_eps(const ScalarField& u, const ProblemParams& params) { return j_eps_terms(u, params).total; }

double i_eps(const ScalarField& u, const ProblemParams& params) {
  ProblemParams off = params;
  off.coupling = false;
  return j_eps(u, off);
}

ScalarField grad_j_eps(const ScalarField& u, const ProblemParams& params) {
  if (u.is_zero()) throw UsageError("grad_j_eps: u must not vanish");
  const EnergyModel model(params, u.grid());
  return model.gradient(model.state(u));
}

ScalarField hess_j_eps_apply(const ScalarField& u, const ScalarField& w, const ProblemParams& params) {
  const EnergyModel model(params, u.grid());
  return model.hessian_apply(model.state(u), w);
}

double i_bar(const ScalarField& u, double lambda, double p) {
  return 0.5 * dirichlet_form(u, u) + 0.5 * lambda * lambda * inner_l2(u, u) -
         integrate(abs_pow(u, p + 1.0)) / (p + 1.0);
}

}  // namespace qslsp
