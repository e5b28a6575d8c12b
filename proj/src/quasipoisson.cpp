#include "qslsp/quasipoisson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qslsp/error.hpp"
#include "qslsp/krylov.hpp"
#include "qslsp/operators.hpp"
#include "qslsp/sine_solver.hpp"

namespace qslsp {
namespace {

constexpr double four_pi = 4.0 * std::numbers::pi;

// F_j = int_0^{r_j} f, fourth order (cubic interpolation on each interval).
std::vector<double> cumulative(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> F(n, 0.0);
  for (std::size_t j = 0; j + 1 < n; ++j) {
    double piece;
    if (n < 4)
      piece = 0.5 * h * (f[j] + f[j + 1]);
    else if (j == 0)
      piece = h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]);
    else if (j + 2 >= n)
      piece = h / 24.0 * (f[j - 2] - 5.0 * f[j - 1] + 19.0 * f[j] + 9.0 * f[j + 1]);
    else
      piece = h / 24.0 * (-f[j - 1] + 13.0 * f[j] + 13.0 * f[j + 1] - f[j + 2]);
    F[j + 1] = F[j] + piece;
  }
  return F;
}

double integral(const std::vector<double>& f, double h) { return cumulative(f, h).back(); }

void check_source(const ScalarField& source) {
  if (!source.all_finite()) throw UsageError("solve_phi: source is not finite");
  for (double v : source.values())
    if (v < 0.0) throw UsageError("solve_phi: source must be non-negative");
}

double cell_max_sq(const VectorField& g) {
  double m = 0.0;
  auto gx = g.component(0), gy = g.component(1), gz = g.component(2);
  for (std::size_t c = 0; c < g.points(); ++c) m = std::max(m, gx[c] * gx[c] + gy[c] * gy[c] + gz[c] * gz[c]);
  return m;
}

void fill_stats(PoissonSolution& s, const ScalarField& source, const PoissonParams& prm) {
  const double e2 = 1.0 / (prm.eps * prm.eps), e4 = prm.beta * e2 * e2;
  s.dirichlet = dirichlet_form(s.phi, s.phi);
  s.quartic = prm.beta > 0.0 ? grad_l4_pow4(s.phi) : 0.0;
  s.coupling = inner_l2(s.phi, source);
  s.energy_value = 0.5 * e2 * s.dirichlet + 0.25 * e4 * s.quartic - s.coupling;
  s.identity_residual = std::abs(e2 * s.dirichlet + e4 * s.quartic - s.coupling) / std::abs(s.coupling);
}

}  // namespace

void validate(const PoissonParams& p) {
  if (!(p.eps > 0.0 && p.eps < 1.0)) throw ConfigError("poisson: eps must lie in (0, 1)");
  if (!(p.beta >= 0.0) || !std::isfinite(p.beta)) throw ConfigError("poisson: beta must be >= 0");
  if (!(p.tol > 0.0)) throw ConfigError("poisson: tol must be positive");
  if (p.max_iter <= 0) throw ConfigError("poisson: max_iter must be positive");
}

double dual_norm(const ScalarField& r) {
  const ScalarField g = riesz_h1_solve(r, 1e-8);
  return std::sqrt(std::max(0.0, inner_l2(r, g)));
}

double poisson_energy(const ScalarField& phi, const ScalarField& source, const PoissonParams& prm) {
  const double e2 = 1.0 / (prm.eps * prm.eps);
  double e = 0.5 * e2 * dirichlet_form(phi, phi) - inner_l2(phi, source);
  if (prm.beta > 0.0) e += 0.25 * prm.beta * e2 * e2 * grad_l4_pow4(phi);
  return e;
}

ScalarField poisson_operator(const ScalarField& phi, const PoissonParams& prm) {
  const double e2 = 1.0 / (prm.eps * prm.eps);
  ScalarField t = laplacian_apply(phi);
  t *= -e2;
  if (prm.beta > 0.0) t.axpy(-prm.beta * e2 * e2, div_p4(cell_gradient(phi)));
  return t;
}

double solve_monotone_cubic(double a, double b, double c) {
  if (!(a > 0.0) || !(b >= 0.0)) throw UsageError("solve_monotone_cubic: need a > 0, b >= 0");
  if (b == 0.0 || c == 0.0) return c / a;
  const double s = c > 0.0 ? 1.0 : -1.0;
  const double m = std::abs(c);
  // root of a x + b x^3 = m in (0, min(m/a, cbrt(m/b)))
  double lo = 0.0, hi = std::min(m / a, std::cbrt(m / b));
  double x = hi;
  for (int it = 0; it < 100; ++it) {
    const double f = a * x + b * x * x * x - m;
    if (f > 0.0) hi = x; else lo = x;
    if (f == 0.0 || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    double next = x - f / (a + 3.0 * b * x * x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x) break;
    x = next;
  }
  return s * x;
}

PoissonSolution solve_phi_radial_source(const ScalarField& source, const PoissonParams& prm) {
  validate(prm);
  check_source(source);
  const RadialGrid& g = source.radial();
  const std::size_t n = g.size();
  const double h = g.spacing(), R = g.r_max();
  const double e2 = 1.0 / (prm.eps * prm.eps), e4 = prm.beta * e2 * e2;
  PoissonSolution out{ScalarField(g)};
  if (source.is_zero()) {
    out.degenerate = true;
    return out;
  }
  std::vector<double> q(n), grad(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) q[j] = g.node(j) * g.node(j) * source[j];
  const std::vector<double> Q = cumulative(q, h);
  double worst = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    const double r = g.node(j), c = -Q[j] / (r * r);
    grad[j] = solve_monotone_cubic(e2, e4, c);
    const double res = std::abs(e2 * grad[j] + e4 * grad[j] * grad[j] * grad[j] - c);
    worst = std::max(worst, res / std::max(std::abs(c), 1e-300));
  }
  const std::vector<double> G = cumulative(grad, h);
  const double QR = Q.back();
  const double phiR = prm.eps * prm.eps * QR / R;
  for (std::size_t j = 0; j < n; ++j) out.phi[j] = phiR - (G.back() - G[j]);

  std::vector<double> d(n), q4(n), cp(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double r2 = g.node(j) * g.node(j);
    d[j] = r2 * grad[j] * grad[j];
    q4[j] = d[j] * grad[j] * grad[j];
    cp[j] = r2 * out.phi[j] * source[j];
  }
  const double eps4 = std::pow(prm.eps, 4);
  out.dirichlet = four_pi * (integral(d, h) + eps4 * QR * QR / R);
  out.quartic = four_pi * (integral(q4, h) + eps4 * eps4 * std::pow(QR, 4) / (5.0 * std::pow(R, 5)));
  out.coupling = four_pi * integral(cp, h);
  out.energy_value = 0.5 * e2 * out.dirichlet + 0.25 * e4 * out.quartic - out.coupling;
  out.identity_residual = std::abs(e2 * out.dirichlet + e4 * out.quartic - out.coupling) / out.coupling;
  out.optimality = worst;
  out.energy_history = {out.energy_value};
  return out;
}

PoissonSolution solve_phi_radial(const ScalarField& u, const PoissonParams& prm) {
  return solve_phi_radial_source(hadamard(u, u), prm);
}

PoissonSolution solve_phi(const ScalarField& source, const PoissonParams& prm, const ScalarField* initial) {
  validate(prm);
  if (!source.is_box()) return solve_phi_radial_source(source, prm);
  check_source(source);
  return minimize_poisson_energy(source, prm, initial);
}

PoissonSolution minimize_poisson_energy(const ScalarField& source, const PoissonParams& prm,
                                        const ScalarField* initial) {
  validate(prm);
  if (!source.all_finite()) throw UsageError("minimize_poisson_energy: source is not finite");
  const BoxGrid& box = source.box();
  PoissonSolution out{ScalarField(box)};
  if (source.is_zero()) {
    out.degenerate = true;
    return out;
  }
  const double e2 = 1.0 / (prm.eps * prm.eps), e4 = prm.beta * e2 * e2;
  const DirichletSineSolver sine(box);
  ScalarField& phi = out.phi;
  if (initial != nullptr) {
    require_same_grid(*initial, source);
    phi = *initial;
  } else {
    sine.solve(source.values(), phi.values(), e2, 0.0);
  }
  const double src_norm = dual_norm(source);
  double energy = poisson_energy(phi, source, prm);
  out.energy_history.push_back(energy);
  for (int it = 0;; ++it) {
    ScalarField r = poisson_operator(phi, prm);
    r -= source;
    out.optimality = dual_norm(r) / src_norm;
    if (out.optimality <= prm.tol) break;
    if (it == prm.max_iter) throw SolverError("solve_phi: Newton did not converge", out.optimality, it);
    ++out.iterations;

    const VectorField g = cell_gradient(phi);
    const double a = e2 + 3.0 * e4 * cell_max_sq(g);
    auto apply = [&](const ScalarField& s) {
      ScalarField y = laplacian_apply(s);
      y *= -e2;
      if (e4 > 0.0) y.axpy(e4, p4_linearized_apply(g, s));
      return y;
    };
    auto precond = [&](const ScalarField& s) {
      ScalarField y(box);
      sine.solve(s.values(), y.values(), a, 0.0);
      return y;
    };
    ScalarField step(box), rhs = -1.0 * r;
    const double forcing = std::clamp(0.1 * out.optimality, 1e-3 * prm.tol, 1e-2);
    const auto kr = pcg(apply, step, rhs, precond, inner_l2, forcing, 0.0, 500);
    if (!kr.converged) throw SolverError("solve_phi: inner CG did not converge", kr.residual, kr.iterations);

    // Armijo backtracking on E; the slack absorbs round-off once E has converged.
    const double slope = inner_l2(r, step);  // <grad E, step> < 0
    if (-slope <= 1e-12 * std::abs(energy)) {
      // the predicted decrease is below the round-off of E: take the Newton step
      phi += step;
      energy = poisson_energy(phi, source, prm);
      out.energy_history.push_back(energy);
      continue;
    }
    double t = 1.0;
    for (int ls = 0;; ++ls, t *= 0.5) {
      ScalarField trial = phi;
      trial.axpy(t, step);
      const double et = poisson_energy(trial, source, prm);
      if (et <= energy + 1e-4 * t * slope + 1e-14 * std::abs(energy)) {
        phi = std::move(trial);
        energy = et;
        break;
      }
      if (ls == 40) throw SolverError("solve_phi: line search failed", out.optimality, it);
    }
    out.energy_history.push_back(energy);
  }
  fill_stats(out, source, prm);
  return out;
}

ScalarField linearized_phi(const ScalarField& u, const ScalarField& phi, const ScalarField& w,
                           const PoissonParams& prm) {
  validate(prm);
  require_same_grid(u, w);
  require_same_grid(u, phi);
  const double e2 = 1.0 / (prm.eps * prm.eps), e4 = prm.beta * e2 * e2;
  ScalarField rhs = hadamard(u, w);
  rhs *= 2.0;
  if (!u.is_box()) {
    // Linearised flux law (e2 + 3 e4 g^2) dg = -dQ / r^2 with the monopole far field.
    const RadialGrid& rg = u.radial();
    const std::size_t n = rg.size();
    const double h = rg.spacing(), R = rg.r_max();
    std::vector<double> q(n), dq(n), dg(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double r2 = rg.node(j) * rg.node(j);
      q[j] = r2 * u[j] * u[j];
      dq[j] = r2 * rhs[j];
    }
    const auto Q = cumulative(q, h), dQ = cumulative(dq, h);
    for (std::size_t j = 1; j < n; ++j) {
      const double r2 = rg.node(j) * rg.node(j);
      const double gj = solve_monotone_cubic(e2, e4, -Q[j] / r2);
      dg[j] = -dQ[j] / r2 / (e2 + 3.0 * e4 * gj * gj);
    }
    const auto G = cumulative(dg, h);
    ScalarField psi(rg);
    const double psiR = prm.eps * prm.eps * dQ.back() / R;
    for (std::size_t j = 0; j < n; ++j) psi[j] = psiR - (G.back() - G[j]);
    return psi;
  }
  const BoxGrid& box = u.box();
  const DirichletSineSolver sine(box);
  ScalarField psi(box);
  if (rhs.is_zero()) return psi;
  if (e4 == 0.0) {
    sine.solve(rhs.values(), psi.values(), e2, 0.0);
    return psi;
  }
  const VectorField g = cell_gradient(phi);
  const double a = e2 + 3.0 * e4 * cell_max_sq(g);
  auto apply = [&](const ScalarField& s) {
    ScalarField y = laplacian_apply(s);
    y *= -e2;
    y.axpy(e4, p4_linearized_apply(g, s));
    return y;
  };
  auto precond = [&](const ScalarField& s) {
    ScalarField y(box);
    sine.solve(s.values(), y.values(), a, 0.0);
    return y;
  };
  sine.solve(rhs.values(), psi.values(), a, 0.0);
  const auto kr = pcg(apply, psi, rhs, precond, inner_l2, std::min(prm.tol, 1e-10), 0.0, 1000);
  if (!kr.converged) throw SolverError("linearized_phi: CG did not converge", kr.residual, kr.iterations);
  return psi;
}

}  // namespace qslsp
