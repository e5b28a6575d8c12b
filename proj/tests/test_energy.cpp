#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "qslsp/energy.hpp"
#include "qslsp/error.hpp"
#include "qslsp/operators.hpp"
#include "qslsp/profile.hpp"

using namespace qslsp;

namespace {

const RadialProfile& cubic_profile() {
  static const RadialProfile P = shoot_ground_state(3.0, 1e-10);
  return P;
}

double r_of(const Point3& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

ScalarField random_direction(const BoxGrid& g, std::mt19937& rng) {
  std::uniform_real_distribution<double> c(-1.5, 1.5), k(0.3, 1.5);
  const Point3 x0{c(rng), c(rng), c(rng)};
  const double kx = k(rng), ky = k(rng), s = k(rng);
  return sample(g, [&](const Point3& x) {
    const double d2 = (x[0] - x0[0]) * (x[0] - x0[0]) + (x[1] - x0[1]) * (x[1] - x0[1]) + (x[2] - x0[2]) * (x[2] - x0[2]);
    return std::cos(kx * x[0] + ky * x[2]) * std::exp(-d2 / (2.0 * s * s));
  });
}

ProblemParams bump_params(double eps, double beta) {
  ProblemParams p;
  p.eps = eps;
  p.beta = beta;
  p.potential = PotentialSpec::bump(1.0, 0.5, {0.5, 0.0, 0.0}, 1.0);
  p.poisson_tol = 1e-12;
  return p;
}

}  // namespace

TEST_CASE("energy of the zero field") {
  const BoxGrid g(4.0, 9);
  const auto e = j_eps_terms(ScalarField(g), bump_params(0.1, 1.0));
  CHECK(e.degenerate);
  CHECK(e.total == 0.0);
  CHECK(i_bar(ScalarField(g), 2.0) == 0.0);
  CHECK_THROWS_AS(grad_j_eps(ScalarField(g), bump_params(0.1, 1.0)), UsageError);
}

TEST_CASE("parameter validation") {
  const BoxGrid g(4.0, 9);
  ProblemParams p;
  p.p = 5.0;
  CHECK_THROWS_AS(EnergyModel(p, g), ConfigError);
  p.p = 3.0;
  p.eps = 0.0;
  CHECK_THROWS_AS(EnergyModel(p, g), ConfigError);
  p.eps = 0.1;
  p.potential = PotentialSpec::bump(1.0, 0.5, {0, 0, 0}, 1.0);
  CHECK_THROWS_AS(EnergyModel(p, RadialGrid(5.0, 64)), UsageError);
}

TEST_CASE("gradient and Hessian against finite differences") {
  const BoxGrid g(4.0, 25);
  std::mt19937 rng(7);
  for (double beta : {0.0, 1.0}) {
    const EnergyModel model(bump_params(0.2, beta), g);
    const ScalarField u = sample(g, [](const Point3& x) { return 2.0 * std::exp(-0.5 * r_of(x) * r_of(x)) + 0.2 * x[0] * std::exp(-r_of(x)); });
    const auto s = model.state(u);
    const ScalarField grad = model.gradient(s);
    for (int k = 0; k < 4; ++k) {
      const ScalarField w = random_direction(g, rng);
      const double exact = inner_h1(grad, w);
      double best = 1e300;
      for (double t : {1e-2, 1e-3, 1e-4}) {
        ScalarField up = u, um = u;
        up.axpy(t, w);
        um.axpy(-t, w);
        const double fd = (model.energy(model.state(up)).total - model.energy(model.state(um)).total) / (2.0 * t);
        best = std::min(best, std::abs(fd - exact) / std::abs(exact));
      }
      CHECK(best <= 1e-5);

      const ScalarField hw = model.hessian_apply(s, w);
      const double t = 1e-4;
      ScalarField up = u, um = u;
      up.axpy(t, w);
      um.axpy(-t, w);
      ScalarField fd = model.gradient(model.state(up, &s.phi->phi)) - model.gradient(model.state(um, &s.phi->phi));
      fd *= 1.0 / (2.0 * t);
      CHECK(norm_h1(fd - hw) <= 1e-4 * norm_h1(hw));

      const ScalarField w2 = random_direction(g, rng);
      const double a = inner_h1(hw, w2), b = inner_h1(model.hessian_apply(s, w2), w);
      CHECK(std::abs(a - b) <= 1e-8 * std::max(std::abs(a), std::abs(b)));
    }
  }
}

TEST_CASE("decomposition into the uncoupled functional plus field terms") {
  const BoxGrid g(4.0, 21);
  const ScalarField u = sample(g, [](const Point3& x) { return 1.5 * std::exp(-0.5 * r_of(x) * r_of(x)); });
  const auto p = bump_params(0.1, 1.0);
  const auto e = j_eps_terms(u, p);
  CHECK(e.total - i_eps(u, p) == doctest::Approx(e.coupling + e.field).epsilon(1e-12));
  // both closed forms agree through the Poisson identity
  CHECK(e.total_reduced == doctest::Approx(e.total).epsilon(1e-9));
  CHECK(e.coupling > 0.0);
  CHECK(e.field < 0.0);
}

TEST_CASE("beta = 0 matches the Schroedinger-Poisson energy") {
  // u = e^{-r^2/2}: phi = eps^2 (sqrt(pi)/4) erf(r) / r and
  // J = (1/2)(||grad u||^2 + c ||u||^2) + (1/4) int phi u^2 - ||u||_4^4 / 4.
  const RadialGrid g(16.0, 4096);
  ProblemParams p;
  p.eps = 0.2;
  p.potential = PotentialSpec::constant(1.3);
  const ScalarField u = sample(g, [](double r) { return std::exp(-0.5 * r * r); });
  const double eps2 = p.eps * p.eps, pi = M_PI;
  const double grad2 = oracle::simpson([&](double r) { return 4 * pi * r * r * r * r * std::exp(-r * r); }, 0, 16, 4000);
  const double l2 = oracle::simpson([&](double r) { return 4 * pi * r * r * std::exp(-r * r); }, 0, 16, 4000);
  const double l4 = oracle::simpson([&](double r) { return 4 * pi * r * r * std::exp(-2 * r * r); }, 0, 16, 4000);
  const double cpl = oracle::simpson(
      [&](double r) { return r == 0 ? 0.0 : 4 * pi * r * r * eps2 * std::sqrt(pi) / 4 * std::erf(r) / r * std::exp(-r * r); }, 0, 16, 4000);
  const double oracle_j = 0.5 * (grad2 + 1.3 * l2) + 0.25 * cpl - 0.25 * l4;
  CHECK(j_eps(u, p) == doctest::Approx(oracle_j).epsilon(1e-6));
}

TEST_CASE("uncoupled energy of the profile is C0 lambda^{2 theta}") {
  const auto& P = cubic_profile();
  const auto C = profile_constants(P);
  const double lambda = std::sqrt(1.7);
  ProblemParams p;
  p.eps = 0.1;
  p.potential = PotentialSpec::constant(1.7);
  p.coupling = false;
  std::vector<double> errs;
  for (std::size_t n : {41, 81}) {
    const BoxGrid g(6.0, n);
    const auto U = scaled_profile(P, p.eps, {0, 0, 0}, p.potential, g);
    const double exact = C.C0 * std::pow(lambda, 2.0 * C.theta);
    errs.push_back(std::abs(j_eps(U, p) - exact) / exact);
    CHECK(j_eps(U, p) == doctest::Approx(i_bar(U, lambda)).epsilon(1e-11));
  }
  CHECK(errs[1] < 0.05);
  CHECK(errs[1] < 0.4 * errs[0]);  // quadrature error is O(h^2)
}

TEST_CASE("I_bar at the profile, and its scaling law") {
  const auto& P = cubic_profile();
  const auto C = profile_constants(P);
  const RadialGrid g(30.0, 30001);
  const ScalarField U = sample(g, [&](double r) { return P.value(r); });
  CHECK(i_bar(U, 1.0) == doctest::Approx(C.C0).epsilon(1e-6));
  CHECK(i_bar(U, 1.0) == doctest::Approx((0.5 - 0.25) * norm_lq(U, 4.0) * norm_lq(U, 4.0) * norm_lq(U, 4.0) * norm_lq(U, 4.0)).epsilon(1e-6));
  for (double lambda : {0.5, 2.0}) {
    const ScalarField Ul = sample(g, [&](double r) { return lambda * P.value(lambda * r); });
    CHECK(i_bar(Ul, lambda) == doctest::Approx(std::pow(lambda, 2.0 * C.theta) * i_bar(U, 1.0)).epsilon(1e-5));
  }
}

TEST_CASE("discrete ground state is an exact critical point of the uncoupled functional") {
  const auto& P = cubic_profile();
  const BoxGrid g(4.0, 41);
  const auto d = discrete_ground_state(P, g);
  ProblemParams p;
  p.potential = PotentialSpec::constant(1.0);
  p.coupling = false;
  CHECK(norm_h1(grad_j_eps(d.U, p)) <= 1e-9 * norm_h1(d.U));
  p.coupling = true;
  p.eps = 0.1;
  CHECK(norm_h1(grad_j_eps(d.U, p)) > 1e-4 * norm_h1(d.U));
}
