#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "qslsp/error.hpp"
#include "qslsp/operators.hpp"
#include "qslsp/profile.hpp"

using namespace qslsp;

namespace {

const RadialProfile& cubic_profile() {
  static const RadialProfile prof = shoot_ground_state(3.0, 1e-10);
  return prof;
}

// C0 from an independent RK4 trajectory, Simpson on [0, 10].
double oracle_C0(double p, double h) {
  const double u0 = oracle::ground_state_u0(p, h);
  const auto s = oracle::rk4_shoot(u0, p, h, 10.0 + 0.5 * h, true);
  const std::size_t m = static_cast<std::size_t>(std::llround(10.0 / h));
  double acc = 0.0;
  for (std::size_t i = 0; i <= m; ++i) {
    const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * s.r[i] * s.r[i] * std::pow(s.u[i], p + 1.0);
  }
  acc *= h / 3.0 * 4.0 * std::numbers::pi;
  return (0.5 - 1.0 / (p + 1.0)) * acc;
}

double log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST_CASE("shooting reproduces the independent U(0)") {
  const double a = oracle::ground_state_u0(3.0, 2e-3);
  const double b = oracle::ground_state_u0(3.0, 1e-3);
  CHECK(std::abs(a - b) < 1e-9 * b);  // step halving: the oracle itself is converged
  CHECK(cubic_profile().u0 == doctest::Approx(b).epsilon(1e-8));
  CHECK(cubic_profile().u0 == doctest::Approx(4.3374).epsilon(1e-4));
}

TEST_CASE("profile table invariants") {
  const auto& P = cubic_profile();
  CHECK(P.du[0] == 0.0);
  for (std::size_t j = 0; j + 1 < P.u.size(); ++j) {
    REQUIRE(P.u[j] > 0.0);
    REQUIRE(P.u[j + 1] < P.u[j]);
    if (j > 0) REQUIRE(P.du[j] < 0.0);
  }
  CHECK(P.max_ode_residual <= 1e-8);
  CHECK(P.u0_bracket <= 1e-10);
}

TEST_CASE("profile tail decays like e^{-r}/r") {
  const auto& P = cubic_profile();
  std::vector<double> r, y;
  for (double s = P.r_reliable - 3.0; s <= P.r_reliable + 3.0; s += 0.25) {
    r.push_back(s);
    y.push_back(std::log(s * P.value(s)));
  }
  double mr = 0, my = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    mr += r[i] / r.size();
    my += y[i] / r.size();
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    sxy += (r[i] - mr) * (y[i] - my);
    sxx += (r[i] - mr) * (r[i] - mr);
  }
  CHECK(std::abs(sxy / sxx + 1.0) <= 0.02);
}

TEST_CASE("profile interpolation matches the oracle trajectory") {
  const auto& P = cubic_profile();
  const double u0 = oracle::ground_state_u0(3.0, 1e-3);
  const auto s = oracle::rk4_shoot(u0, 3.0, 1e-3, 6.0, true);
  for (std::size_t i = 1; i < s.r.size(); i += 777) {
    const double r = s.r[i] + 3e-4;  // off-node
    CHECK(P.value(r) == doctest::Approx(s.u[i] + 3e-4 * s.du[i]).epsilon(1e-6));
    CHECK(P.derivative(s.r[i]) == doctest::Approx(s.du[i]).epsilon(1e-7));
  }
}

TEST_CASE("shooting rejects p outside (1, 5)") {
  CHECK_THROWS_AS(shoot_ground_state(1.0), UsageError);
  CHECK_THROWS_AS(shoot_ground_state(5.0), UsageError);
  CHECK_THROWS_AS(shoot_ground_state(0.5), UsageError);
}

TEST_CASE("expansion constants") {
  CHECK(theta_of(3.0) == doctest::Approx(0.5));
  CHECK(mu_of(2.0) == doctest::Approx(1.0));
  CHECK(mu_of(1.5) == doctest::Approx(0.5));
  const auto c = profile_constants(cubic_profile());
  const double o1 = oracle_C0(3.0, 2e-3), o2 = oracle_C0(3.0, 1e-3);
  CHECK(std::abs(o1 - o2) < 1e-8 * o2);
  CHECK(c.C0 == doctest::Approx(o2).epsilon(1e-8));
  CHECK(c.theta == doctest::Approx(0.5));
  CHECK(c.mu == doctest::Approx(1.0));
  // Nehari and Pohozaev identities of the ground state
  CHECK(c.l2_sq + c.d12_sq == doctest::Approx(c.lp1_pow).epsilon(1e-10));
  CHECK(c.l2_sq == doctest::Approx(c.lp1_pow * (5.0 - 3.0) / 8.0).epsilon(1e-10));
  CHECK(c.moment2 > 0.0);
  CHECK(c.moment4 > c.moment2);
}

TEST_CASE("profiles for other exponents satisfy the Nehari identity") {
  for (double p : {1.5, 2.0, 4.0}) {
    const auto P = shoot_ground_state(p, 1e-10);
    const auto c = profile_constants(P);
    CHECK(c.l2_sq + c.d12_sq == doctest::Approx(c.lp1_pow).epsilon(1e-8));
    CHECK(c.theta == doctest::Approx((p + 1) / (p - 1) - 1.5));
  }
}

TEST_CASE("scaled profile at unit and non-unit lambda") {
  const auto& P = cubic_profile();
  const BoxGrid g(8.0, 33);
  const auto one = PotentialSpec::constant(1.0);
  const auto U = scaled_profile(P, 0.1, {0, 0, 0}, one, g);
  for (std::size_t i = 0; i < g.n(); i += 5)
    for (std::size_t j = 0; j < g.n(); j += 7) {
      const auto x = g.point(i, j, 16);
      CHECK(U[g.index(i, j, 16)] == doctest::Approx(P.value(std::hypot(x[0], x[1], x[2]))));
    }
  const auto four = PotentialSpec::constant(4.0);
  CHECK(scale_factor(four, 0.1, {1, 2, 3}).lambda == doctest::Approx(2.0));
  const auto U4 = scaled_profile(P, 0.1, {0, 0, 0}, four, g);
  CHECK(U4[g.index(16, 16, 16)] == doctest::Approx(std::pow(2.0, 2.0 / (P.p - 1.0)) * P.u0));
}

TEST_CASE("scaled profile solves the rescaled equation at second order") {
  const auto& P = cubic_profile();
  const auto V = PotentialSpec::constant(2.0);
  auto residual = [&](std::size_t n) {
    const BoxGrid g(6.0, n);
    const auto U = scaled_profile(P, 0.1, {0, 0, 0}, V, g);
    ScalarField r = 2.0 * U - laplacian_apply(U);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= U[i] * U[i] * U[i];
    const auto g1 = riesz_h1_solve(r, 1e-12);
    return std::sqrt(inner_l2(r, g1));  // H^{-1} norm
  };
  const double order = std::log2(residual(49) / residual(97));
  CHECK(order > 1.8);
}

TEST_CASE("scaled profile refuses a box that cuts off mass") {
  const auto& P = cubic_profile();
  const auto one = PotentialSpec::constant(1.0);
  CHECK_THROWS_AS(scaled_profile(P, 0.1, {6.5, 0, 0}, one, BoxGrid(8.0, 17)), DomainError);
  CHECK_THROWS_AS(scaled_profile(P, 0.1, {0, 0, 0}, one, BoxGrid(3.0, 17)), DomainError);
  CHECK_NOTHROW(scaled_profile(P, 0.1, {0, 0, 0}, one, BoxGrid(12.0, 17)));
}

TEST_CASE("tangent frame for constant potential is minus the gradient") {
  const auto& P = cubic_profile();
  const auto V = PotentialSpec::constant(1.5);
  const Point3 z{0.3, -0.2, 0.1};
  const BoxGrid g(8.0, 41, z);
  const auto f = tangent_frame(P, 0.1, z, V, g);
  const double lam = std::sqrt(1.5), amp = lam;  // a = 1 at p = 3
  for (int c = 0; c < 3; ++c) {
    const auto minus_grad = sample(g, [&](const Point3& x) {
      const Point3 y{x[0] - z[0], x[1] - z[1], x[2] - z[2]};
      const double rho = std::hypot(y[0], y[1], y[2]);
      return rho > 0 ? -amp * lam * P.derivative(lam * rho) * y[c] / rho : 0.0;
    });
    CHECK(norm_h1(f.dU[c] - minus_grad) < 1e-12 * norm_h1(minus_grad));
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(std::abs(f.gram(i, j)) < 1e-10 * f.gram(i, i));
  CHECK(f.gram_condition() < 1.01);
}

TEST_CASE("tangent frame matches finite differences in z") {
  const auto& P = cubic_profile();
  const auto V = PotentialSpec::bump(1.0, 0.5, {0.5, 0, 0}, 1.0);
  const double eps = 0.1, t = 1e-5;
  const Point3 z{1.0, 0.5, 0.0};
  const BoxGrid g(8.0, 41, z);
  const auto f = tangent_frame(P, eps, z, V, g);
  for (int c = 0; c < 3; ++c) {
    Point3 zp = z, zm = z;
    zp[c] += t;
    zm[c] -= t;
    auto fd = scaled_profile(P, eps, zp, V, g) - scaled_profile(P, eps, zm, V, g);
    fd *= 1.0 / (2.0 * t);
    CHECK(norm_h1(fd - f.dU[c]) <= 1e-6 * norm_h1(f.dU[c]));
  }
}

TEST_CASE("tangent frame deviates from the translation mode at order eps") {
  const auto& P = cubic_profile();
  const auto V = PotentialSpec::bump(1.0, 0.5, {0.5, 0, 0}, 1.0);
  const Point3 z{0, 0, 0};
  std::vector<double> eps{0.2, 0.1, 0.05}, dev;
  for (double e : eps) {
    const auto sf = scale_factor(V, e, z);
    const double lam = sf.lambda, amp = lam;
    const BoxGrid g(8.0 / lam, 41, z);
    const auto f = tangent_frame(P, e, z, V, g);
    const auto minus_grad = sample(g, [&](const Point3& x) {
      const double rho = std::hypot(x[0], x[1], x[2]);
      return rho > 0 ? -amp * lam * P.derivative(lam * rho) * x[0] / rho : 0.0;
    });
    dev.push_back(norm_h1(f.dU[0] - minus_grad));
    CHECK(std::abs(inner_h1(scaled_profile(P, e, z, V, g), f.dU[1])) < 1e-10);  // parity in x2
  }
  CHECK(log_slope(eps, dev) >= 0.9);
}

TEST_CASE("discrete ground state") {
  const auto& P = cubic_profile();
  double prev_gap = 0.0;
  for (std::size_t n : {41, 61}) {
    const BoxGrid g(4.0, n);
    const auto d = discrete_ground_state(P, g);
    CHECK(d.residual <= 1e-12);
    ScalarField r = d.U - laplacian_apply(d.U);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= d.U[i] * d.U[i] * d.U[i];
    CHECK(r.max_abs() < 1e-9);
    const std::size_t c = n / 2;
    CHECK(d.U[g.index(c, c, c)] == doctest::Approx(d.U.max_abs()));
    CHECK(d.U[g.index(c + 1, c, c)] == doctest::Approx(d.U[g.index(c, c - 1, c)]).epsilon(1e-12));
    // the discrete peak overshoots U(0) and approaches it under refinement
    const double gap = d.U.max_abs() - P.u0;
    CHECK(gap > 0.0);
    if (prev_gap > 0.0) CHECK(gap < 0.75 * prev_gap);
    prev_gap = gap;
  }
}

TEST_CASE("tricubic interpolation") {
  const BoxGrid g(4.0, 33);
  const auto f = sample(g, [](const Point3& x) { return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])); });
  CHECK(tricubic(f, g.point(3, 17, 20)) == doctest::Approx(f[g.index(3, 17, 20)]).epsilon(1e-14));
  const Point3 x{0.37, -0.81, 1.13};
  CHECK(tricubic(f, x) == doctest::Approx(std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]))).epsilon(2e-3));
  CHECK(tricubic(f, {9.0, 0.0, 0.0}) == 0.0);
}
