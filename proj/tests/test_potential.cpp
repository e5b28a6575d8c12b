#include <cmath>

#include "doctest.h"
#include "qslsp/error.hpp"
#include "qslsp/potential.hpp"

using namespace qslsp;

namespace {

void check_derivatives(const PotentialSpec& V, const Point3& x) {
  const double t = 1e-5;
  const Point3 g = V.gradient(x);
  const Matrix3 H = V.hessian(x);
  double gscale = 1e-3 + std::abs(g[0]) + std::abs(g[1]) + std::abs(g[2]);
  for (int i = 0; i < 3; ++i) {
    Point3 xp = x, xm = x;
    xp[i] += t;
    xm[i] -= t;
    const double fd = (V.value(xp) - V.value(xm)) / (2 * t);
    CHECK(std::abs(fd - g[i]) <= 1e-6 * gscale);
    const Point3 gp = V.gradient(xp), gm = V.gradient(xm);
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs((gp[j] - gm[j]) / (2 * t) - H[j][i]) <= 1e-5 * (1.0 + std::abs(H[j][i])));
      CHECK(H[i][j] == doctest::Approx(H[j][i]));
    }
  }
}

}  // namespace

TEST_CASE("potential evaluators agree with finite differences") {
  const auto c = PotentialSpec::constant(2.0);
  const auto b = PotentialSpec::bump(1.0, 0.5, {0.5, -0.2, 0.1}, 0.8);
  const auto r = PotentialSpec::ring(1.0, 0.4, 1.5, 0.7);
  std::vector<double> vals;
  for (int i = 0; i < 40; ++i) vals.push_back(1.0 + 0.5 * std::exp(-0.05 * i * i * 0.01 * 100.0 / 4.0));
  const auto tb = PotentialSpec::table({0.2, 0.0, 0.0}, 0.1, vals);
  for (const Point3& x : {Point3{0.3, 0.4, -0.2}, Point3{1.2, -0.7, 0.5}, Point3{-0.4, 1.1, 0.3}}) {
    check_derivatives(c, x);
    check_derivatives(b, x);
    check_derivatives(r, x);
    check_derivatives(tb, x);
  }
  CHECK(c.value({1, 2, 3}) == 2.0);
  CHECK(b.value({0.5, -0.2, 0.1}) == doctest::Approx(1.5));
  CHECK(r.value({1.5, 0.0, 0.0}) == doctest::Approx(1.4));
  CHECK(r.value({0.0, -1.5, 0.0}) == doctest::Approx(1.4));
  CHECK(tb.value({0.2, 0.0, 0.0}) == doctest::Approx(vals[0]));
  CHECK(tb.value({0.2, 0.3, 0.0}) == doctest::Approx(vals[3]));
}

TEST_CASE("critical points of the shipped potentials") {
  const auto b = PotentialSpec::bump(1.0, 0.5, {0.5, 0, 0}, 1.0);
  const auto g = b.gradient({0.5, 0, 0});
  CHECK(std::abs(g[0]) + std::abs(g[1]) + std::abs(g[2]) == 0.0);
  const auto H = b.hessian({0.5, 0, 0});
  CHECK(H[0][0] == doctest::Approx(-1.0));
  const auto r = PotentialSpec::ring(1.0, 0.5, 2.0, 1.0);
  for (double a : {0.0, 0.7, 2.1}) {
    const auto gr = r.gradient({2.0 * std::cos(a), 2.0 * std::sin(a), 0.0});
    CHECK(std::hypot(gr[0], gr[1], gr[2]) < 1e-14);
  }
}

TEST_CASE("potential parsing and hypothesis checks") {
  CHECK(PotentialSpec::parse("constant 1.5").value({0, 0, 0}) == 1.5);
  CHECK(PotentialSpec::parse("bump 1 0.5 0.5 0 0 1").kind() == PotentialSpec::Kind::Bump);
  CHECK(PotentialSpec::parse("ring 1 0.5 2 1").kind() == PotentialSpec::Kind::Ring);
  CHECK(PotentialSpec::parse("table 0 0 0 0.5 2 1.5 1").infimum() == 1.0);
  CHECK_THROWS_AS(PotentialSpec::parse("constant 0"), DomainError);
  CHECK_THROWS_AS(PotentialSpec::parse("bump 1 -1 0 0 0 1"), DomainError);
  CHECK_THROWS_AS(PotentialSpec::parse("bump 1 0.5"), ConfigError);
  CHECK_THROWS_AS(PotentialSpec::parse("wobble 1"), ConfigError);
  CHECK_THROWS_AS(PotentialSpec::parse("constant x"), ConfigError);
  const auto b = PotentialSpec::parse("bump 1 0.5 0.5 0 0 1");
  CHECK(PotentialSpec::parse(b.describe()).value({0.1, 0.2, 0.3}) == b.value({0.1, 0.2, 0.3}));
}
