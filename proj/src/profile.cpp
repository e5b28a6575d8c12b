#include "qslsp/profile.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <numbers>

#include "qslsp/error.hpp"
#include "qslsp/krylov.hpp"
#include "qslsp/operators.hpp"
#include "qslsp/sine_solver.hpp"

namespace qslsp {
namespace {

namespace ode = boost::numeric::odeint;
using State = std::array<double, 2>;

constexpr double kStart = 1e-5;     // series start radius
constexpr double kShootMax = 60.0;  // classification horizon
constexpr double kTableDr = 1e-3;
constexpr double kTableCut = 40.0;


struct RadialOde {
  double p;
  void operator()(const State& x, State& dxdr, double r) const {
    dxdr[0] = x[1];
    dxdr[1] = -2.0 / r * x[1] + x[0] - signed_pow(x[0], p);
  }
};

State series_start(double u0, double p) {
  const double c = (u0 - std::pow(u0, p)) / 3.0;
  return {u0 + 0.5 * c * kStart * kStart, c * kStart};
}

auto make_stepper() { return ode::make_controlled(1e-14, 1e-14, ode::runge_kutta_dopri5<State>()); }

enum class Shot { Crosses, TurnsUp };

Shot classify(double u0, double p) {
  RadialOde sys{p};
  State x = series_start(u0, p);
  double r = kStart, dt = 1e-3;
  auto stepper = make_stepper();
  int guard = 0;
  while (r < kShootMax && ++guard < 10'000'000) {
    if (stepper.try_step(sys, x, r, dt) != ode::success) continue;
    if (x[0] < 0.0) return Shot::Crosses;
    if (x[1] > 0.0) return Shot::TurnsUp;
  }
  return x[0] > 0.0 ? Shot::TurnsUp : Shot::Crosses;
}

// Integrates from u0 and records (u, u') at r_j = j*dr for j = 1..count-1.
void tabulate(double u0, double p, std::size_t count, std::vector<State>& out) {
  RadialOde sys{p};
  State x = series_start(u0, p);
  auto stepper = make_stepper();
  out.assign(count, State{u0, 0.0});
  double r = kStart, dt = 1e-4;
  for (std::size_t j = 1; j < count; ++j) {
    const double target = kTableDr * static_cast<double>(j);
    ode::integrate_adaptive(stepper, sys, x, r, target, std::min(dt, target - r));
    r = target;
    out[j] = x;
  }
}

double tail_value(double A, double r) { return A * std::exp(-r) / r; }
double tail_derivative(double A, double r) { return -A * std::exp(-r) * (1.0 / r + 1.0 / (r * r)); }

// Hermite cubic on [0, h] with values y0, y1 and slopes m0, m1.
double hermite(double t, double h, double y0, double y1, double m0, double m1) {
  const double s = t / h, s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * m0 + (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * h * m1;
}

}  // namespace

double RadialProfile::second_derivative(double r) const {
  if (r <= 0.0) return (u0 - std::pow(u0, p)) / 3.0;
  const double v = value(r);
  return v - signed_pow(v, p) - 2.0 * derivative(r) / r;
}

double RadialProfile::value(double r) const {
  r = std::abs(r);
  if (r >= r_cut()) return tail_value(tail_A, r);
  const std::size_t i = std::min(static_cast<std::size_t>(r / dr), u.size() - 2);
  return hermite(r - dr * static_cast<double>(i), dr, u[i], u[i + 1], du[i], du[i + 1]);
}

double RadialProfile::derivative(double r) const {
  const double sign = r < 0.0 ? -1.0 : 1.0;
  r = std::abs(r);
  if (r >= r_cut()) return sign * tail_derivative(tail_A, r);
  const std::size_t i = std::min(static_cast<std::size_t>(r / dr), u.size() - 2);
  auto d2 = [&](std::size_t j) {
    const double rj = dr * static_cast<double>(j);
    if (j == 0) return (u0 - std::pow(u0, p)) / 3.0;
    return u[j] - signed_pow(u[j], p) - 2.0 * du[j] / rj;
  };
  return sign * hermite(r - dr * static_cast<double>(i), dr, du[i], du[i + 1], d2(i), d2(i + 1));
}

std::vector<double> RadialProfile::ode_residuals() const {
  const std::size_t n = u.size();
  std::vector<double> res(n, 0.0);
  auto dua = [&](long j) { return j < 0 ? -du[static_cast<std::size_t>(-j)] : du[static_cast<std::size_t>(j)]; };
  for (std::size_t j = 0; j < n; ++j) {
    const long jj = static_cast<long>(j);
    double upp;
    if (j + 3 < n) {
      upp = (dua(jj + 3) - 9.0 * dua(jj + 2) + 45.0 * dua(jj + 1) - 45.0 * dua(jj - 1) + 9.0 * dua(jj - 2) -
             dua(jj - 3)) /
            (60.0 * dr);
    } else {
      upp = (3.0 * du[j] - 4.0 * du[j - 1] + du[j - 2]) / (2.0 * dr);
    }
    const double r = dr * static_cast<double>(j);
    const double first = j == 0 ? 2.0 * upp : 2.0 * du[j] / r;
    res[j] = std::abs(upp + first - u[j] + signed_pow(u[j], p));
  }
  return res;
}

RadialProfile shoot_ground_state(double p, double tol) {
  if (!(p > 1.0 && p < 5.0)) throw UsageError("shoot_ground_state: p must lie in (1, 5)");
  if (!(tol > 0.0)) throw UsageError("shoot_ground_state: tol must be positive");
  double lo = 1.0, hi = 10.0 * std::pow(p + 1.0, 1.0 / (p - 1.0));
  if (classify(hi, p) != Shot::Crosses || classify(lo, p) != Shot::TurnsUp)
    throw SolverError("shoot_ground_state: initial bracket does not straddle the ground state");
  // Bisect to the last representable midpoint; the table needs the tightest
  // bracket available, the caller's tol only bounds the reported accuracy.
  int it = 0;
  for (; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (classify(mid, p) == Shot::Crosses ? hi : lo) = mid;
  }
  if (hi - lo > tol) throw SolverError("shoot_ground_state: bisection did not reach tol", hi - lo, it);

  RadialProfile prof;
  prof.p = p;
  prof.u0 = 0.5 * (lo + hi);
  prof.u0_bracket = hi - lo;
  prof.dr = kTableDr;
  const auto count = static_cast<std::size_t>(std::llround(kTableCut / kTableDr)) + 1;

  // The true profile lies between the two bracketing trajectories. Trust the
  // mean up to the radius where their spread exceeds 1e-8 of its value.
  std::vector<State> tl, th;
  const std::size_t probe = static_cast<std::size_t>(std::llround(25.0 / kTableDr)) + 1;
  tabulate(lo, p, probe, tl);
  tabulate(hi, p, probe, th);
  std::size_t j_rel = 1;
  for (std::size_t j = 1; j < probe; ++j) {
    const double mean = 0.5 * (tl[j][0] + th[j][0]);
    if (!(mean > 0.0) || std::abs(th[j][0] - tl[j][0]) > 1e-8 * mean || tl[j][1] >= 0.0) break;
    j_rel = j;
  }
  const double r_rel = kTableDr * static_cast<double>(j_rel);
  if (r_rel < 4.0) throw SolverError("shoot_ground_state: reliable region too short", r_rel, it);
  prof.r_reliable = r_rel;
  const double u_rel = 0.5 * (tl[j_rel][0] + th[j_rel][0]);
  prof.tail_A = u_rel * r_rel * std::exp(r_rel);

  // Blend trajectory and tail over [r_rel - 1, r_rel] with a C^2 smoothstep.
  prof.u.resize(count);
  prof.du.resize(count);
  prof.u[0] = prof.u0;
  prof.du[0] = 0.0;
  const double w0 = r_rel - 1.0;
  for (std::size_t j = 1; j < count; ++j) {
    const double r = kTableDr * static_cast<double>(j);
    const double ta = tail_value(prof.tail_A, r), tb = tail_derivative(prof.tail_A, r);
    if (j > j_rel) {
      prof.u[j] = ta;
      prof.du[j] = tb;
      continue;
    }
    const double su = 0.5 * (tl[j][0] + th[j][0]), sd = 0.5 * (tl[j][1] + th[j][1]);
    if (r <= w0) {
      prof.u[j] = su;
      prof.du[j] = sd;
      continue;
    }
    const double s = r - w0;  // in (0, 1]
    const double b = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    const double db = 30.0 * s * s * (1.0 - s) * (1.0 - s);
    prof.u[j] = (1.0 - b) * su + b * ta;
    prof.du[j] = (1.0 - b) * sd + b * tb + db * (ta - su);
  }
  const auto res = prof.ode_residuals();
  prof.max_ode_residual = *std::max_element(res.begin(), res.end());
  return prof;
}

double theta_of(double p) { return (p + 1.0) / (p - 1.0) - 1.5; }
double mu_of(double p) { return std::min(1.0, p - 1.0); }

ProfileConstants profile_constants(const RadialProfile& prof) {
  ProfileConstants c;
  const double p = prof.p;
  const double four_pi = 4.0 * std::numbers::pi;
  auto accumulate = [&](double r, double u, double du, double w) {
    const double r2 = r * r;
    c.l2_sq += w * r2 * u * u;
    c.lp1_pow += w * r2 * std::pow(std::abs(u), p + 1.0);
    c.d12_sq += w * r2 * du * du;
    c.moment2 += w * r2 * r2 * u * u;
    c.moment4 += w * r2 * r2 * r2 * u * u;
  };
  const std::size_t n = prof.u.size();
  for (std::size_t j = 0; j < n; ++j) {
    const double w = (j + 1 == n ? 0.5 : 1.0) * prof.dr;
    accumulate(prof.dr * static_cast<double>(j), prof.u[j], prof.du[j], w);
  }
  // analytic tail beyond the table
  const double rc = prof.r_cut();
  for (std::size_t j = 0; j <= 40000; ++j) {
    const double r = rc + prof.dr * static_cast<double>(j);
    const double w = (j == 0 || j == 40000 ? 0.5 : 1.0) * prof.dr;
    accumulate(r, tail_value(prof.tail_A, r), tail_derivative(prof.tail_A, r), w);
  }
  c.l2_sq *= four_pi;
  c.lp1_pow *= four_pi;
  c.d12_sq *= four_pi;
  c.moment2 *= four_pi;
  c.moment4 *= four_pi;
  c.theta = theta_of(p);
  c.mu = mu_of(p);
  c.C0 = (0.5 - 1.0 / (p + 1.0)) * c.lp1_pow;
  return c;
}

ScaleFactor scale_factor(const PotentialSpec& V, double eps, const Point3& z) {
  const Point3 x{eps * z[0], eps * z[1], eps * z[2]};
  const double v = V.value(x);
  if (!(v > 0.0)) throw DomainError("scaled profile: V(eps z) must be positive");
  ScaleFactor s;
  s.lambda = std::sqrt(v);
  const Point3 g = V.gradient(x);
  for (int i = 0; i < 3; ++i) s.dlambda[i] = eps * g[i] / (2.0 * s.lambda);
  return s;
}

namespace {

// Fraction of int U^2 lying beyond radius s.
double mass_fraction_beyond(const RadialProfile& prof, double s) {
  double total = 0.0, beyond = 0.0;
  for (std::size_t j = 0; j < prof.u.size(); ++j) {
    const double r = prof.dr * static_cast<double>(j);
    const double m = r * r * prof.u[j] * prof.u[j];
    total += m;
    if (r >= s) beyond += m;
  }
  return total > 0.0 ? beyond / total : 1.0;
}

// Union bound on the mass fraction outside a box whose faces lie at profile
// distances d[0..5] from the centre: a sphere of radius r has the fraction
// (1 - d / r) / 2 of its area beyond a plane at distance d < r.
double mass_fraction_outside_box(const RadialProfile& prof, const std::array<double, 6>& d) {
  double total = 0.0, outside = 0.0;
  for (std::size_t j = 1; j < prof.u.size(); ++j) {
    const double r = prof.dr * static_cast<double>(j);
    const double m = r * r * prof.u[j] * prof.u[j];
    total += m;
    double frac = 0.0;
    for (double df : d) frac += df < r ? 0.5 * (1.0 - df / r) : 0.0;
    outside += m * std::min(1.0, frac);
  }
  return total > 0.0 ? outside / total : 1.0;
}

}  // namespace

ScalarField scaled_profile(const RadialProfile& prof, double eps, const Point3& z, const PotentialSpec& V,
                           const Grid& grid) {
  const ScaleFactor sf = scale_factor(V, eps, z);
  const double lam = sf.lambda, amp = std::pow(lam, 2.0 / (prof.p - 1.0));
  if (const auto* rg = std::get_if<RadialGrid>(&grid)) {
    if (z != Point3{0.0, 0.0, 0.0}) throw UsageError("scaled profile: radial grids require z = 0");
    if (mass_fraction_beyond(prof, lam * rg->r_max()) > 1e-6)
      throw DomainError("scaled profile: domain too small, more than 1e-6 of the mass lies outside");
    return sample(*rg, [&](double r) { return amp * prof.value(lam * r); });
  }
  const BoxGrid& g = std::get<BoxGrid>(grid);
  std::array<double, 6> d{};
  for (int i = 0; i < 3; ++i) {
    d[2 * i] = lam * (g.half_width() - (z[i] - g.center()[i]));
    d[2 * i + 1] = lam * (g.half_width() + (z[i] - g.center()[i]));
  }
  if (*std::min_element(d.begin(), d.end()) <= 0.0 || mass_fraction_outside_box(prof, d) > 1e-6)
    throw DomainError("scaled profile: domain too small, z is too close to the box boundary");
  return sample(g, [&](const Point3& x) {
    const double r = std::sqrt((x[0] - z[0]) * (x[0] - z[0]) + (x[1] - z[1]) * (x[1] - z[1]) +
                               (x[2] - z[2]) * (x[2] - z[2]));
    return amp * prof.value(lam * r);
  });
}

double TangentFrame::gram_condition() const {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(gram, Eigen::EigenvaluesOnly);
  const auto ev = es.eigenvalues();
  return ev(0) > 0.0 ? ev(2) / ev(0) : std::numeric_limits<double>::infinity();
}

TangentFrame make_frame(std::array<ScalarField, 3> fields) {
  TangentFrame f{std::move(fields), Eigen::Matrix3d::Zero()};
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) f.gram(i, j) = f.gram(j, i) = inner_h1(f.dU[i], f.dU[j]);
  return f;
}

TangentFrame tangent_frame(const RadialProfile& prof, double eps, const Point3& z, const PotentialSpec& V,
                           const BoxGrid& grid) {
  scaled_profile(prof, eps, z, V, grid);  // domain check
  const ScaleFactor sf = scale_factor(V, eps, z);
  const double lam = sf.lambda, a = 2.0 / (prof.p - 1.0), amp = std::pow(lam, a);
  std::array<ScalarField, 3> d{ScalarField(grid), ScalarField(grid), ScalarField(grid)};
  const std::size_t n = grid.n();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        const Point3 x = grid.point(i, j, k);
        const Point3 y{x[0] - z[0], x[1] - z[1], x[2] - z[2]};
        const double rho = std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]);
        const double s = lam * rho;
        const double U = prof.value(s), dU = prof.derivative(s);
        const std::size_t id = grid.index(i, j, k);
        for (int c = 0; c < 3; ++c) {
          double ds = sf.dlambda[c] * rho;
          if (rho > 0.0) ds -= lam * y[c] / rho;
          d[c][id] = a * amp / lam * sf.dlambda[c] * U + amp * dU * ds;
        }
      }
  return make_frame(std::move(d));
}

namespace {

void symmetrize(ScalarField& f) {
  const BoxGrid& g = f.box();
  const std::size_t n = g.n();
  std::vector<double> v(f.values().begin(), f.values().end());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (int m = 0; m < 8; ++m) {
          const std::size_t a = (m & 1) ? n - 1 - i : i, b = (m & 2) ? n - 1 - j : j, c = (m & 4) ? n - 1 - k : k;
          s += v[g.index(a, b, c)];
        }
        f[g.index(i, j, k)] = 0.125 * s;
      }
}

}  // namespace

DiscreteGroundState discrete_ground_state(const RadialProfile& prof, const BoxGrid& grid, double tol) {
  if (grid.center() != Point3{0.0, 0.0, 0.0}) throw UsageError("discrete ground state: box must be origin-centred");
  const double p = prof.p, a = 2.0 / (p - 1.0);
  DirichletSineSolver solver(grid);
  auto dot = [](const ScalarField& x, const ScalarField& y) { return inner_h1(x, y); };
  DiscreteGroundState out{ScalarField(grid), 0, 1.0};
  ScalarField& U = out.U;

  // Newton for (-Lap_h + k^2) V = V^p, preconditioned by the H1 Riesz map so
  // that the Jacobian I - R((p V^{p-1} + 1 - k^2) .) is H1-self-adjoint.
  // Backtracking on the preconditioned residual keeps the iterate on the
  // branch it starts from.
  auto newton = [&](double k, int max_it, double stop) {
    auto residual = [&](const ScalarField& V) {
      ScalarField r(grid), g(grid);
      for (std::size_t i = 0; i < V.size(); ++i) r[i] = signed_pow(V[i], p) + (1.0 - k * k) * V[i];
      solver.solve(r.values(), g.values(), 1.0, 1.0);
      return V - g;
    };
    ScalarField F = residual(U);
    double fn = std::sqrt(dot(F, F));
    for (int it = 0; it < max_it; ++it) {
      ScalarField D(grid);
      for (std::size_t i = 0; i < U.size(); ++i) D[i] = p * std::pow(std::abs(U[i]), p - 1.0) + 1.0 - k * k;
      auto jac = [&](const ScalarField& w) {
        ScalarField g(grid);
        solver.solve(hadamard(D, w).values(), g.values(), 1.0, 1.0);
        return w - g;
      };
      ScalarField step(grid);
      minres(jac, step, F, dot, 1e-12, 0.0, 500);
      double t = 1.0;
      for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
        ScalarField trial = U;
        trial.axpy(-t, step);
        symmetrize(trial);
        ScalarField Ft = residual(trial);
        const double ftn = std::sqrt(dot(Ft, Ft));
        if (ftn < (1.0 - 1e-4 * t) * fn || ls == 29) {
          out.residual = t * step.max_abs() / trial.max_abs();
          U = std::move(trial);
          F = std::move(Ft);
          fn = ftn;
          break;
        }
      }
      ++out.iterations;
      if (out.residual <= stop) return true;
    }
    return false;
  };

  // Continuation in k from a well-resolved wide profile up to k = 1, with a
  // secant predictor and step halving on failure.
  const double h = grid.spacing();
  double k = std::min(0.5, 0.1 / h);
  U = sample(grid, [&](const Point3& x) {
    return std::pow(k, a) * prof.value(k * std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
  });
  if (!newton(k, 40, 1e-10)) throw SolverError("discrete ground state: no convergence", out.residual, out.iterations);
  ScalarField prev = U;
  double k_prev = k, dk = 0.1 * k;
  while (k < 1.0) {
    const double next = std::min(1.0, k + dk);
    const ScalarField base = U;
    if (k_prev != k) {
      U.axpy((next - k) / (k - k_prev), base - prev);
    } else {
      U *= std::pow(next / k, a);
    }
    if (newton(next, 12, 1e-10)) {
      prev = base;
      k_prev = k;
      k = next;
      dk *= 1.5;
    } else {
      U = base;
      dk *= 0.5;
      if (dk < 1e-4 * k) throw SolverError("discrete ground state: continuation stalled", out.residual, out.iterations);
    }
  }
  if (!newton(1.0, 60, tol)) throw SolverError("discrete ground state: no convergence", out.residual, out.iterations);
  return out;
}

double tricubic(const ScalarField& f, const Point3& x) {
  const BoxGrid& g = f.box();
  const long n = static_cast<long>(g.n());
  const double h = g.spacing();
  long base[3];
  double t[3];
  for (int a = 0; a < 3; ++a) {
    const double s = (x[a] - g.center()[a] + g.half_width()) / h;
    if (s < -1.0 || s > static_cast<double>(n)) return 0.0;
    base[a] = static_cast<long>(std::floor(s));
    t[a] = s - static_cast<double>(base[a]);
  }
  auto weights = [](double s, double w[4]) {  // Catmull-Rom
    const double s2 = s * s, s3 = s2 * s;
    w[0] = 0.5 * (-s3 + 2.0 * s2 - s);
    w[1] = 0.5 * (3.0 * s3 - 5.0 * s2 + 2.0);
    w[2] = 0.5 * (-3.0 * s3 + 4.0 * s2 + s);
    w[3] = 0.5 * (s3 - s2);
  };
  double wx[4], wy[4], wz[4];
  weights(t[0], wx);
  weights(t[1], wy);
  weights(t[2], wz);
  auto at = [&](long i, long j, long k) {
    if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n) return 0.0;
    return f[g.index(i, j, k)];
  };
  double s = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c)
        s += wx[a] * wy[b] * wz[c] * at(base[0] - 1 + a, base[1] - 1 + b, base[2] - 1 + c);
  return s;
}

}  // namespace qslsp
