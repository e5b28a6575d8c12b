// Acceptance checks 1-10. One PASS/FAIL line per criterion; `--only 3` or
// `--only 9,10` restricts the run. Exit status 0 when every selected check
// passes, 4 otherwise.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qslsp/energy.hpp"
#include "qslsp/error.hpp"
#include "qslsp/experiments.hpp"
#include "qslsp/operators.hpp"
#include "qslsp/profile.hpp"
#include "qslsp/quasipoisson.hpp"
#include "qslsp/reduction.hpp"

using namespace qslsp;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  int id = 0;
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / x.size();
    my += std::log(y[i]) / y.size();
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

double r_of(const Point3& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

const RadialProfile& cubic_profile() {
  static const RadialProfile P = shoot_ground_state(3.0, 1e-10);
  return P;
}

const std::vector<double> kSweep{0.2, 0.141, 0.1, 0.07, 0.05};

ProblemParams bump_problem() {
  ProblemParams p;
  p.beta = 1.0;
  p.potential = PotentialSpec::bump(1.0, 0.5, {0.5, 0.0, 0.0}, 1.0);
  return p;
}

const Reducer& bump_reducer() {
  static const Reducer R(cubic_profile(), bump_problem());
  return R;
}

const Point3 kCritical{0.5, 0.0, 0.0}, kNonCritical{0.0, 0.0, 0.0};

Point3 rescaled(const Point3& x, double eps) { return {x[0] / eps, x[1] / eps, x[2] / eps}; }

// u^2 for u a sum of three random Gaussians
ScalarField random_source(const BoxGrid& g, std::mt19937& rng) {
  std::uniform_real_distribution<double> c(-1.0, 1.0), w(0.6, 1.2), a(0.5, 1.5);
  std::vector<std::array<double, 5>> b;
  for (int i = 0; i < 3; ++i) b.push_back({c(rng), c(rng), c(rng), w(rng), a(rng)});
  return sample(g, [&](const Point3& x) {
    double u = 0.0;
    for (const auto& k : b) {
      const double d2 = (x[0] - k[0]) * (x[0] - k[0]) + (x[1] - k[1]) * (x[1] - k[1]) + (x[2] - k[2]) * (x[2] - k[2]);
      u += k[4] * std::exp(-d2 / (k[3] * k[3]));
    }
    return u * u;
  });
}

ScalarField random_direction(const BoxGrid& g, std::mt19937& rng) {
  std::uniform_real_distribution<double> c(-1.5, 1.5), k(0.3, 1.5);
  const Point3 x0{c(rng), c(rng), c(rng)};
  const double kx = k(rng), ky = k(rng), s = k(rng);
  return sample(g, [&](const Point3& x) {
    const double d2 = (x[0] - x0[0]) * (x[0] - x0[0]) + (x[1] - x0[1]) * (x[1] - x0[1]) + (x[2] - x0[2]) * (x[2] - x0[2]);
    return std::cos(kx * x[0] + ky * x[2]) * std::exp(-d2 / (2.0 * s * s));
  });
}

std::vector<Outcome> criterion1() {
  const RadialProfile& P = cubic_profile();
  const double u0 = oracle::ground_state_u0(3.0, 1e-3);
  const double rel = std::abs(P.u0 - u0) / u0;
  double res = 0.0;
  for (double r : P.ode_residuals()) res = std::max(res, r);
  std::vector<double> r, y;
  for (double s = P.r_reliable - 3.0; s <= P.r_reliable + 3.0; s += 0.25) {
    r.push_back(s);
    y.push_back(std::log(s * P.value(s)));
  }
  double mr = 0, my = 0, sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    mr += r[i] / r.size();
    my += y[i] / r.size();
  }
  for (std::size_t i = 0; i < r.size(); ++i) {
    sxy += (r[i] - mr) * (y[i] - my);
    sxx += (r[i] - mr) * (r[i] - mr);
  }
  const double slope = sxy / sxx;
  const bool ok = rel <= 1e-8 && res <= 1e-8 && std::abs(slope + 1.0) <= 0.02;
  return {{1, ok,
           "U(0) rel err " + fmt("%.2e", rel) + " (<= 1e-8), ODE residual " + fmt("%.2e", res) +
               " (<= 1e-8), tail slope " + fmt("%.4f", slope) + " (-1 +- 0.02)"}};
}

std::vector<Outcome> criterion2() {
  const RadialGrid g(16.0, 2048);
  const double eps = 0.1;
  const auto s = solve_phi_radial_source(sample(g, [](double r) { return std::exp(-r * r); }), {eps, 0.0, 1e-10, 50});
  double worst = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const double r = g.node(j);
    const double exact = r == 0.0 ? eps * eps * 0.5 : eps * eps * std::sqrt(M_PI) / 4.0 * std::erf(r) / r;
    worst = std::max(worst, std::abs(s.phi[j] - exact) / exact);
  }
  // phi* = exp(-r^2): Lap phi* = (4r^2 - 6) e^{-r^2}, Lap_4 phi* = (48 r^4 - 40 r^2) e^{-3r^2}
  const double me = 0.5, beta = 1.0;
  std::vector<double> errs, hs;
  for (std::size_t n : {25, 49, 97}) {
    const BoxGrid b(4.0, n);
    const ScalarField f = sample(b, [&](const Point3& x) {
      const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
      return -(4.0 * r2 - 6.0) * std::exp(-r2) / (me * me) -
             beta * (48.0 * r2 * r2 - 40.0 * r2) * std::exp(-3.0 * r2) / std::pow(me, 4);
    });
    const ScalarField exact = sample(b, [](const Point3& x) { return std::exp(-r_of(x) * r_of(x)); });
    const auto m = minimize_poisson_energy(f, {me, beta, 1e-11, 50});
    errs.push_back((m.phi - exact).max_abs());
    hs.push_back(b.spacing());
  }
  const double o1 = std::log(errs[0] / errs[1]) / std::log(hs[0] / hs[1]);
  const double o2 = std::log(errs[1] / errs[2]) / std::log(hs[1] / hs[2]);
  const bool ok = worst <= 1e-4 && std::abs(o1 - 2.0) <= 0.2 && std::abs(o2 - 2.0) <= 0.2;
  return {{2, ok,
           "radial max rel err " + fmt("%.2e", worst) + " (<= 1e-4), manufactured orders " + fmt("%.3f", o1) + ", " +
               fmt("%.3f", o2) + " (2 +- 0.2)"}};
}

std::vector<Outcome> criterion3() {
  const BoxGrid g(4.0, 33);
  std::mt19937 rng(2024);
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    const ScalarField src = random_source(g, rng);
    for (double eps : {0.1, 0.05})
      for (double beta : {0.0, 1.0}) worst = std::max(worst, solve_phi(src, {eps, beta, 1e-10, 50}).identity_residual);
  }
  return {{3, worst <= 1e-7, "max identity residual " + fmt("%.2e", worst) + " (<= 1e-7) over 20 solves"}};
}

std::vector<Outcome> criterion4() {
  const BoxGrid g(4.0, 33);
  std::mt19937 rng(17);
  const ScalarField src = random_source(g, rng);
  std::vector<double> norms;
  for (double e : kSweep) norms.push_back(norm_d12(solve_phi(src, {e, 1.0, 1e-9, 50}).phi));
  const double s = fitted_slope(kSweep, norms);
  return {{4, s >= 1.9, "D12 slope " + fmt("%.3f", s) + " (>= 1.9)"}};
}

std::vector<Outcome> criterion5() {
  const BoxGrid g(6.0, 63);
  ProblemParams prm = bump_problem();
  prm.eps = 0.1;
  prm.poisson_tol = 1e-12;
  const EnergyModel model(prm, g);
  const ScalarField u = sample(g, [](const Point3& x) {
    return 2.0 * std::exp(-0.5 * r_of(x) * r_of(x)) + 0.2 * x[0] * std::exp(-r_of(x));
  });
  const auto s = model.state(u);
  const ScalarField grad = model.gradient(s);
  std::mt19937 rng(7);
  double gerr = 0.0, herr = 0.0, serr = 0.0;
  for (int k = 0; k < 10; ++k) {
    const ScalarField w = random_direction(g, rng);
    const double exact = inner_h1(grad, w);
    double best = 1e300;
    for (double t : {1e-3, 1e-4}) {
      ScalarField up = u, um = u;
      up.axpy(t, w);
      um.axpy(-t, w);
      const double fd = (model.energy(model.state(up, &s.phi->phi)).total -
                         model.energy(model.state(um, &s.phi->phi)).total) / (2.0 * t);
      best = std::min(best, std::abs(fd - exact) / std::abs(exact));
    }
    gerr = std::max(gerr, best);
    const ScalarField hw = model.hessian_apply(s, w);
    const double t = 1e-4;
    ScalarField up = u, um = u;
    up.axpy(t, w);
    um.axpy(-t, w);
    ScalarField fd = model.gradient(model.state(up, &s.phi->phi)) - model.gradient(model.state(um, &s.phi->phi));
    fd *= 1.0 / (2.0 * t);
    herr = std::max(herr, norm_h1(fd - hw) / norm_h1(hw));
    const ScalarField w2 = random_direction(g, rng);
    const double a = inner_h1(hw, w2), b = inner_h1(model.hessian_apply(s, w2), w);
    serr = std::max(serr, std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
  }
  const bool ok = gerr <= 1e-5 && herr <= 1e-4 && serr <= 1e-8;
  return {{5, ok,
           "gradient " + fmt("%.2e", gerr) + " (<= 1e-5), Hessian " + fmt("%.2e", herr) + " (<= 1e-4), symmetry " +
               fmt("%.2e", serr) + " (<= 1e-8), 10 directions on 63^3"}};
}

std::vector<Outcome> criterion6() {
  const Reducer& R = bump_reducer();
  std::string detail;
  bool ok = true;
  for (const auto& [x, bound, name] : {std::tuple{kNonCritical, 0.9, "non-critical"}, std::tuple{kCritical, 1.9, "critical"}}) {
    std::vector<double> norms;
    for (double e : kSweep) {
      const Ansatz a = R.ansatz(e, rescaled(x, e));
      const EnergyModel m = R.model(e, a);
      norms.push_back(norm_h1(m.gradient(m.state(a.U))));
    }
    const double s = fitted_slope(kSweep, norms);
    ok = ok && s >= bound;
    detail += std::string(detail.empty() ? "" : ", ") + name + " slope " + fmt("%.3f", s) + " (>= " + fmt("%.1f", bound) + ")";
  }
  return {{6, ok, "|grad J(U)| " + detail}};
}

struct AuxRun {
  double ratio, orth, w_norm, expansion;
};

// auxiliary solves over the sweep, shared by criteria 7 and 8
const std::vector<AuxRun>& aux_sweep(const Point3& x) {
  static std::map<Point3, std::vector<AuxRun>> cache;
  auto& runs = cache[x];
  if (runs.empty())
    for (double e : kSweep) {
      const auto r = bump_reducer().solve_auxiliary(e, rescaled(x, e));
      runs.push_back({r.max_contraction_ratio, r.orthogonality, r.w_h1_norm,
                      std::abs(r.energy - bump_reducer().leading(e, rescaled(x, e)))});
    }
  return runs;
}

std::vector<Outcome> criterion7() {
  double ratio = 0.0, orth = 0.0;
  std::string wd;
  bool ok = true;
  for (const auto& [x, bound, name] : {std::tuple{kNonCritical, 0.9, "non-critical"}, std::tuple{kCritical, 1.9, "critical"}}) {
    std::vector<double> w;
    for (const auto& r : aux_sweep(x)) {
      ratio = std::max(ratio, r.ratio);
      orth = std::max(orth, r.orth);
      w.push_back(r.w_norm);
    }
    const double sw = fitted_slope(kSweep, w);
    ok = ok && sw >= bound;
    wd += std::string(wd.empty() ? "" : ", ") + name + " " + fmt("%.3f", sw) + " (>= " + fmt("%.1f", bound) + ")";
  }
  ok = ok && ratio <= 0.9 && orth <= 1e-8;
  return {{7, ok,
           "max contraction ratio " + fmt("%.3f", ratio) + " (<= 0.9), orthogonality " + fmt("%.1e", orth) +
               " (<= 1e-8), |w| slope " + wd}};
}

std::vector<Outcome> criterion8() {
  std::string jd;
  bool ok = true;
  for (const auto& [x, name] : {std::pair{kNonCritical, "non-critical"}, std::pair{kCritical, "critical"}}) {
    std::vector<double> j;
    for (const auto& r : aux_sweep(x)) j.push_back(r.expansion);
    const double sj = fitted_slope(kSweep, j);
    ok = ok && sj >= 0.9;
    jd += std::string(jd.empty() ? "" : ", ") + name + " " + fmt("%.3f", sj);
  }
  // gradient expansion at the non-critical point, where grad V does not vanish
  const double mu = std::min(1.0, cubic_profile().p - 1.0), gbound = std::min(1.0 + mu, 2.0) - 0.1;
  std::vector<double> gerr;
  for (double e : kSweep) {
    const auto s = bump_reducer().reduced_value(e, rescaled(kNonCritical, e));
    double d = 0.0;
    for (int i = 0; i < 3; ++i) d += std::pow(s.grad_J_tilde[i] - s.predicted_grad[i], 2);
    gerr.push_back(std::sqrt(d));
  }
  const double sg = fitted_slope(kSweep, gerr);
  ok = ok && sg >= gbound;
  return {{8, ok,
           "|J_tilde - C0 V^theta| slope " + jd + " (>= 0.9), gradient expansion slope " + fmt("%.3f", sg) + " (>= " +
               fmt("%.1f", gbound) + ")"}};
}

std::vector<Outcome> criterion9_10() {
  ExperimentConfig c = load_config(std::filesystem::path(QSLSP_SOURCE_DIR) / "configs" / "bump.cfg");
  const Reducer R = make_reducer(c);
  const ScanTable t = scan_reduced(c, R);
  const auto reports = find_critical_points(t, c, R);
  const double tol_aux = R.options().tol_aux;
  bool nat = true;
  int checked = 0;
  double worst = 0.0;
  for (const auto& rep : reports)
    for (const auto& p : rep.points) {
      ++checked;
      const double bound = 5.0 * tol_aux + 10.0 * rep.eps * rep.eps;
      worst = std::max(worst, p.full_residual / bound);
      nat = nat && p.full_residual <= bound;
    }
  const auto& last = reports.back();
  const std::size_t count = last.points.size();
  std::string where;
  for (const auto& p : last.points) where += " x = (" + fmt("%.4f", p.x[0]) + ", " + fmt("%.1e", p.x[1]) + ", " + fmt("%.1e", p.x[2]) + ") " + p.classification + ";";
  std::vector<double> eps, dist;
  bool decreasing = true;
  std::string dd;
  try {
    const auto rows = concentration_study(c, R, &reports);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      eps.push_back(rows[i].eps);
      dist.push_back(rows[i].distance);
      dd += std::string(dd.empty() ? "" : " ") + fmt("%.3e", rows[i].distance);
      if (i > 0 && !(rows[i].distance < rows[i - 1].distance)) decreasing = false;
    }
  } catch (const Error& e) {
    decreasing = false;
    dd = e.what();
  }
  const double slope = dist.size() >= 2 ? fitted_slope(eps, dist) : 0.0;
  const bool ok10 = count >= 2 && decreasing && slope >= 0.9;
  return {{9, nat && checked > 0,
           std::to_string(checked) + " critical points, max full_residual / (5 tol_aux + 10 eps^2) = " + fmt("%.2e", worst)},
          {10, ok10,
           std::to_string(count) + " critical point(s) at eps = " + fmt("%g", last.eps) + " (>= 2):" + where +
               " distances " + dd + (decreasing ? " strictly decreasing" : " NOT strictly decreasing") + ", slope " +
               fmt("%.3f", slope) + " (>= 0.9)"}};
}

struct Check {
  std::vector<int> ids;
  double budget;  // seconds
  std::function<std::vector<Outcome>()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) only.insert(std::stoi(item));
    } else {
      std::fprintf(stderr, "usage: acceptance [--only k[,k...]]\n");
      return 2;
    }
  }
  const std::vector<Check> checks{
      {{1}, 5.0, criterion1},          {{2}, 30.0, criterion2},      {{3}, 60.0, criterion3},
      {{4}, 60.0, criterion4},         {{5}, 120.0, criterion5},     {{6}, 300.0, criterion6},
      {{7}, 600.0, criterion7},         {{8}, 900.0, criterion8},   {{9, 10}, 1800.0, criterion9_10},
  };
  bool all = true;
  for (const auto& c : checks) {
    bool selected = only.empty();
    for (int id : c.ids) selected = selected || only.count(id);
    if (!selected) continue;
    const auto t0 = Clock::now();
    std::vector<Outcome> out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      for (int id : c.ids) out.push_back({id, false, std::string("error: ") + e.what()});
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = secs <= c.budget;
    for (auto& o : out) {
      if (!only.empty() && !only.count(o.id)) continue;
      const bool pass = o.pass && in_time;
      all = all && pass;
      std::printf("criterion %2d: %s  %s; %.1f s (budget %.0f s)\n", o.id, pass ? "PASS" : "FAIL", o.detail.c_str(), secs,
                  c.budget);
    }
  }
  return all ? 0 : 4;
}
