#include "qslsp/experiments.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "qslsp/error.hpp"
#include "qslsp/operators.hpp"

namespace qslsp {
namespace {

constexpr double kZeroEigenvalue = 1e-6;
constexpr double kPlateau = 1e-8;
constexpr double kKink = 0.1;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

std::size_t worker_count() {
  const char* env = std::getenv("QSLSP_THREADS");
  if (env == nullptr) return 1;
  const long n = std::strtol(env, nullptr, 10);
  return n >= 1 ? static_cast<std::size_t>(n) : 1;
}

// Runs task(i) for i < count on up to `workers` threads.
template <class Task>
void parallel_for(std::size_t count, std::size_t workers, Task&& task) {
  workers = std::min(workers, std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) task(i);
    });
  for (auto& t : pool) t.join();
}

Point3 scaled(const Point3& x, double s) { return {s * x[0], s * x[1], s * x[2]}; }

double norm3(const Eigen::Vector3d& v) { return v.norm(); }

// Smallest spacing over the active axes, or 1 for a single-node scan.
double min_cell(const ScanRegion& r) {
  double c = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i)
    if (r.n[i] > 1) c = std::min(c, r.cell(i));
  return std::isfinite(c) ? c : 1.0;
}

double axis_cell(const ScanRegion& r, int i) { return r.n[i] > 1 ? r.cell(i) : min_cell(r); }

bool inside_padded(const ScanRegion& r, const Point3& x) {
  for (int i = 0; i < 3; ++i) {
    const double pad = axis_cell(r, i);
    if (x[i] < r.lo[i] - pad || x[i] > r.hi[i] + pad) return false;
  }
  return true;
}

// points exactly two cells apart are separate; x = eps (x / eps) is not exact
bool within_two_cells(const ScanRegion& r, const Point3& a, const Point3& b) {
  for (int i = 0; i < 3; ++i)
    if (std::abs(a[i] - b[i]) >= 2.0 * axis_cell(r, i) * (1.0 - 1e-9)) return false;
  return true;
}

std::string classify(const std::array<double, 3>& ev) {
  int pos = 0, neg = 0;
  for (double e : ev) {
    if (std::abs(e) <= kZeroEigenvalue) continue;
    (e > 0.0 ? pos : neg)++;
  }
  if (pos + neg < 3) return "degenerate";
  if (neg == 3) return "max";
  if (pos == 3) return "min";
  return "saddle";
}

// Critical point of V nearest to x by Newton on grad V (pseudo-inverse on
// degenerate directions).
Point3 critical_point_of_V(const PotentialSpec& V, Point3 x) {
  for (int it = 0; it < 50; ++it) {
    const Point3 g = V.gradient(x);
    const Matrix3 h = V.hessian(x);
    Eigen::Matrix3d H;
    Eigen::Vector3d b;
    for (int i = 0; i < 3; ++i) {
      b(i) = g[i];
      for (int j = 0; j < 3; ++j) H(i, j) = h[i][j];
    }
    if (b.norm() <= 1e-14) break;
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto sv = svd.singularValues();
    Eigen::Vector3d step = Eigen::Vector3d::Zero();
    for (int k = 0; k < 3; ++k)
      if (sv(k) > 1e-8 * sv(0)) step -= svd.matrixV().col(k) * (svd.matrixU().col(k).dot(b) / sv(k));
    for (int i = 0; i < 3; ++i) x[i] += step(i);
    if (step.norm() <= 1e-14) break;
  }
  return x;
}

}  // namespace

std::size_t ScanRegion::size() const {
  return static_cast<std::size_t>(n[0]) * static_cast<std::size_t>(n[1]) * static_cast<std::size_t>(n[2]);
}

double ScanRegion::cell(int i) const { return n[i] > 1 ? (hi[i] - lo[i]) / (n[i] - 1) : 0.0; }

std::array<int, 3> ScanRegion::coords(std::size_t index) const {
  const int k = static_cast<int>(index % static_cast<std::size_t>(n[2]));
  const std::size_t rest = index / static_cast<std::size_t>(n[2]);
  const int j = static_cast<int>(rest % static_cast<std::size_t>(n[1]));
  const int i = static_cast<int>(rest / static_cast<std::size_t>(n[1]));
  return {i, j, k};
}

std::size_t ScanRegion::index(const std::array<int, 3>& c) const {
  return (static_cast<std::size_t>(c[0]) * static_cast<std::size_t>(n[1]) + static_cast<std::size_t>(c[1])) *
             static_cast<std::size_t>(n[2]) +
         static_cast<std::size_t>(c[2]);
}

Point3 ScanRegion::node(std::size_t index) const {
  const auto c = coords(index);
  Point3 x;
  for (int i = 0; i < 3; ++i) x[i] = lo[i] + c[i] * cell(i);
  return x;
}

int ScanRegion::active_axes() const { return (n[0] > 1) + (n[1] > 1) + (n[2] > 1); }

Reducer make_reducer(const ExperimentConfig& config) {
  ProblemParams p = config.problem;
  p.eps = config.eps_list.front();
  return Reducer(shoot_ground_state(p.p, config.profile_tol), p, config.reduction);
}

std::vector<const ScanRow*> ScanTable::rows_for(double eps) const {
  std::vector<const ScanRow*> out;
  for (const auto& r : rows)
    if (r.sample.eps == eps) out.push_back(&r);
  return out;
}

ScanTable scan_reduced(const ExperimentConfig& config, const Reducer& reducer) {
  ScanTable t;
  t.region = config.scan;
  t.eps_list = config.eps_list;
  t.gradients = config.scan_gradients;
  const std::size_t m = config.scan.size();
  t.rows.resize(config.eps_list.size() * m);
  parallel_for(t.rows.size(), worker_count(), [&](std::size_t i) {
    const double eps = config.eps_list[i / m];
    ScanRow& row = t.rows[i];
    row.node = i % m;
    const Point3 z = scaled(config.scan.node(row.node), 1.0 / eps);
    try {
      row.sample = reducer.reduced_value(eps, z, config.scan_gradients);
    } catch (const Error& e) {
      row.status = e.what();
      row.sample.eps = eps;
      row.sample.z = z;
      row.sample.leading = reducer.leading(eps, z);
      constexpr double nan = std::numeric_limits<double>::quiet_NaN();
      row.sample.J_tilde = row.sample.expansion_error = row.sample.w_norm = nan;
      row.sample.grad_J_tilde.fill(nan);
      row.sample.predicted_grad.fill(nan);
    }
  });
  return t;
}

std::string scan_csv(const ScanTable& table) {
  std::ostringstream out;
  out << "eps,z1,z2,z3,J_tilde,leading,expansion_error,g1,g2,g3,pg1,pg2,pg3,w_norm,iters,status\n";
  for (const auto& r : table.rows) {
    const auto& s = r.sample;
    out << fmt(s.eps) << ',' << fmt(s.z[0]) << ',' << fmt(s.z[1]) << ',' << fmt(s.z[2]) << ',' << fmt(s.J_tilde) << ','
        << fmt(s.leading) << ',' << fmt(s.expansion_error);
    for (double g : s.grad_J_tilde) out << ',' << fmt(g);
    for (double g : s.predicted_grad) out << ',' << fmt(g);
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    out << ',' << fmt(s.w_norm) << ',' << s.iterations << ',' << status << '\n';
  }
  return out.str();
}

std::optional<CriticalPoint> refine_critical_point(double eps, const Point3& z_seed, const ExperimentConfig& config,
                                                   const Reducer& reducer, std::vector<std::string>& log) {
  const ScanRegion& region = config.scan;
  const double cap = min_cell(region) / eps;
  const double delta = 10.0 * reducer.options().hz;
  Point3 z = z_seed;
  std::optional<ScalarField> warm;
  auto seed_text = [&] {
    std::ostringstream s;
    s << "seed x = (" << eps * z_seed[0] << ", " << eps * z_seed[1] << ", " << eps * z_seed[2] << ")";
    return s.str();
  };
  int it = 0;
  try {
    for (;; ++it) {
      const Ansatz a = reducer.ansatz(eps, z);
      const ReductionResult r = reducer.solve_auxiliary(a, warm ? &*warm : nullptr);
      const Eigen::Vector3d alpha(r.alpha[0], r.alpha[1], r.alpha[2]);
      if (norm3(a.frame.gram * alpha) <= config.tol_crit) break;
      if (it == config.newton_max_iter) {
        log.push_back(seed_text() + ": Newton did not converge, dropped");
        return std::nullopt;
      }
      Eigen::Matrix3d J;
      for (int k = 0; k < 3; ++k) {
        Point3 zk = z;
        zk[k] += delta;
        const ReductionResult rk = reducer.solve_auxiliary(reducer.ansatz(eps, zk), &r.w);
        for (int j = 0; j < 3; ++j) J(j, k) = (rk.alpha[j] - r.alpha[j]) / delta;
      }
      const Eigen::JacobiSVD<Eigen::Matrix3d> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const auto sv = svd.singularValues();
      Eigen::Vector3d step = Eigen::Vector3d::Zero();
      for (int k = 0; k < 3; ++k)
        if (sv(k) > 1e-3 * sv(0)) step -= svd.matrixV().col(k) * (svd.matrixU().col(k).dot(alpha) / sv(k));
      const double len = step.cwiseAbs().maxCoeff();
      if (len > cap) step *= cap / len;
      for (int i = 0; i < 3; ++i) z[i] += step(i);
      if (!inside_padded(region, scaled(z, eps))) {
        log.push_back(seed_text() + ": Newton left the scan region, dropped");
        return std::nullopt;
      }
      warm = r.w;
    }
  } catch (const Error& e) {
    log.push_back(seed_text() + ": " + e.what() + ", dropped");
    return std::nullopt;
  }

  const ReducedSample s = reducer.reduced_value(eps, z);
  CriticalPoint cp;
  cp.z = z;
  cp.x = scaled(z, eps);
  cp.J_tilde = s.J_tilde;
  cp.alpha = s.alpha;
  const Eigen::Vector3d alpha(s.alpha[0], s.alpha[1], s.alpha[2]);
  cp.grad_norm = norm3(s.M * alpha);
  cp.grad_norm_chain = std::sqrt(s.grad_J_tilde[0] * s.grad_J_tilde[0] + s.grad_J_tilde[1] * s.grad_J_tilde[1] +
                                 s.grad_J_tilde[2] * s.grad_J_tilde[2]);
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(s.hessian());
  for (int i = 0; i < 3; ++i) cp.hessian_eigenvalues[i] = es.eigenvalues()(i);
  Eigen::Matrix3d wide;
  try {
    const double h2 = 2.0 * reducer.options().hz;
    for (int i = 0; i < 3; ++i) {
      Point3 zp = z, zm = z;
      zp[i] += h2;
      zm[i] -= h2;
      const ReductionResult rp = reducer.solve_auxiliary(eps, zp), rm = reducer.solve_auxiliary(eps, zm);
      for (int j = 0; j < 3; ++j) wide(j, i) = (rp.alpha[j] - rm.alpha[j]) / (2.0 * h2);
    }
  } catch (const Error& e) {
    log.push_back(seed_text() + ": " + e.what() + " in the step check, dropped");
    return std::nullopt;
  }
  cp.jacobian_step_change = (wide - s.alpha_jacobian).norm() / s.alpha_jacobian.norm();
  cp.classification = cp.jacobian_step_change > kKink ? "nonsmooth" : classify(cp.hessian_eigenvalues);
  cp.full_residual = s.full_residual;
  cp.min_singular_value = Eigen::JacobiSVD<Eigen::Matrix3d>(s.M).singularValues().minCoeff();
  cp.min_gram_diagonal = s.gram.diagonal().minCoeff();
  cp.newton_iterations = it;
  return cp;
}

std::vector<CriticalPointReport> find_critical_points(const ScanTable& scan, const ExperimentConfig& config,
                                                      const Reducer& reducer) {
  std::vector<CriticalPointReport> reports;
  const ScanRegion& region = scan.region;
  for (double eps : scan.eps_list) {
    CriticalPointReport rep;
    rep.eps = eps;
    rep.expected = config.cup_length_plus_one;
    const auto rows = scan.rows_for(eps);
    std::vector<const ScanRow*> by_node(region.size(), nullptr);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t ok = 0;
    for (const ScanRow* r : rows)
      if (r->ok()) {
        by_node[r->node] = r;
        lo = std::min(lo, r->sample.J_tilde);
        hi = std::max(hi, r->sample.J_tilde);
        ++ok;
      }
    if (ok >= 2 && hi - lo <= kPlateau * std::max(1.0, std::abs(hi))) {
      rep.plateau = true;
      std::ostringstream s;
      s << "J_tilde varies by " << hi - lo << " over the scan: degenerate plateau, no isolated points";
      rep.log.push_back(s.str());
      reports.push_back(std::move(rep));
      continue;
    }

    std::vector<std::size_t> seeds;
    const auto value = [&](std::size_t k) { return by_node[k]->sample.J_tilde; };
    for (std::size_t k = 0; k < region.size(); ++k) {
      if (by_node[k] == nullptr) continue;
      if (region.size() == 1) {
        seeds.push_back(k);
        continue;
      }
      const auto c = region.coords(k);
      bool interior = true, is_max = true, is_min = true;
      for (int i = 0; i < 3 && interior; ++i) {
        if (region.n[i] == 1) continue;
        if (c[i] == 0 || c[i] == region.n[i] - 1) {
          interior = false;
          break;
        }
        for (int d : {-1, 1}) {
          auto cn = c;
          cn[i] += d;
          const std::size_t kn = region.index(cn);
          if (by_node[kn] == nullptr) {
            interior = false;
            break;
          }
          if (!(value(k) > value(kn))) is_max = false;
          if (!(value(k) < value(kn))) is_min = false;
        }
      }
      if (interior && (is_max || is_min)) seeds.push_back(k);
    }
    if (scan.gradients) {
      // cells whose corners see both signs of every active gradient component
      std::array<int, 3> top{};
      for (int i = 0; i < 3; ++i) top[i] = std::max(1, region.n[i] - 1);
      for (int a = 0; a < top[0]; ++a)
        for (int b = 0; b < top[1]; ++b)
          for (int c = 0; c < top[2]; ++c) {
            std::vector<std::size_t> corners;
            for (int m = 0; m < 8; ++m) {
              std::array<int, 3> q{a + (m & 1), b + ((m >> 1) & 1), c + ((m >> 2) & 1)};
              bool valid = true;
              for (int i = 0; i < 3; ++i) valid = valid && q[i] < region.n[i];
              if (valid) corners.push_back(region.index(q));
            }
            std::sort(corners.begin(), corners.end());
            corners.erase(std::unique(corners.begin(), corners.end()), corners.end());
            if (corners.size() < 2) continue;
            bool change = true, complete = true;
            for (std::size_t k : corners) complete = complete && by_node[k] != nullptr;
            if (!complete) continue;
            for (int i = 0; i < 3; ++i) {
              if (region.n[i] == 1) continue;
              bool pos = false, neg = false;
              for (std::size_t k : corners) {
                const double g = by_node[k]->sample.grad_J_tilde[i];
                pos = pos || g > 0.0;
                neg = neg || g < 0.0;
              }
              change = change && pos && neg;
            }
            if (!change) continue;
            std::size_t best = corners.front();
            double best_norm = std::numeric_limits<double>::infinity();
            for (std::size_t k : corners) {
              const auto& g = by_node[k]->sample.grad_J_tilde;
              const double nrm = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
              if (nrm < best_norm) {
                best_norm = nrm;
                best = k;
              }
            }
            seeds.push_back(best);
          }
    }
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    if (seeds.empty()) rep.log.push_back("no seeds: J_tilde has no interior extremum or sign change on the scan");

    for (std::size_t k : seeds) {
      auto cp = refine_critical_point(eps, scaled(region.node(k), 1.0 / eps), config, reducer, rep.log);
      if (!cp) continue;
      auto dup = std::find_if(rep.points.begin(), rep.points.end(),
                              [&](const CriticalPoint& q) { return within_two_cells(region, q.x, cp->x); });
      if (dup != rep.points.end()) {
        if (cp->grad_norm < dup->grad_norm) std::swap(*dup, *cp);
        rep.log.push_back("duplicate within two cells merged");
        continue;
      }
      rep.points.push_back(std::move(*cp));
    }
    reports.push_back(std::move(rep));
  }
  return reports;
}

std::vector<ConcentrationRow> concentration_study(const ExperimentConfig& config, const Reducer& reducer,
                                                  const std::vector<CriticalPointReport>* reports) {
  std::vector<CriticalPointReport> own;
  if (reports == nullptr) {
    own = find_critical_points(scan_reduced(config, reducer), config, reducer);
    reports = &own;
  }
  if (reports->empty()) throw UsageError("concentration study: no eps values");
  Point3 x0;
  if (config.x0) {
    x0 = *config.x0;
  } else {
    const CriticalPointReport& last = reports->back();
    if (last.plateau) {
      x0 = config.scan.lo;
    } else {
      if (last.points.empty()) throw SolverError("concentration study: no critical point detected");
      const auto best = std::min_element(last.points.begin(), last.points.end(), [](const auto& a, const auto& b) {
        return a.grad_norm < b.grad_norm;
      });
      x0 = critical_point_of_V(reducer.problem().potential, best->x);
    }
  }
  const double p = reducer.problem().p, pa = 2.0 / (p - 1.0);
  std::vector<ConcentrationRow> rows;
  for (const auto& rep : *reports) {
    const double eps = rep.eps;
    const Point3 zc = scaled(x0, 1.0 / eps);
    Point3 z_star = zc;
    if (!rep.plateau) {
      if (rep.points.empty()) throw SolverError("concentration study: no critical point at eps = " + fmt(eps));
      double best = std::numeric_limits<double>::infinity();
      for (const auto& q : rep.points) {
        const double d = std::hypot(q.x[0] - x0[0], q.x[1] - x0[1], q.x[2] - x0[2]);
        if (d < best) {
          best = d;
          z_star = q.z;
        }
      }
    }
    const Ansatz a = reducer.ansatz(eps, z_star);
    const ReductionResult r = reducer.solve_auxiliary(a);
    ScalarField diff = a.U + r.w;
    if (z_star == zc) {
      diff -= reducer.ansatz(eps, zc).U;
    } else {
      const double lam0 = std::sqrt(reducer.problem().potential.value(x0)), amp = std::pow(lam0, pa);
      const ScalarField& ref = reducer.reference_profile();
      const ScalarField target = sample(a.grid, [&](const Point3& x) {
        return amp * tricubic(ref, {lam0 * (x[0] - zc[0]), lam0 * (x[1] - zc[1]), lam0 * (x[2] - zc[2])});
      });
      diff -= target;
    }
    ConcentrationRow row;
    row.eps = eps;
    row.z_star = z_star;
    row.x0 = x0;
    row.distance = norm_h1(diff);
    row.w_norm = r.w_h1_norm;
    rows.push_back(row);
  }
  return rows;
}

std::string concentration_csv(const std::vector<ConcentrationRow>& rows) {
  std::ostringstream out;
  out << "eps,z1,z2,z3,x01,x02,x03,distance,w_norm\n";
  for (const auto& r : rows)
    out << fmt(r.eps) << ',' << fmt(r.z_star[0]) << ',' << fmt(r.z_star[1]) << ',' << fmt(r.z_star[2]) << ','
        << fmt(r.x0[0]) << ',' << fmt(r.x0[1]) << ',' << fmt(r.x0[2]) << ',' << fmt(r.distance) << ',' << fmt(r.w_norm)
        << '\n';
  return out.str();
}

int CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  return it == header.end() ? -1 : static_cast<int>(it - header.begin());
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ',')) out.push_back(item);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  if (!std::getline(in, line)) return t;
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto row = split(line);
    if (row.size() != t.header.size()) throw ConfigError("csv: row width differs from the header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace qslsp
