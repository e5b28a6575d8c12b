#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "qslsp/error.hpp"
#include "qslsp/experiments.hpp"
#include "qslsp/field_io.hpp"

using namespace qslsp;
using json = nlohmann::json;

namespace {

constexpr int kOk = 0, kConfig = 2, kSolver = 3, kCheck = 4;

// nan and inf become null
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <std::size_t N>
json arr(const std::array<double, N>& a) {
  json j = json::array();
  for (double v : a) j.push_back(num(v));
  return j;
}

json mat(const Eigen::Matrix3d& m) {
  json j = json::array();
  for (int i = 0; i < 3; ++i) j.push_back({num(m(i, 0)), num(m(i, 1)), num(m(i, 2))});
  return j;
}

Point3 parse_point(const std::string& text) {
  std::stringstream ss(text);
  std::string item;
  std::vector<double> v;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    try {
      v.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw UsageError("not a number in '" + text + "'");
  }
  if (v.size() != 3) throw UsageError("expected three comma-separated values, got '" + text + "'");
  return {v[0], v[1], v[2]};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json sample_json(const ReducedSample& s) {
  return {{"eps", s.eps},
          {"z", arr(s.z)},
          {"J_tilde", num(s.J_tilde)},
          {"leading", num(s.leading)},
          {"leading_continuum", num(s.leading_continuum)},
          {"expansion_error", num(s.expansion_error)},
          {"grad_J_tilde", arr(s.grad_J_tilde)},
          {"grad_J_tilde_fd", arr(s.grad_J_tilde_fd)},
          {"grad_J_tilde_pairing", arr(s.grad_J_tilde_pairing)},
          {"predicted_grad", arr(s.predicted_grad)},
          {"alpha", arr(s.alpha)},
          {"w_norm", num(s.w_norm)},
          {"iterations", s.iterations},
          {"aux_residual", num(s.aux_residual)},
          {"full_residual", num(s.full_residual)},
          {"M", mat(s.M)},
          {"gram", mat(s.gram)},
          {"alpha_jacobian", mat(s.alpha_jacobian)}};
}

json report_json(const CriticalPointReport& r) {
  json pts = json::array();
  for (const auto& c : r.points)
    pts.push_back({{"z", arr(c.z)},
                   {"x", arr(c.x)},
                   {"J_tilde", num(c.J_tilde)},
                   {"grad_norm", num(c.grad_norm)},
                   {"grad_norm_chain", num(c.grad_norm_chain)},
                   {"alpha", arr(c.alpha)},
                   {"hessian_eigenvalues", arr(c.hessian_eigenvalues)},
                   {"classification", c.classification},
                   {"jacobian_step_change", num(c.jacobian_step_change)},
                   {"full_residual", num(c.full_residual)},
                   {"min_singular_value", num(c.min_singular_value)},
                   {"min_gram_diagonal", num(c.min_gram_diagonal)},
                   {"newton_iterations", c.newton_iterations}});
  return {{"eps", r.eps},     {"plateau", r.plateau}, {"expected", r.expected},
          {"found", r.points.size()}, {"passed", r.passed()}, {"points", pts}, {"log", r.log}};
}

int run_profile(double p, double tol, const std::filesystem::path& out) {
  const RadialProfile prof = shoot_ground_state(p, tol);
  std::ostringstream csv;
  csv << "r,U,dU\n";
  char buf[96];
  for (std::size_t j = 0; j < prof.u.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.12e,%.16e,%.16e\n", prof.dr * static_cast<double>(j), prof.u[j], prof.du[j]);
    csv << buf;
  }
  write_text(out, csv.str());
  const ProfileConstants c = profile_constants(prof);
  const json side{{"p", prof.p},
                  {"u0", prof.u0},
                  {"u0_bracket", prof.u0_bracket},
                  {"dr", prof.dr},
                  {"r_reliable", prof.r_reliable},
                  {"tail_A", prof.tail_A},
                  {"max_ode_residual", prof.max_ode_residual},
                  {"C0", c.C0},
                  {"theta", c.theta},
                  {"mu", c.mu},
                  {"l2_sq", c.l2_sq},
                  {"lp1_pow", c.lp1_pow},
                  {"d12_sq", c.d12_sq},
                  {"moment2", c.moment2},
                  {"moment4", c.moment4}};
  std::filesystem::path sidecar = out;
  sidecar.replace_extension(".json");
  write_text(sidecar, side.dump(2) + "\n");
  std::cout << side.dump(2) << "\n";
  return kOk;
}

int run_poisson(double eps, double beta, const std::string& source, const std::string& grid, std::size_t n,
                double extent, double tol, const std::filesystem::path& out) {
  const PoissonParams prm{eps, beta, tol, 50};
  validate(prm);
  auto density = [&](double r) {
    if (source == "gaussian") return std::exp(-r * r);
    throw UsageError("unknown source '" + source + "' (known: gaussian)");
  };
  std::optional<PoissonSolution> sol;
  if (grid == "radial") {
    const RadialGrid g(extent, n);
    sol.emplace(solve_phi_radial_source(sample(g, density), prm));
  } else if (grid == "box") {
    if (n % 2 == 0) throw UsageError("box grids need an odd node count");
    const BoxGrid g(extent, n);
    sol.emplace(solve_phi(sample(g, [&](const Point3& x) { return density(std::hypot(x[0], x[1], x[2])); }), prm));
  } else {
    throw UsageError("unknown grid '" + grid + "' (known: radial, box)");
  }
  if (!out.empty()) write_field_csv(out, sol->phi);
  const json j{{"eps", eps},
               {"beta", beta},
               {"grid", grid},
               {"n", n},
               {"extent", extent},
               {"energy", num(sol->energy_value)},
               {"identity_residual", num(sol->identity_residual)},
               {"optimality", num(sol->optimality)},
               {"iterations", sol->iterations},
               {"degenerate", sol->degenerate},
               {"dirichlet", num(sol->dirichlet)},
               {"quartic", num(sol->quartic)},
               {"coupling", num(sol->coupling)},
               {"phi_max", num(sol->phi.max_abs())}};
  std::cout << j.dump(2) << "\n";
  return kOk;
}

int run_reduce(double eps, const std::string& z, const std::filesystem::path& cfg_path) {
  ExperimentConfig c = cfg_path.empty() ? parse_config("") : load_config(cfg_path);
  const Point3 zp = parse_point(z);
  if (!(eps > 0.0 && eps <= c.reduction.eps_max)) throw ConfigError("eps must lie in (0, 0.25]");
  const Reducer R = make_reducer(c);
  std::cout << sample_json(R.reduced_value(eps, zp)).dump(2) << "\n";
  return kOk;
}

int run_scan(const std::filesystem::path& cfg_path) {
  const ExperimentConfig c = load_config(cfg_path);
  const Reducer R = make_reducer(c);
  const ScanTable t = scan_reduced(c, R);
  const auto path = c.output_dir / "scan.csv";
  write_text(path, scan_csv(t));
  std::size_t failed = 0;
  for (const auto& r : t.rows) failed += !r.ok();
  std::cout << json{{"rows", t.rows.size()}, {"failed_rows", failed}, {"csv", path.string()}}.dump(2) << "\n";
  return kOk;
}

int run_critical(const std::filesystem::path& cfg_path, bool concentrate) {
  const ExperimentConfig c = load_config(cfg_path);
  const Reducer R = make_reducer(c);
  const ScanTable t = scan_reduced(c, R);
  write_text(c.output_dir / "scan.csv", scan_csv(t));
  const auto reports = find_critical_points(t, c, R);
  json out = json::array();
  for (const auto& r : reports) out.push_back(report_json(r));
  write_text(c.output_dir / "critical.json", out.dump(2) + "\n");
  // the expected count is checked at the smallest eps
  bool ok = reports.back().passed();
  if (!concentrate) {
    std::cout << out.dump(2) << "\n";
    if (!ok) std::cerr << "FAILED: fewer critical points than cup_length_plus_one at the smallest eps\n";
    return ok ? kOk : kCheck;
  }
  const auto rows = concentration_study(c, R, &reports);
  write_text(c.output_dir / "concentration.csv", concentration_csv(rows));
  json conc = json::array();
  bool decreasing = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    conc.push_back({{"eps", rows[i].eps}, {"z_star", arr(rows[i].z_star)}, {"x0", arr(rows[i].x0)},
                    {"distance", num(rows[i].distance)}, {"w_norm", num(rows[i].w_norm)}});
    if (i > 0 && !(rows[i].distance < rows[i - 1].distance)) decreasing = false;
  }
  std::cout << json{{"critical", out}, {"concentration", conc}}.dump(2) << "\n";
  // a plateau has distance 0 at every eps
  const bool flat = std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.plateau; });
  if (!decreasing && !flat) {
    std::cerr << "FAILED: concentration distance is not strictly decreasing\n";
    return kCheck;
  }
  return kOk;
}

int run_plots(const std::filesystem::path& dir) {
  std::optional<CsvTable> scan, conc;
  if (std::filesystem::exists(dir / "scan.csv")) scan = parse_csv(read_text(dir / "scan.csv"));
  if (std::filesystem::exists(dir / "concentration.csv")) conc = parse_csv(read_text(dir / "concentration.csv"));
  if (!scan && !conc) throw ConfigError("no scan.csv or concentration.csv in " + dir.string());
  json files = json::array();
  for (const auto& f : emit_plots(scan, conc, dir)) files.push_back(f.string());
  std::cout << files.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semiclassical solutions of a quasilinear Schroedinger-Poisson system"};
  app.require_subcommand(1);

  double p = 3.0, tol = 1e-10;
  std::filesystem::path profile_out = "profile.csv";
  auto* profile = app.add_subcommand("profile", "radial ground state table and constants");
  profile->add_option("--p", p, "nonlinearity exponent in (1, 5)");
  profile->add_option("--tol", tol, "bisection bracket width for U(0)");
  profile->add_option("--out", profile_out, "CSV output; constants go to the .json sidecar");

  double eps = 0.1, beta = 0.0, extent = 16.0, ptol = 1e-8;
  std::string source = "gaussian", grid = "radial";
  std::size_t n = 2048;
  std::filesystem::path phi_out;
  auto* poisson = app.add_subcommand("poisson", "solve the quasilinear Poisson equation for a fixed source");
  poisson->add_option("--eps", eps)->required();
  poisson->add_option("--beta", beta);
  poisson->add_option("--source", source, "gaussian: exp(-|x|^2)");
  poisson->add_option("--grid", grid, "radial or box");
  poisson->add_option("--n", n, "nodes (radial) or nodes per axis (box)");
  poisson->add_option("--extent", extent, "r_max (radial) or half-width (box)");
  poisson->add_option("--tol", ptol, "relative first-order optimality");
  poisson->add_option("--out", phi_out, "phi as CSV");

  double reps = 0.1;
  std::string z;
  std::filesystem::path reduce_cfg;
  auto* reduce = app.add_subcommand("reduce", "reduced functional and its gradient at one point");
  reduce->add_option("--eps", reps)->required();
  reduce->add_option("--z", z, "z1,z2,z3")->required();
  reduce->add_option("--config", reduce_cfg);

  std::filesystem::path cfg;
  auto* scan = app.add_subcommand("scan", "J_tilde over the scan region, written to <output>/scan.csv");
  scan->add_option("--config", cfg)->required();
  auto* critical = app.add_subcommand("critical", "critical points of J_tilde");
  critical->add_option("--config", cfg)->required();
  auto* concentrate = app.add_subcommand("concentrate", "concentration distances at the critical points");
  concentrate->add_option("--config", cfg)->required();
  std::filesystem::path plot_dir;
  auto* plots = app.add_subcommand("plots", "SVG plots from scan.csv and concentration.csv");
  plots->add_option("--in", plot_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*profile) return run_profile(p, tol, profile_out);
    if (*poisson) return run_poisson(eps, beta, source, grid, n, extent, ptol, phi_out);
    if (*reduce) return run_reduce(reps, z, reduce_cfg);
    if (*scan) return run_scan(cfg);
    if (*critical) return run_critical(cfg, false);
    if (*concentrate) return run_critical(cfg, true);
    if (*plots) return run_plots(plot_dir);
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kSolver;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfig;
  }
  return kOk;
}
