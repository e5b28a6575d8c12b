#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "qslsp/error.hpp"
#include "qslsp/experiments.hpp"

using namespace qslsp;

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const RadialProfile& cubic_profile() {
  static const RadialProfile P = shoot_ground_state(3.0, 1e-10);
  return P;
}

ExperimentConfig small_config(const std::string& extra) {
  return parse_config("n = 61\n" + extra);
}

}  // namespace

TEST_CASE("config defaults and parsing") {
  const ExperimentConfig c = parse_config("# only comments\n\n");
  CHECK(c.eps_list == std::vector<double>{0.1});
  CHECK(c.problem.p == 3.0);
  CHECK(c.reduction.n == 63);
  CHECK(c.reduction.half_width == 6.7);
  CHECK(c.scan.size() == 1);
  CHECK_FALSE(c.x0.has_value());

  const ExperimentConfig d = parse_config(
      "eps = 0.2, 0.1, 0.05  # decreasing\n"
      "beta = 0.5\n"
      "potential = bump 1 0.5 0.5 0 0 1\n"
      "scan_lo = -0.5, -1, 0\n"
      "scan_hi = 1.5, 1, 7\n"
      "scan_n = 5, 5, 1\n"
      "x0 = 0.5, 0, 0\n"
      "cup_length_plus_one = 2\n"
      "output = results\n");
  CHECK(d.eps_list == std::vector<double>{0.2, 0.1, 0.05});
  CHECK(d.problem.beta == 0.5);
  CHECK(d.problem.potential.kind() == PotentialSpec::Kind::Bump);
  CHECK(d.scan.size() == 25);
  CHECK(d.scan.hi[2] == 0.0);  // single node sits at lo
  CHECK(d.x0.has_value());
  CHECK(d.cup_length_plus_one == 2);
  CHECK(d.output_dir == "results");
}

TEST_CASE("config errors name the line") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("beta = 1\nbeta = 2\n").find("line 2") != std::string::npos);
  CHECK(message("\nfoo = 1\n").find("line 2: unknown key") != std::string::npos);
  CHECK(message("beta = x\n").find("line 1") != std::string::npos);
  CHECK(message("beta\n").find("line 1") != std::string::npos);
  CHECK(message("beta =\n").find("missing value") != std::string::npos);
  CHECK_THROWS_AS(parse_config("eps = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("eps = 0.1, 0.2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("n = 64\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("potential = bump 1 0.5 0 0 0\n"), ConfigError);
  // V must stay positive on the scan region
  CHECK_THROWS_AS(parse_config("potential = table 0 0 0 1 1 -1\nscan_lo = 0,0,0\nscan_hi = 3,0,0\nscan_n = 4,1,1\n"),
                  ConfigError);
}

TEST_CASE("scan region indexing") {
  ScanRegion r;
  r.lo = {-1.0, 0.0, 2.0};
  r.hi = {1.0, 3.0, 2.0};
  r.n = {3, 4, 1};
  CHECK(r.size() == 12);
  CHECK(r.active_axes() == 2);
  CHECK(r.cell(0) == doctest::Approx(1.0));
  CHECK(r.cell(2) == 0.0);
  for (std::size_t k = 0; k < r.size(); ++k) CHECK(r.index(r.coords(k)) == k);
  const Point3 x = r.node(r.index({2, 1, 0}));
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(1.0));
  CHECK(x[2] == 2.0);
}

TEST_CASE("scan output does not depend on the thread count; constant V is a plateau") {
  const ExperimentConfig c = small_config(
      "potential = constant 1.2\ncoupling = false\neps = 0.2, 0.1\n"
      "scan_lo = 0, 0, 0\nscan_hi = 1, 1, 0\nscan_n = 2, 2, 1\n");
  const Reducer R(cubic_profile(), c.problem, c.reduction);
  setenv("QSLSP_THREADS", "1", 1);
  const std::string one = scan_csv(scan_reduced(c, R));
  setenv("QSLSP_THREADS", "2", 1);
  const ScanTable t = scan_reduced(c, R);
  unsetenv("QSLSP_THREADS");
  CHECK(scan_csv(t) == one);
  CHECK(t.rows.size() == 8);
  for (const auto& row : t.rows) CHECK(row.ok());
  const CsvTable parsed = parse_csv(one);
  CHECK(parsed.rows.size() == 8);
  CHECK(parsed.column("J_tilde") == 4);
  CHECK(parsed.column("status") == 15);

  const auto reports = find_critical_points(t, c, R);
  REQUIRE(reports.size() == 2);
  for (const auto& rep : reports) {
    CHECK(rep.plateau);
    CHECK(rep.points.empty());
    CHECK(rep.passed());
  }
}

TEST_CASE("bump: detection, classification and concentration") {
  const ExperimentConfig c = small_config(
      "potential = bump 1 0.5 0.5 0 0 1\ncoupling = false\neps = 0.1\n"
      "scan_lo = 0, 0, 0\nscan_hi = 1.2, 0, 0\nscan_n = 4, 1, 1\nscan_gradients = false\n"
      "x0 = 0.5, 0, 0\n");
  const Reducer R(cubic_profile(), c.problem, c.reduction);
  const ScanTable t = scan_reduced(c, R);
  const auto reports = find_critical_points(t, c, R);
  REQUIRE(reports.size() == 1);
  const auto& rep = reports[0];
  CHECK_FALSE(rep.plateau);
  REQUIRE(rep.points.size() == 1);
  const CriticalPoint& cp = rep.points[0];
  CHECK(cp.grad_norm <= c.tol_crit);
  CHECK(std::abs(cp.x[0] - 0.5) <= 1e-2);
  CHECK(std::abs(cp.x[1]) <= 1e-8);
  CHECK(cp.classification == "max");
  CHECK(cp.jacobian_step_change <= 1e-3);
  CHECK(cp.full_residual <= 1e-6);
  CHECK(cp.min_singular_value >= 0.5 * cp.min_gram_diagonal);

  const auto rows = concentration_study(c, R, &reports);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].distance <= 0.1);
  CHECK(rows[0].x0[0] == 0.5);
}

TEST_CASE("ring: the axis is a kink of the reduced functional") {
  const ExperimentConfig c = small_config("potential = ring 1 0.5 1 1\ncoupling = false\neps = 0.1\n");
  const Reducer R(cubic_profile(), c.problem, c.reduction);
  // lambda(z) = V(eps z)^{1/2} has a conical point at rho = 0: alpha jumps there
  std::vector<std::string> log;
  const auto cp = refine_critical_point(0.1, {0.0, 0.0, 0.0}, c, R, log);
  REQUIRE(cp.has_value());
  CHECK(cp->newton_iterations == 0);
  CHECK(cp->jacobian_step_change > 0.1);
  CHECK(cp->classification == "nonsmooth");
}

TEST_CASE("svg rendering is deterministic and matches the fixture") {
  LinePlot p;
  p.title = "fixture";
  p.xlabel = "x";
  p.ylabel = "y";
  p.series = {{"a", {0.0, 1.0, 2.0}, {1.0, 0.5, 2.0}}, {"b", {0.0, 2.0}, {0.0, 1.0}}};
  const std::string svg = render_svg(p);
  CHECK(svg == render_svg(p));
  const std::filesystem::path golden = std::filesystem::path(QSLSP_TEST_DATA) / "line_plot.svg";
  CHECK(svg == read_file(golden));

  // two points give one polyline, an empty plot gives bare axes
  LinePlot two;
  two.series = {{"s", {0.0, 1.0}, {1.0, 2.0}}};
  const std::string s2 = render_svg(two);
  CHECK(s2.find("<polyline") != std::string::npos);
  CHECK(s2.find("<polyline", s2.find("<polyline") + 1) == std::string::npos);
  LinePlot empty;
  const std::string s0 = render_svg(empty);
  CHECK(s0.find("<polyline") == std::string::npos);
  CHECK(s0.find("<rect") != std::string::npos);

  HeatMap m;
  m.nx = 2;
  m.ny = 2;
  m.values = {0.0, 1.0, 2.0, std::nan("")};
  const std::string h = render_svg(m);
  CHECK(h.find("#808080") != std::string::npos);
}

TEST_CASE("plots from csv tables") {
  const std::string scan =
      "eps,z1,z2,z3,J_tilde,leading,expansion_error,g1,g2,g3,pg1,pg2,pg3,w_norm,iters,status\n"
      "0.2,0,0,0,1,1.1,0.1,nan,nan,nan,nan,nan,nan,0.01,3,ok\n"
      "0.2,5,0,0,2,2.1,0.1,nan,nan,nan,nan,nan,nan,0.01,3,ok\n"
      "0.1,0,0,0,1,1.02,0.02,nan,nan,nan,nan,nan,nan,0.01,3,ok\n"
      "0.1,10,0,0,2,2.02,0.02,nan,nan,nan,nan,nan,nan,0.01,3,ok\n";
  const std::string conc = "eps,z1,z2,z3,x01,x02,x03,distance,w_norm\n0.2,0,0,0,0,0,0,0.04,0.03\n0.1,0,0,0,0,0,0,0.01,0.008\n";
  const auto dir = std::filesystem::temp_directory_path() / "qslsp_plot_test";
  std::filesystem::remove_all(dir);
  const auto files = emit_plots(parse_csv(scan), parse_csv(conc), dir);
  CHECK(files.size() == 4);
  for (const auto* name : {"reduced_0.svg", "reduced_1.svg", "expansion.svg", "concentration.svg"})
    CHECK(std::filesystem::exists(dir / name));
  CHECK_THROWS_AS(emit_plots(parse_csv("eps,z1\n0.1,0\n"), std::nullopt, dir), ConfigError);
  std::filesystem::remove_all(dir);
}
