#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qslsp/reduction.hpp"

namespace qslsp {

/// Axis-aligned scan region in the physical variable x = eps z, with n[i]
/// nodes along axis i (n[i] = 1 places the single node at lo[i]).
struct ScanRegion {
  Point3 lo{0.0, 0.0, 0.0};
  Point3 hi{0.0, 0.0, 0.0};
  std::array<int, 3> n{1, 1, 1};

  std::size_t size() const;
  Point3 node(std::size_t index) const;
  std::array<int, 3> coords(std::size_t index) const;
  std::size_t index(const std::array<int, 3>& c) const;
  /// Spacing along axis i (zero when n[i] = 1).
  double cell(int i) const;
  int active_axes() const;
};

struct ExperimentConfig {
  ProblemParams problem;
  std::vector<double> eps_list{0.1};  ///< strictly decreasing, each in (0, 0.25]
  ScanRegion scan;
  bool scan_gradients = true;  ///< false: J_tilde only, gradient columns are nan
  int cup_length_plus_one = 1;
  std::optional<Point3> x0;    ///< critical point of V for the concentration study
  ReductionOptions reduction;
  double profile_tol = 1e-10;
  double tol_crit = 1e-7;      ///< |M alpha| at an accepted critical point
  int newton_max_iter = 12;
  std::filesystem::path output_dir = "out";
};

/// `key = value` lines, `#` comments. Every key at most once; unknown keys are
/// rejected. Errors name the offending line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Shoots the profile for config.problem.p and sets up the reduction.
Reducer make_reducer(const ExperimentConfig& config);

struct ScanRow {
  std::size_t node = 0;        ///< index into the scan region
  ReducedSample sample;
  std::string status = "ok";   ///< "ok" or the solver error message
  bool ok() const { return status == "ok"; }
};

struct ScanTable {
  ScanRegion region;
  std::vector<double> eps_list;
  bool gradients = true;
  std::vector<ScanRow> rows;   ///< eps-major, then scan node order
  /// Rows for one eps, in scan node order.
  std::vector<const ScanRow*> rows_for(double eps) const;
};

/// One row per (eps, node). Worker count from QSLSP_THREADS (default 1); the
/// output does not depend on it.
ScanTable scan_reduced(const ExperimentConfig& config, const Reducer& reducer);
std::string scan_csv(const ScanTable& table);

struct CriticalPoint {
  Point3 z{0.0, 0.0, 0.0};
  Point3 x{0.0, 0.0, 0.0};     ///< eps z
  double J_tilde = 0.0;
  double grad_norm = 0.0;      ///< |M alpha|
  double grad_norm_chain = 0.0;  ///< |grad J_tilde| by the moving-grid chain rule
  std::array<double, 3> alpha{};
  std::array<double, 3> hessian_eigenvalues{};
  std::string classification;  ///< max, min, saddle, degenerate or nonsmooth
  /// Relative change of the alpha Jacobian when the difference step doubles:
  /// O(hz^2) where J_tilde is C^2, about 1/2 where its gradient jumps.
  double jacobian_step_change = 0.0;
  double full_residual = 0.0;
  double min_singular_value = 0.0;
  double min_gram_diagonal = 0.0;
  int newton_iterations = 0;
};

struct CriticalPointReport {
  double eps = 0.0;
  bool plateau = false;        ///< J_tilde constant over the scan: no isolated points
  std::vector<CriticalPoint> points;
  std::vector<std::string> log;
  int expected = 0;            ///< config.cup_length_plus_one
  bool passed() const { return plateau || static_cast<int>(points.size()) >= expected; }
};

/// Seeds from the scan, Newton on alpha(z) = 0, 2-cell deduplication and a
/// natural-constraint check of every point. One report per eps of the scan.
std::vector<CriticalPointReport> find_critical_points(const ScanTable& scan, const ExperimentConfig& config,
                                                      const Reducer& reducer);
/// Newton refinement of one seed; nullopt (with a log line) when it fails.
std::optional<CriticalPoint> refine_critical_point(double eps, const Point3& z_seed, const ExperimentConfig& config,
                                                   const Reducer& reducer, std::vector<std::string>& log);

struct ConcentrationRow {
  double eps = 0.0;
  Point3 z_star{0.0, 0.0, 0.0};
  Point3 x0{0.0, 0.0, 0.0};
  double distance = 0.0;       ///< ||u_eps - U_{eps, x0/eps}||_{H1}
  double w_norm = 0.0;
};

/// Distance between the corrected ansatz at the critical point nearest to x0
/// and the profile centred at x0/eps, for every eps in the config. Uses the
/// reports when given, otherwise scans and detects first. Without config.x0
/// the critical point of V nearest to the detected point is used.
std::vector<ConcentrationRow> concentration_study(const ExperimentConfig& config, const Reducer& reducer,
                                                  const std::vector<CriticalPointReport>* reports = nullptr);
std::string concentration_csv(const std::vector<ConcentrationRow>& rows);

/// Parsed CSV (comma separated, first line is the header).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(const std::string& name) const;  ///< -1 when absent
};
CsvTable parse_csv(const std::string& text);

/// Writes reduced_<k>.svg (J_tilde and the leading term over the scan for each
/// eps), expansion.svg (|J_tilde - leading| against eps, log-log) and
/// concentration.svg. Returns the written paths.
std::vector<std::filesystem::path> emit_plots(const std::optional<CsvTable>& scan,
                                              const std::optional<CsvTable>& concentration,
                                              const std::filesystem::path& outdir);

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};
struct LinePlot {
  std::string title, xlabel, ylabel;
  bool logx = false, logy = false;
  std::vector<PlotSeries> series;
};
std::string render_svg(const LinePlot& plot);

/// Values on an nx by ny grid, row-major in y.
struct HeatMap {
  std::string title, xlabel, ylabel;
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  int nx = 0, ny = 0;
  std::vector<double> values;
};
std::string render_svg(const HeatMap& map);

}  // namespace qslsp
