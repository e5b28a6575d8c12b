#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "qslsp/error.hpp"
#include "qslsp/experiments.hpp"

namespace qslsp {
namespace {

constexpr double kWidth = 640.0, kHeight = 420.0;
constexpr double kLeft = 80.0, kRight = 150.0, kTop = 40.0, kBottom = 60.0;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;
  double map(double v) const {
    const double t = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
    return t;
  }
  double value(double t) const { return log ? std::pow(10.0, lo + t * (hi - lo)) : lo + t * (hi - lo); }
};

bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0.0); }

Axis make_axis(const std::vector<double>& values, bool log) {
  Axis a;
  a.log = log;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    if (!usable(v, log)) continue;
    const double t = log ? std::log10(v) : v;
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  if (!std::isfinite(lo)) return a;
  if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) {
    const double pad = log ? 0.5 : std::max(0.5 * std::abs(hi), 0.5);
    lo -= pad;
    hi += pad;
  } else if (!log) {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  a.lo = lo;
  a.hi = hi;
  return a;
}

void header(std::ostringstream& out, const std::string& title, const std::string& xlabel, const std::string& ylabel) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << px(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
      << "</text>\n";
  out << "<text x=\"" << px(kLeft + (kWidth - kLeft - kRight) / 2) << "\" y=\"" << px(kHeight - 15)
      << "\" text-anchor=\"middle\">" << escape(xlabel) << "</text>\n";
  out << "<text x=\"18\" y=\"" << px(kTop + (kHeight - kTop - kBottom) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << px(kTop + (kHeight - kTop - kBottom) / 2) << ")\">" << escape(ylabel) << "</text>\n";
}

void frame(std::ostringstream& out, const Axis& ax, const Axis& ay) {
  const double w = kWidth - kLeft - kRight, h = kHeight - kTop - kBottom;
  out << "<rect x=\"" << px(kLeft) << "\" y=\"" << px(kTop) << "\" width=\"" << px(w) << "\" height=\"" << px(h)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double t = k / 4.0;
    const double x = kLeft + t * w, y = kTop + (1.0 - t) * h;
    out << "<line x1=\"" << px(x) << "\" y1=\"" << px(kTop + h) << "\" x2=\"" << px(x) << "\" y2=\"" << px(kTop + h + 5)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px(x) << "\" y=\"" << px(kTop + h + 18) << "\" text-anchor=\"middle\">" << num(ax.value(t))
        << "</text>\n";
    out << "<line x1=\"" << px(kLeft - 5) << "\" y1=\"" << px(y) << "\" x2=\"" << px(kLeft) << "\" y2=\"" << px(y)
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px(kLeft - 8) << "\" y=\"" << px(y + 4) << "\" text-anchor=\"end\">" << num(ay.value(t))
        << "</text>\n";
  }
}

// piecewise-linear blue-white-red ramp on t in [0, 1]
std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  double r, g, b;
  if (t < 0.5) {
    const double s = t / 0.5;
    r = 0.23 + s * (0.97 - 0.23);
    g = 0.30 + s * (0.97 - 0.30);
    b = 0.75 + s * (0.97 - 0.75);
  } else {
    const double s = (t - 0.5) / 0.5;
    r = 0.97 + s * (0.71 - 0.97);
    g = 0.97 + s * (0.02 - 0.97);
    b = 0.97 + s * (0.15 - 0.97);
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(255 * r)),
                static_cast<int>(std::lround(255 * g)), static_cast<int>(std::lround(255 * b)));
  return buf;
}

double cell_value(const std::vector<std::string>& row, int col) {
  if (col < 0 || col >= static_cast<int>(row.size())) return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(row[col], &used);
    return used == row[col].size() ? v : std::numeric_limits<double>::quiet_NaN();
  } catch (const std::exception&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

int require_column(const CsvTable& t, const std::string& name) {
  const int c = t.column(name);
  if (c < 0) throw ConfigError("csv: missing column '" + name + "'");
  return c;
}

// keys for grouping coordinates that went through x = eps z and back
double snap(double v) { return std::round(v * 1e9) / 1e9; }

void write_file(const std::filesystem::path& path, const std::string& text, std::vector<std::filesystem::path>& out) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << text;
  out.push_back(path);
}

}  // namespace

std::string render_svg(const LinePlot& plot) {
  std::vector<double> xs, ys;
  for (const auto& s : plot.series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
  }
  const Axis ax = make_axis(xs, plot.logx), ay = make_axis(ys, plot.logy);
  std::ostringstream out;
  header(out, plot.title, plot.xlabel, plot.ylabel);
  frame(out, ax, ay);
  const double w = kWidth - kLeft - kRight, h = kHeight - kTop - kBottom;
  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* color = kColors[k % std::size(kColors)];
    std::ostringstream pts;
    int count = 0;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], plot.logx) || !usable(s.y[i], plot.logy)) continue;
      pts << (count++ ? " " : "") << px(kLeft + ax.map(s.x[i]) * w) << ',' << px(kTop + (1.0 - ay.map(s.y[i])) * h);
    }
    if (count >= 2)
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << pts.str() << "\"/>\n";
    std::istringstream each(pts.str());
    std::string p;
    while (each >> p) {
      const auto comma = p.find(',');
      out << "<circle cx=\"" << p.substr(0, comma) << "\" cy=\"" << p.substr(comma + 1) << "\" r=\"2.5\" fill=\"" << color
          << "\"/>\n";
    }
    const double ly = kTop + 10 + 18 * static_cast<double>(k);
    out << "<line x1=\"" << px(kWidth - kRight + 10) << "\" y1=\"" << px(ly) << "\" x2=\"" << px(kWidth - kRight + 30)
        << "\" y2=\"" << px(ly) << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    out << "<text x=\"" << px(kWidth - kRight + 35) << "\" y=\"" << px(ly + 4) << "\">" << escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_svg(const HeatMap& map) {
  Axis ax, ay;
  ax.lo = map.x0;
  ax.hi = map.x1 > map.x0 ? map.x1 : map.x0 + 1.0;
  ay.lo = map.y0;
  ay.hi = map.y1 > map.y0 ? map.y1 : map.y0 + 1.0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : map.values)
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  std::ostringstream out;
  header(out, map.title, map.xlabel, map.ylabel);
  const double w = kWidth - kLeft - kRight, h = kHeight - kTop - kBottom;
  if (map.nx > 0 && map.ny > 0 && map.values.size() == static_cast<std::size_t>(map.nx) * map.ny) {
    const double cw = w / map.nx, ch = h / map.ny;
    for (int j = 0; j < map.ny; ++j)
      for (int i = 0; i < map.nx; ++i) {
        const double v = map.values[static_cast<std::size_t>(j) * map.nx + i];
        const std::string fill = std::isfinite(v) ? ramp(hi > lo ? (v - lo) / (hi - lo) : 0.5) : "#808080";
        out << "<rect x=\"" << px(kLeft + i * cw) << "\" y=\"" << px(kTop + (map.ny - 1 - j) * ch) << "\" width=\""
            << px(cw) << "\" height=\"" << px(ch) << "\" fill=\"" << fill << "\"/>\n";
      }
    // cell centres sit at the scan nodes
    if (map.nx > 1) {
      const double d = (map.x1 - map.x0) / (map.nx - 1);
      ax.lo = map.x0 - 0.5 * d;
      ax.hi = map.x1 + 0.5 * d;
    }
    if (map.ny > 1) {
      const double d = (map.y1 - map.y0) / (map.ny - 1);
      ay.lo = map.y0 - 0.5 * d;
      ay.hi = map.y1 + 0.5 * d;
    }
  }
  frame(out, ax, ay);
  if (std::isfinite(lo)) {
    const double bx = kWidth - kRight + 20, bh = h;
    for (int k = 0; k < 32; ++k) {
      const double t0 = k / 32.0;
      out << "<rect x=\"" << px(bx) << "\" y=\"" << px(kTop + (1.0 - t0 - 1.0 / 32) * bh) << "\" width=\"16\" height=\""
          << px(bh / 32 + 0.5) << "\" fill=\"" << ramp(t0 + 0.5 / 32) << "\"/>\n";
    }
    out << "<text x=\"" << px(bx + 20) << "\" y=\"" << px(kTop + 10) << "\">" << num(hi) << "</text>\n";
    out << "<text x=\"" << px(bx + 20) << "\" y=\"" << px(kTop + bh) << "\">" << num(lo) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::vector<std::filesystem::path> emit_plots(const std::optional<CsvTable>& scan,
                                              const std::optional<CsvTable>& concentration,
                                              const std::filesystem::path& outdir) {
  std::filesystem::create_directories(outdir);
  std::vector<std::filesystem::path> written;
  if (scan) {
    const CsvTable& t = *scan;
    const int ce = require_column(t, "eps"), cj = require_column(t, "J_tilde"), cl = require_column(t, "leading"),
              cx = require_column(t, "expansion_error");
    const int cz[3] = {require_column(t, "z1"), require_column(t, "z2"), require_column(t, "z3")};
    std::vector<double> eps_order;
    std::map<double, std::vector<std::array<double, 6>>> groups;  // x1 x2 x3 J leading error
    for (const auto& row : t.rows) {
      const double eps = cell_value(row, ce);
      if (!groups.count(eps)) eps_order.push_back(eps);
      std::array<double, 6> r{};
      for (int i = 0; i < 3; ++i) r[i] = snap(eps * cell_value(row, cz[i]));
      r[3] = cell_value(row, cj);
      r[4] = cell_value(row, cl);
      r[5] = cell_value(row, cx);
      groups[eps].push_back(r);
    }
    PlotSeries expansion{"max |J_tilde - leading|", {}, {}}, reference{"eps^2 reference", {}, {}};
    for (std::size_t k = 0; k < eps_order.size(); ++k) {
      const double eps = eps_order[k];
      const auto& rows = groups[eps];
      std::array<std::vector<double>, 3> axes;
      for (int i = 0; i < 3; ++i) {
        std::set<double> s;
        for (const auto& r : rows) s.insert(r[i]);
        axes[i].assign(s.begin(), s.end());
      }
      std::vector<int> active;
      for (int i = 0; i < 3; ++i)
        if (axes[i].size() > 1) active.push_back(i);
      const std::string name = "reduced_" + std::to_string(k) + ".svg";
      const std::string title = "reduced functional, eps = " + num(eps);
      if (active.size() >= 2) {
        const int a = active[0], b = active[1];
        // further active axes are fixed at their middle value
        std::array<double, 3> fixed{};
        for (int i = 0; i < 3; ++i) fixed[i] = axes[i][axes[i].size() / 2];
        HeatMap m;
        m.title = title;
        m.xlabel = "x" + std::to_string(a + 1);
        m.ylabel = "x" + std::to_string(b + 1);
        m.nx = static_cast<int>(axes[a].size());
        m.ny = static_cast<int>(axes[b].size());
        m.x0 = axes[a].front();
        m.x1 = axes[a].back();
        m.y0 = axes[b].front();
        m.y1 = axes[b].back();
        m.values.assign(static_cast<std::size_t>(m.nx) * m.ny, std::numeric_limits<double>::quiet_NaN());
        for (const auto& r : rows) {
          bool on_slice = true;
          for (int i : active)
            if (i != a && i != b && r[i] != fixed[i]) on_slice = false;
          if (!on_slice) continue;
          const auto ia = std::lower_bound(axes[a].begin(), axes[a].end(), r[a]) - axes[a].begin();
          const auto ib = std::lower_bound(axes[b].begin(), axes[b].end(), r[b]) - axes[b].begin();
          m.values[static_cast<std::size_t>(ib) * m.nx + ia] = r[3];
        }
        write_file(outdir / name, render_svg(m), written);
      } else {
        const int a = active.empty() ? 0 : active[0];
        LinePlot p;
        p.title = title;
        p.xlabel = "x" + std::to_string(a + 1);
        p.ylabel = "J_tilde";
        PlotSeries sj{"J_tilde", {}, {}}, sl{"leading term", {}, {}};
        auto sorted = rows;
        std::sort(sorted.begin(), sorted.end(), [&](const auto& u, const auto& v) { return u[a] < v[a]; });
        for (const auto& r : sorted) {
          sj.x.push_back(r[a]);
          sj.y.push_back(r[3]);
          sl.x.push_back(r[a]);
          sl.y.push_back(r[4]);
        }
        p.series = {sj, sl};
        write_file(outdir / name, render_svg(p), written);
      }
      double worst = std::numeric_limits<double>::quiet_NaN();
      for (const auto& r : rows)
        if (std::isfinite(r[5]) && !(worst >= r[5])) worst = r[5];
      expansion.x.push_back(eps);
      expansion.y.push_back(worst);
    }
    for (std::size_t i = 0; i < expansion.x.size(); ++i)
      if (std::isfinite(expansion.y[i]) && expansion.y[i] > 0.0) {
        const double c = expansion.y[i] / (expansion.x[i] * expansion.x[i]);
        for (double e : expansion.x) {
          reference.x.push_back(e);
          reference.y.push_back(c * e * e);
        }
        break;
      }
    LinePlot p;
    p.title = "expansion error";
    p.xlabel = "eps";
    p.ylabel = "|J_tilde - leading|";
    p.logx = p.logy = true;
    p.series = {expansion, reference};
    write_file(outdir / "expansion.svg", render_svg(p), written);
  }
  if (concentration) {
    const CsvTable& t = *concentration;
    const int ce = require_column(t, "eps"), cd = require_column(t, "distance"), cw = require_column(t, "w_norm");
    PlotSeries d{"H1 distance", {}, {}}, w{"||w||", {}, {}};
    for (const auto& row : t.rows) {
      d.x.push_back(cell_value(row, ce));
      d.y.push_back(cell_value(row, cd));
      w.x.push_back(cell_value(row, ce));
      w.y.push_back(cell_value(row, cw));
    }
    LinePlot p;
    p.title = "concentration";
    p.xlabel = "eps";
    p.ylabel = "H1 norm";
    p.logx = p.logy = true;
    p.series = {d, w};
    write_file(outdir / "concentration.svg", render_svg(p), written);
  }
  return written;
}

}  // namespace qslsp
