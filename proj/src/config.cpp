#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "qslsp/error.hpp"
#include "qslsp/experiments.hpp"

namespace qslsp {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& text, int line) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size())
    throw ConfigError("line " + std::to_string(line) + ": not a number: '" + t + "'");
  return v;
}

int to_int(const std::string& text, int line) {
  const std::string t = trim(text);
  int v = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size())
    throw ConfigError("line " + std::to_string(line) + ": not an integer: '" + t + "'");
  return v;
}

bool to_bool(const std::string& text, int line) {
  const std::string t = trim(text);
  if (t == "true" || t == "yes" || t == "1") return true;
  if (t == "false" || t == "no" || t == "0") return false;
  throw ConfigError("line " + std::to_string(line) + ": not a boolean: '" + t + "'");
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<double> to_list(const std::string& text, int line) {
  std::vector<double> out;
  for (const auto& s : split(text)) out.push_back(to_double(s, line));
  return out;
}

Point3 to_point(const std::string& text, int line) {
  const auto v = to_list(text, line);
  if (v.size() != 3) throw ConfigError("line " + std::to_string(line) + ": expected three comma-separated values");
  return {v[0], v[1], v[2]};
}

void check_config(ExperimentConfig& c) {
  if (c.eps_list.empty()) throw ConfigError("eps: at least one value is required");
  for (std::size_t i = 0; i < c.eps_list.size(); ++i) {
    const double e = c.eps_list[i];
    if (!(e > 0.0 && e <= 0.25)) throw ConfigError("eps: every value must lie in (0, 0.25]");
    if (i > 0 && !(e < c.eps_list[i - 1])) throw ConfigError("eps: values must be strictly decreasing");
  }
  if (c.eps_list.front() > c.reduction.eps_max) throw ConfigError("eps: above the admissible maximum");
  c.problem.eps = c.eps_list.front();
  validate(c.problem);
  for (int i = 0; i < 3; ++i) {
    if (c.scan.n[i] < 1) throw ConfigError("scan_n: every count must be >= 1");
    if (c.scan.n[i] == 1) c.scan.hi[i] = c.scan.lo[i];
    if (c.scan.hi[i] < c.scan.lo[i]) throw ConfigError("scan_hi must not lie below scan_lo");
  }
  double vmin = c.problem.potential.infimum();
  for (std::size_t k = 0; k < c.scan.size(); ++k) vmin = std::min(vmin, c.problem.potential.value(c.scan.node(k)));
  if (!(vmin > 0.0)) throw ConfigError("potential must be positive on the scan region");
  if (c.cup_length_plus_one < 0) throw ConfigError("cup_length_plus_one must be >= 0");
  if (!(c.tol_crit > 0.0)) throw ConfigError("tol_crit must be positive");
  if (c.newton_max_iter < 1) throw ConfigError("newton_max_iter must be >= 1");
  if (c.reduction.n < 9 || c.reduction.n % 2 == 0) throw ConfigError("n must be odd and >= 9");
  if (!(c.reduction.half_width > 0.0)) throw ConfigError("half_width must be positive");
  if (!(c.reduction.tol_aux > 0.0) || c.reduction.max_iter < 1 || !(c.reduction.hz > 0.0))
    throw ConfigError("invalid reduction tolerances");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  using Setter = std::function<void(const std::string&, int)>;
  const std::map<std::string, Setter> keys{
      {"eps", [&](const std::string& v, int l) { c.eps_list = to_list(v, l); }},
      {"beta", [&](const std::string& v, int l) { c.problem.beta = to_double(v, l); }},
      {"p", [&](const std::string& v, int l) { c.problem.p = to_double(v, l); }},
      {"potential",
       [&](const std::string& v, int l) {
         try {
           c.problem.potential = PotentialSpec::parse(v);
         } catch (const Error& e) {
           throw ConfigError("line " + std::to_string(l) + ": " + e.what());
         }
       }},
      {"coupling", [&](const std::string& v, int l) { c.problem.coupling = to_bool(v, l); }},
      {"poisson_tol", [&](const std::string& v, int l) { c.problem.poisson_tol = to_double(v, l); }},
      {"poisson_max_iter", [&](const std::string& v, int l) { c.problem.poisson_max_iter = to_int(v, l); }},
      {"scan_lo", [&](const std::string& v, int l) { c.scan.lo = to_point(v, l); }},
      {"scan_hi", [&](const std::string& v, int l) { c.scan.hi = to_point(v, l); }},
      {"scan_n",
       [&](const std::string& v, int l) {
         const auto parts = split(v);
         if (parts.size() != 3) throw ConfigError("line " + std::to_string(l) + ": expected three counts");
         for (int i = 0; i < 3; ++i) c.scan.n[i] = to_int(parts[i], l);
       }},
      {"scan_gradients", [&](const std::string& v, int l) { c.scan_gradients = to_bool(v, l); }},
      {"cup_length_plus_one", [&](const std::string& v, int l) { c.cup_length_plus_one = to_int(v, l); }},
      {"x0", [&](const std::string& v, int l) { c.x0 = to_point(v, l); }},
      {"half_width", [&](const std::string& v, int l) { c.reduction.half_width = to_double(v, l); }},
      {"n",
       [&](const std::string& v, int l) {
         const int n = to_int(v, l);
         if (n < 1) throw ConfigError("line " + std::to_string(l) + ": n must be positive");
         c.reduction.n = static_cast<std::size_t>(n);
       }},
      {"discrete_profile", [&](const std::string& v, int l) { c.reduction.discrete_profile = to_bool(v, l); }},
      {"tol_aux", [&](const std::string& v, int l) { c.reduction.tol_aux = to_double(v, l); }},
      {"max_iter", [&](const std::string& v, int l) { c.reduction.max_iter = to_int(v, l); }},
      {"hz", [&](const std::string& v, int l) { c.reduction.hz = to_double(v, l); }},
      {"tol_crit", [&](const std::string& v, int l) { c.tol_crit = to_double(v, l); }},
      {"newton_max_iter", [&](const std::string& v, int l) { c.newton_max_iter = to_int(v, l); }},
      {"profile_tol", [&](const std::string& v, int l) { c.profile_tol = to_double(v, l); }},
      {"output", [&](const std::string& v, int) { c.output_dir = trim(v); }},
  };
  std::set<std::string> seen;
  std::stringstream ss(text);
  std::string raw;
  for (int line = 1; std::getline(ss, raw); ++line) {
    const std::string body = trim(raw.substr(0, raw.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line) + ": expected key = value");
    const std::string key = trim(body.substr(0, eq)), value = trim(body.substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError("line " + std::to_string(line) + ": unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError("line " + std::to_string(line) + ": missing value for '" + key + "'");
    it->second(value, line);
  }
  check_config(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace qslsp
