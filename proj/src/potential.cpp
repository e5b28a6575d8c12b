#include "qslsp/potential.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qslsp/error.hpp"

namespace qslsp {

PotentialSpec PotentialSpec::constant(double c) {
  if (!(c > 0.0)) throw DomainError("potential: (V2) requires inf V > 0, got constant " + std::to_string(c));
  PotentialSpec v;
  v.kind_ = Kind::Constant;
  v.a_ = c;
  return v;
}

PotentialSpec PotentialSpec::bump(double a, double b, Point3 x0, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("potential: bump width must be positive");
  PotentialSpec v;
  v.kind_ = Kind::Bump;
  v.a_ = a;
  v.b_ = b;
  v.x0_ = x0;
  v.sigma_ = sigma;
  if (!(v.infimum() > 0.0)) throw DomainError("potential: (V2) requires inf V > 0 for the bump");
  return v;
}

PotentialSpec PotentialSpec::ring(double a, double b, double rho0, double sigma) {
  if (!(sigma > 0.0) || !(rho0 >= 0.0)) throw ConfigError("potential: ring needs sigma > 0 and rho0 >= 0");
  PotentialSpec v;
  v.kind_ = Kind::Ring;
  v.a_ = a;
  v.b_ = b;
  v.rho0_ = rho0;
  v.sigma_ = sigma;
  if (!(v.infimum() > 0.0)) throw DomainError("potential: (V2) requires inf V > 0 for the ring");
  return v;
}

PotentialSpec PotentialSpec::table(Point3 x0, double dr, std::vector<double> values) {
  if (!(dr > 0.0) || values.size() < 3) throw ConfigError("potential: table needs dr > 0 and at least 3 values");
  PotentialSpec v;
  v.kind_ = Kind::Table;
  v.x0_ = x0;
  v.dr_ = dr;
  v.table_ = std::move(values);
  if (!(v.infimum() > 0.0)) throw DomainError("potential: (V2) requires inf V > 0 for the table");
  // Clamped spline: s'(0) = 0 and s'(end) = 0, so V is C^1 across the cut-off.
  const std::size_t n = v.table_.size();
  const double h = dr;
  std::vector<double> diag(n, 4.0 * h / 6.0), rhs(n), off(n, h / 6.0);
  diag[0] = diag[n - 1] = 2.0 * h / 6.0;
  const auto& y = v.table_;
  rhs[0] = (y[1] - y[0]) / h;
  rhs[n - 1] = -(y[n - 1] - y[n - 2]) / h;
  for (std::size_t i = 1; i + 1 < n; ++i) rhs[i] = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / h;
  std::vector<double> c(n), d(n);
  c[0] = off[0] / diag[0];
  d[0] = rhs[0] / diag[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double den = diag[i] - off[i - 1] * c[i - 1];
    c[i] = off[i] / den;
    d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / den;
  }
  v.second_.assign(n, 0.0);
  v.second_[n - 1] = d[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) v.second_[i] = d[i] - c[i] * v.second_[i + 1];
  return v;
}

PotentialSpec PotentialSpec::parse(const std::string& text) {
  std::istringstream in(text);
  std::string kind;
  in >> kind;
  std::vector<double> args;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      args.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("potential: bad number '" + tok + "'");
    }
  }
  auto need = [&](std::size_t n) {
    if (args.size() != n)
      throw ConfigError("potential: '" + kind + "' takes " + std::to_string(n) + " parameters, got " +
                        std::to_string(args.size()));
  };
  if (kind == "constant") {
    need(1);
    return constant(args[0]);
  }
  if (kind == "bump") {
    need(6);
    return bump(args[0], args[1], {args[2], args[3], args[4]}, args[5]);
  }
  if (kind == "ring") {
    need(4);
    return ring(args[0], args[1], args[2], args[3]);
  }
  if (kind == "table") {
    if (args.size() < 7) throw ConfigError("potential: table needs x y z dr and at least 3 values");
    return table({args[0], args[1], args[2]}, args[3], std::vector<double>(args.begin() + 4, args.end()));
  }
  throw ConfigError("potential: unknown kind '" + kind + "'");
}

std::string PotentialSpec::describe() const {
  std::ostringstream s;
  s.precision(17);
  switch (kind_) {
    case Kind::Constant: s << "constant " << a_; break;
    case Kind::Bump:
      s << "bump " << a_ << ' ' << b_ << ' ' << x0_[0] << ' ' << x0_[1] << ' ' << x0_[2] << ' ' << sigma_;
      break;
    case Kind::Ring: s << "ring " << a_ << ' ' << b_ << ' ' << rho0_ << ' ' << sigma_; break;
    case Kind::Table:
      s << "table " << x0_[0] << ' ' << x0_[1] << ' ' << x0_[2] << ' ' << dr_;
      for (double v : table_) s << ' ' << v;
      break;
  }
  return s.str();
}

double PotentialSpec::infimum() const {
  switch (kind_) {
    case Kind::Constant: return a_;
    case Kind::Bump:
    case Kind::Ring: return std::min(a_, a_ + b_);
    case Kind::Table: return *std::min_element(table_.begin(), table_.end());
  }
  return 0.0;
}

std::array<double, 3> PotentialSpec::table_eval(double r) const {
  const std::size_t n = table_.size();
  const double h = dr_;
  if (r >= h * static_cast<double>(n - 1)) return {table_.back(), 0.0, 0.0};
  const std::size_t i = std::min(static_cast<std::size_t>(r / h), n - 2);
  const double t = r - h * static_cast<double>(i);
  const double A = (h - t) / h, B = t / h;
  const double y0 = table_[i], y1 = table_[i + 1], m0 = second_[i], m1 = second_[i + 1];
  const double v = A * y0 + B * y1 + ((A * A * A - A) * m0 + (B * B * B - B) * m1) * h * h / 6.0;
  const double d = (y1 - y0) / h - (3.0 * A * A - 1.0) * h / 6.0 * m0 + (3.0 * B * B - 1.0) * h / 6.0 * m1;
  const double dd = A * m0 + B * m1;
  return {v, d, dd};
}

double PotentialSpec::value(const Point3& x) const {
  switch (kind_) {
    case Kind::Constant: return a_;
    case Kind::Bump: {
      double q = 0.0;
      for (int i = 0; i < 3; ++i) q += (x[i] - x0_[i]) * (x[i] - x0_[i]);
      return a_ + b_ * std::exp(-q / (sigma_ * sigma_));
    }
    case Kind::Ring: {
      const double rho = std::hypot(x[0], x[1]);
      const double q = ((rho - rho0_) * (rho - rho0_) + x[2] * x[2]) / (sigma_ * sigma_);
      return a_ + b_ * std::exp(-q);
    }
    case Kind::Table: {
      const double r = std::sqrt((x[0] - x0_[0]) * (x[0] - x0_[0]) + (x[1] - x0_[1]) * (x[1] - x0_[1]) +
                                 (x[2] - x0_[2]) * (x[2] - x0_[2]));
      return table_eval(r)[0];
    }
  }
  return 0.0;
}

Point3 PotentialSpec::gradient(const Point3& x) const {
  Point3 g{0.0, 0.0, 0.0};
  const double s2 = sigma_ * sigma_;
  switch (kind_) {
    case Kind::Constant: break;
    case Kind::Bump: {
      double q = 0.0;
      for (int i = 0; i < 3; ++i) q += (x[i] - x0_[i]) * (x[i] - x0_[i]);
      const double e = b_ * std::exp(-q / s2);
      for (int i = 0; i < 3; ++i) g[i] = -2.0 * e * (x[i] - x0_[i]) / s2;
      break;
    }
    case Kind::Ring: {
      const double rho = std::hypot(x[0], x[1]);
      const double e = b_ * std::exp(-((rho - rho0_) * (rho - rho0_) + x[2] * x[2]) / s2);
      const double g_rho = -2.0 * e * (rho - rho0_) / s2;
      if (rho > 0.0) {
        g[0] = g_rho * x[0] / rho;
        g[1] = g_rho * x[1] / rho;
      }
      g[2] = -2.0 * e * x[2] / s2;
      break;
    }
    case Kind::Table: {
      Point3 d{x[0] - x0_[0], x[1] - x0_[1], x[2] - x0_[2]};
      const double r = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
      if (r > 0.0) {
        const double vp = table_eval(r)[1];
        for (int i = 0; i < 3; ++i) g[i] = vp * d[i] / r;
      }
      break;
    }
  }
  return g;
}

Matrix3 PotentialSpec::hessian(const Point3& x) const {
  Matrix3 H{};
  const double s2 = sigma_ * sigma_;
  // radial-type helper: f(r) with n = d / r
  auto radial = [&](const Point3& d, double r, double fp, double fpp, int dims) {
    for (int i = 0; i < dims; ++i)
      for (int j = 0; j < dims; ++j) {
        if (r > 0.0) {
          const double ni = d[i] / r, nj = d[j] / r;
          H[i][j] = fpp * ni * nj + fp / r * ((i == j ? 1.0 : 0.0) - ni * nj);
        } else {
          H[i][j] = i == j ? fpp : 0.0;
        }
      }
  };
  switch (kind_) {
    case Kind::Constant: break;
    case Kind::Bump: {
      Point3 d{x[0] - x0_[0], x[1] - x0_[1], x[2] - x0_[2]};
      const double q = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
      const double e = b_ * std::exp(-q / s2);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          H[i][j] = e * (4.0 * d[i] * d[j] / (s2 * s2) - (i == j ? 2.0 / s2 : 0.0));
      break;
    }
    case Kind::Ring: {
      const double rho = std::hypot(x[0], x[1]);
      const double e = b_ * std::exp(-((rho - rho0_) * (rho - rho0_) + x[2] * x[2]) / s2);
      const double q_r = 2.0 * (rho - rho0_) / s2, q_3 = 2.0 * x[2] / s2, q_2 = 2.0 / s2;
      const double g_r = -e * q_r, g_rr = e * (q_r * q_r - q_2), g_33 = e * (q_3 * q_3 - q_2), g_r3 = e * q_r * q_3;
      radial({x[0], x[1], 0.0}, rho, g_r, g_rr, 2);
      if (rho > 0.0) {
        H[0][2] = H[2][0] = g_r3 * x[0] / rho;
        H[1][2] = H[2][1] = g_r3 * x[1] / rho;
      }
      H[2][2] = g_33;
      break;
    }
    case Kind::Table: {
      Point3 d{x[0] - x0_[0], x[1] - x0_[1], x[2] - x0_[2]};
      const double r = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
      const auto t = table_eval(r);
      radial(d, r, t[1], t[2], 3);
      break;
    }
  }
  return H;
}

}  // namespace qslsp
