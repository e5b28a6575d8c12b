#include "qslsp/operators.hpp"

#include <cmath>
#include <numbers>

#include "qslsp/error.hpp"
#include "qslsp/sine_solver.hpp"

namespace qslsp {
namespace {

// Copy of a box field with a layer of zero ghosts: node (i,j,k) sits at
// (i+1,j+1,k+1) of an (n+2)^3 array.
std::vector<double> padded(const BoxGrid& g, std::span<const double> v) {
  const std::size_t n = g.n(), m = n + 2;
  std::vector<double> p(m * m * m, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double* src = v.data() + g.index(i, j, 0);
      double* dst = p.data() + ((i + 1) * m + (j + 1)) * m + 1;
      std::copy(src, src + n, dst);
    }
  return p;
}

void unpad_into(const BoxGrid& g, const std::vector<double>& p, std::span<double> v) {
  const std::size_t n = g.n(), m = n + 2;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double* src = p.data() + ((i + 1) * m + (j + 1)) * m + 1;
      std::copy(src, src + n, v.data() + g.index(i, j, 0));
    }
}

// Cell (I,J,K), I in 0..n, has padded corners (I+a, J+b, K+c), a,b,c in {0,1}.
struct CellCorners {
  std::size_t m;
  std::size_t base(std::size_t I, std::size_t J, std::size_t K) const { return (I * m + J) * m + K; }
  std::size_t dx() const { return m * m; }
  std::size_t dy() const { return m; }
};

void gather_cell_gradient(const BoxGrid& g, const std::vector<double>& p, double* gx, double* gy,
                          double* gz) {
  const std::size_t n = g.n(), m = n + 2, nc = n + 1;
  const double s = 0.25 / g.spacing();
  const CellCorners cc{m};
  const std::size_t sx = cc.dx(), sy = cc.dy();
  std::size_t c = 0;
  for (std::size_t I = 0; I < nc; ++I)
    for (std::size_t J = 0; J < nc; ++J)
      for (std::size_t K = 0; K < nc; ++K, ++c) {
        const double* q = p.data() + cc.base(I, J, K);
        const double f000 = q[0], f001 = q[1], f010 = q[sy], f011 = q[sy + 1];
        const double f100 = q[sx], f101 = q[sx + 1], f110 = q[sx + sy], f111 = q[sx + sy + 1];
        gx[c] = s * ((f100 + f101 + f110 + f111) - (f000 + f001 + f010 + f011));
        gy[c] = s * ((f010 + f011 + f110 + f111) - (f000 + f001 + f100 + f101));
        gz[c] = s * ((f001 + f011 + f101 + f111) - (f000 + f010 + f100 + f110));
      }
}

// out_padded += G^T (fx, fy, fz)
void scatter_cell_transpose(const BoxGrid& g, const double* fx, const double* fy, const double* fz,
                            std::vector<double>& out) {
  const std::size_t n = g.n(), m = n + 2, nc = n + 1;
  const double s = 0.25 / g.spacing();
  const CellCorners cc{m};
  const std::size_t sx = cc.dx(), sy = cc.dy();
  std::size_t c = 0;
  for (std::size_t I = 0; I < nc; ++I)
    for (std::size_t J = 0; J < nc; ++J)
      for (std::size_t K = 0; K < nc; ++K, ++c) {
        double* q = out.data() + cc.base(I, J, K);
        const double a = s * fx[c], b = s * fy[c], d = s * fz[c];
        q[0] += -a - b - d;
        q[1] += -a - b + d;
        q[sy] += -a + b - d;
        q[sy + 1] += -a + b + d;
        q[sx] += a - b - d;
        q[sx + 1] += a - b + d;
        q[sx + sy] += a + b - d;
        q[sx + sy + 1] += a + b + d;
      }
}

ScalarField box_laplacian(const ScalarField& f) {
  const BoxGrid& g = f.box();
  const std::size_t n = g.n(), m = n + 2;
  const auto p = padded(g, f.values());
  const double ih2 = 1.0 / (g.spacing() * g.spacing());
  ScalarField out(g);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double* q = p.data() + ((i + 1) * m + (j + 1)) * m + 1;
      double* o = out.values().data() + g.index(i, j, 0);
      for (std::size_t k = 0; k < n; ++k) {
        const double* c = q + k;
        o[k] = ih2 * (c[m * m] + c[-static_cast<std::ptrdiff_t>(m * m)] + c[m] +
                      c[-static_cast<std::ptrdiff_t>(m)] + c[1] + c[-1] - 6.0 * c[0]);
      }
    }
  return out;
}

ScalarField radial_laplacian(const ScalarField& f) {
  const RadialGrid& g = f.radial();
  const std::size_t n = g.size();
  const double h = g.spacing(), ih2 = 1.0 / (h * h);
  auto at = [&](std::size_t j) { return j < n ? f[j] : 0.0; };
  ScalarField out(g);
  out[0] = 6.0 * (f[1] - f[0]) * ih2;
  for (std::size_t j = 1; j < n; ++j) {
    const double r = g.node(j);
    const double d2 = (at(j + 1) - 2.0 * f[j] + f[j - 1]) * ih2;
    const double d1 = (at(j + 1) - f[j - 1]) / (2.0 * h);
    out[j] = d2 + 2.0 * d1 / r;
  }
  return out;
}

// Second-order derivative along one axis of a line of n values (n >= 3).
void line_derivative(const double* v, std::size_t stride, std::size_t n, double h, double* out,
                     std::size_t out_stride) {
  const double ih = 1.0 / (2.0 * h);
  out[0] = (-3.0 * v[0] + 4.0 * v[stride] - v[2 * stride]) * ih;
  for (std::size_t k = 1; k + 1 < n; ++k)
    out[k * out_stride] = (v[(k + 1) * stride] - v[(k - 1) * stride]) * ih;
  const std::size_t l = n - 1;
  out[l * out_stride] = (3.0 * v[l * stride] - 4.0 * v[(l - 1) * stride] + v[(l - 2) * stride]) * ih;
}

// Radial face coefficient 4 pi r_{j+1/2}^2 h.
double radial_face(const RadialGrid& g, std::size_t j) {
  const double r = (static_cast<double>(j) + 0.5) * g.spacing();
  return 4.0 * std::numbers::pi * r * r * g.spacing();
}

}  // namespace

ScalarField laplacian_apply(const ScalarField& f) {
  return f.is_box() ? box_laplacian(f) : radial_laplacian(f);
}

VectorField grad(const ScalarField& f) {
  VectorField out(f.grid(), Location::Node);
  if (!f.is_box()) {
    const RadialGrid& g = f.radial();
    const std::size_t n = g.size();
    const double h = g.spacing();
    auto d = out.component(0);
    d[0] = 0.0;
    for (std::size_t j = 1; j + 1 < n; ++j) d[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return out;
  }
  const BoxGrid& g = f.box();
  const std::size_t n = g.n();
  const double h = g.spacing();
  const double* v = f.values().data();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      line_derivative(v + g.index(0, a, b), n * n, n, h, out.component(0).data() + g.index(0, a, b), n * n);
      line_derivative(v + g.index(a, 0, b), n, n, h, out.component(1).data() + g.index(a, 0, b), n);
      line_derivative(v + g.index(a, b, 0), 1, n, h, out.component(2).data() + g.index(a, b, 0), 1);
    }
  return out;
}

VectorField grad4(const ScalarField& f) {
  const BoxGrid& g = f.box();
  const long n = static_cast<long>(g.n());
  const double c1 = 2.0 / (3.0 * g.spacing()), c2 = 1.0 / (12.0 * g.spacing());
  VectorField out(g, Location::Node);
  auto at = [&](long i, long j, long k) {
    if (i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n) return 0.0;
    return f[g.index(i, j, k)];
  };
  auto gx = out.component(0), gy = out.component(1), gz = out.component(2);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      for (long k = 0; k < n; ++k) {
        const std::size_t c = g.index(i, j, k);
        gx[c] = c1 * (at(i + 1, j, k) - at(i - 1, j, k)) - c2 * (at(i + 2, j, k) - at(i - 2, j, k));
        gy[c] = c1 * (at(i, j + 1, k) - at(i, j - 1, k)) - c2 * (at(i, j + 2, k) - at(i, j - 2, k));
        gz[c] = c1 * (at(i, j, k + 1) - at(i, j, k - 1)) - c2 * (at(i, j, k + 2) - at(i, j, k - 2));
      }
  return out;
}

VectorField cell_gradient(const ScalarField& f) {
  const BoxGrid& g = f.box();
  VectorField out(g, Location::Cell);
  const auto p = padded(g, f.values());
  gather_cell_gradient(g, p, out.component(0).data(), out.component(1).data(), out.component(2).data());
  return out;
}

ScalarField div_cell(const VectorField& F) {
  if (F.location() != Location::Cell) throw UsageError("div_cell: expected a cell field");
  const BoxGrid& g = std::get<BoxGrid>(F.grid());
  const std::size_t m = g.n() + 2;
  std::vector<double> acc(m * m * m, 0.0);
  scatter_cell_transpose(g, F.component(0).data(), F.component(1).data(), F.component(2).data(), acc);
  ScalarField out(g);
  unpad_into(g, acc, out.values());
  out *= -1.0;
  return out;
}

ScalarField div_p4(const VectorField& g) {
  if (g.location() == Location::Cell) {
    VectorField flux = g;
    const std::size_t np = g.points();
    for (std::size_t c = 0; c < np; ++c) {
      const double a = g.component(0)[c], b = g.component(1)[c], d = g.component(2)[c];
      const double s = a * a + b * b + d * d;
      flux.component(0)[c] = s * a;
      flux.component(1)[c] = s * b;
      flux.component(2)[c] = s * d;
    }
    return div_cell(flux);
  }
  if (const auto* rg = std::get_if<RadialGrid>(&g.grid())) {
    const std::size_t n = rg->size();
    const double h = rg->spacing();
    auto gr = g.component(0);
    std::vector<double> F(n);
    for (std::size_t j = 0; j < n; ++j) F[j] = gr[j] * gr[j] * gr[j];
    ScalarField out(*rg);
    out[0] = 3.0 * F[1] / h;
    for (std::size_t j = 1; j < n; ++j) {
      const double r = rg->node(j);
      const double fp = j + 1 < n ? F[j + 1] : 0.0;
      out[j] = (fp - F[j - 1]) / (2.0 * h) + 2.0 * F[j] / r;
    }
    return out;
  }
  const BoxGrid& bg = std::get<BoxGrid>(g.grid());
  const std::size_t n = bg.n(), total = bg.size();
  std::vector<double> fx(total), fy(total), fz(total);
  for (std::size_t c = 0; c < total; ++c) {
    const double a = g.component(0)[c], b = g.component(1)[c], d = g.component(2)[c];
    const double s = a * a + b * b + d * d;
    fx[c] = s * a;
    fy[c] = s * b;
    fz[c] = s * d;
  }
  const double ih = 1.0 / (2.0 * bg.spacing());
  ScalarField out(bg);
  auto at = [&](const std::vector<double>& F, long i, long j, long k) {
    if (i < 0 || j < 0 || k < 0 || i >= static_cast<long>(n) || j >= static_cast<long>(n) ||
        k >= static_cast<long>(n))
      return 0.0;
    return F[bg.index(i, j, k)];
  };
  for (long i = 0; i < static_cast<long>(n); ++i)
    for (long j = 0; j < static_cast<long>(n); ++j)
      for (long k = 0; k < static_cast<long>(n); ++k)
        out[bg.index(i, j, k)] = ih * (at(fx, i + 1, j, k) - at(fx, i - 1, j, k) + at(fy, i, j + 1, k) -
                                       at(fy, i, j - 1, k) + at(fz, i, j, k + 1) - at(fz, i, j, k - 1));
  return out;
}

double integrate(const ScalarField& f) {
  double s = 0.0;
  if (f.is_box()) {
    for (double v : f.values()) s += v;
    return s * f.box().cell_volume();
  }
  const RadialGrid& g = f.radial();
  for (std::size_t j = 0; j < g.size(); ++j) s += g.weight(j) * f[j];
  return s;
}

double inner_l2(const ScalarField& f, const ScalarField& g) {
  require_same_grid(f, g);
  double s = 0.0;
  if (f.is_box()) {
    const double* a = f.values().data();
    const double* b = g.values().data();
    const std::size_t n = f.size();
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s * f.box().cell_volume();
  }
  const RadialGrid& rg = f.radial();
  for (std::size_t j = 0; j < rg.size(); ++j) s += rg.weight(j) * f[j] * g[j];
  return s;
}

double dirichlet_form(const ScalarField& f, const ScalarField& g) {
  require_same_grid(f, g);
  if (!f.is_box()) {
    const RadialGrid& rg = f.radial();
    const std::size_t n = rg.size();
    const double ih2 = 1.0 / (rg.spacing() * rg.spacing());
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double df = (j + 1 < n ? f[j + 1] : 0.0) - f[j];
      const double dg = (j + 1 < n ? g[j + 1] : 0.0) - g[j];
      s += radial_face(rg, j) * df * dg * ih2;
    }
    return s;
  }
  // With zero ghosts, sum over faces equals -sum f (Lap_h g) h^3.
  const BoxGrid& bg = f.box();
  const std::size_t n = bg.n(), m = n + 2;
  const auto pf = padded(bg, f.values());
  const auto pg = padded(bg, g.values());
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i)
    for (std::size_t j = 0; j + 1 < m; ++j)
      for (std::size_t k = 0; k + 1 < m; ++k) {
        const std::size_t c = (i * m + j) * m + k;
        const double f0 = pf[c], g0 = pg[c];
        s += (pf[c + m * m] - f0) * (pg[c + m * m] - g0) + (pf[c + m] - f0) * (pg[c + m] - g0) +
             (pf[c + 1] - f0) * (pg[c + 1] - g0);
      }
  return s * bg.spacing();
}

double inner_h1(const ScalarField& f, const ScalarField& g, const ScalarField* weight) {
  require_same_grid(f, g);
  if (weight == nullptr) return dirichlet_form(f, g) + inner_l2(f, g);
  require_same_grid(f, *weight);
  return dirichlet_form(f, g) + inner_l2(hadamard(f, *weight), g);
}

double norm_h1(const ScalarField& f) { return std::sqrt(std::max(0.0, inner_h1(f, f))); }
double norm_d12(const ScalarField& f) { return std::sqrt(std::max(0.0, dirichlet_form(f, f))); }

double norm_lq(const ScalarField& f, double q) {
  if (!(q >= 1.0) || !std::isfinite(q)) throw UsageError("norm_lq: q must be finite and >= 1");
  ScalarField a(f.grid());
  for (std::size_t i = 0; i < f.size(); ++i) a[i] = std::pow(std::abs(f[i]), q);
  const double s = integrate(a);
  return s > 0.0 ? std::pow(s, 1.0 / q) : 0.0;
}

ScalarField riesz_h1_solve(const ScalarField& residual, double tol) {
  if (!(tol > 0.0)) throw UsageError("riesz_h1_solve: tol must be positive");
  if (!residual.all_finite()) throw UsageError("riesz_h1_solve: residual is not finite");
  ScalarField g(residual.grid());
  if (residual.is_box()) {
    // (-Lap_h + 1) is diagonal in the sine basis: the solve is direct.
    DirichletSineSolver solver(residual.box());
    solver.solve(residual.values(), g.values(), 1.0, 1.0);
    ScalarField check = g - laplacian_apply(g);
    check -= residual;
    const double rn = std::sqrt(inner_l2(residual, residual));
    const double cn = std::sqrt(inner_l2(check, check));
    if (cn > tol * std::max(rn, 1e-300) && cn > 0.0)
      throw SolverError("riesz_h1_solve: residual above tolerance", cn / std::max(rn, 1e-300), 1);
    return g;
  }
  // Radial: (K + W) g = W r with K tridiagonal, solved by the Thomas algorithm.
  const RadialGrid& rg = residual.radial();
  const std::size_t n = rg.size();
  const double ih2 = 1.0 / (rg.spacing() * rg.spacing());
  std::vector<double> diag(n), off(n, 0.0), rhs(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double cl = j > 0 ? radial_face(rg, j - 1) * ih2 : 0.0;
    const double cr = radial_face(rg, j) * ih2;
    diag[j] = cl + cr + rg.weight(j);
    if (j + 1 < n) off[j] = -cr;
    rhs[j] = rg.weight(j) * residual[j];
  }
  std::vector<double> c(n), d(n);
  c[0] = off[0] / diag[0];
  d[0] = rhs[0] / diag[0];
  for (std::size_t j = 1; j < n; ++j) {
    const double den = diag[j] - off[j - 1] * c[j - 1];
    c[j] = off[j] / den;
    d[j] = (rhs[j] - off[j - 1] * d[j - 1]) / den;
  }
  g[n - 1] = d[n - 1];
  for (std::size_t j = n - 1; j-- > 0;) g[j] = d[j] - c[j] * g[j + 1];
  return g;
}

double grad_l4_pow4(const ScalarField& f) {
  const VectorField G = cell_gradient(f);
  double s = 0.0;
  const std::size_t np = G.points();
  for (std::size_t c = 0; c < np; ++c) {
    const double a = G.component(0)[c], b = G.component(1)[c], d = G.component(2)[c];
    const double q = a * a + b * b + d * d;
    s += q * q;
  }
  return s * f.box().cell_volume();
}

ScalarField p4_linearized_apply(const VectorField& g, const ScalarField& psi) {
  VectorField dpsi = cell_gradient(psi);
  const std::size_t np = g.points();
  auto gx = g.component(0), gy = g.component(1), gz = g.component(2);
  auto px = dpsi.component(0), py = dpsi.component(1), pz = dpsi.component(2);
  for (std::size_t c = 0; c < np; ++c) {
    const double s = gx[c] * gx[c] + gy[c] * gy[c] + gz[c] * gz[c];
    const double t = 2.0 * (gx[c] * px[c] + gy[c] * py[c] + gz[c] * pz[c]);
    px[c] = s * px[c] + t * gx[c];
    py[c] = s * py[c] + t * gy[c];
    pz[c] = s * pz[c] + t * gz[c];
  }
  ScalarField out = div_cell(dpsi);
  out *= -1.0;
  return out;
}

}  // namespace qslsp
