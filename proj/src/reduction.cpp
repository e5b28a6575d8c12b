#include "qslsp/reduction.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "qslsp/error.hpp"
#include "qslsp/krylov.hpp"
#include "qslsp/operators.hpp"

namespace qslsp {
namespace {

constexpr double kMaxGramCondition = 1e12;

ScalarField on_grid(const BoxGrid& grid, const ScalarField& f) {
  if (f.size() != grid.size()) throw UsageError("field does not match the ansatz grid");
  return ScalarField(grid, std::vector<double>(f.values().begin(), f.values().end()));
}

double h1_dot(const ScalarField& a, const ScalarField& b) { return inner_h1(a, b); }

Eigen::Vector3d frame_coefficients(const ScalarField& f, const TangentFrame& frame) {
  Eigen::Vector3d b;
  for (int i = 0; i < 3; ++i) b(i) = inner_h1(f, frame.dU[i]);
  const double cond = frame.gram_condition();
  if (!(cond < kMaxGramCondition)) throw FrameError("tangent frame Gram matrix is singular", cond, 0);
  const Eigen::LDLT<Eigen::Matrix3d> ldlt(frame.gram);
  return ldlt.solve(b);
}

// (lambda_i / lambda)(x - z) . grad f - d_i f on the ansatz grid.
ScalarField transport(const ScalarField& f, const Ansatz& a, int i) {
  const VectorField g = grad4(f);
  const BoxGrid& grid = a.grid;
  const double r = a.scale.dlambda[i] / a.scale.lambda;
  ScalarField out(grid);
  const std::size_t n = grid.n();
  auto gi = g.component(i);
  for (std::size_t ii = 0; ii < n; ++ii)
    for (std::size_t jj = 0; jj < n; ++jj)
      for (std::size_t kk = 0; kk < n; ++kk) {
        const std::size_t c = grid.index(ii, jj, kk);
        const Point3 x = grid.point(ii, jj, kk);
        double s = 0.0;
        for (int d = 0; d < 3; ++d) s += (x[d] - a.z[d]) * g.component(d)[c];
        out[c] = r * s - gi[c];
      }
  return out;
}

}  // namespace

ScalarField project_W(const ScalarField& f, const TangentFrame& frame) {
  const Eigen::Vector3d c = frame_coefficients(f, frame);
  ScalarField out = f;
  for (int i = 0; i < 3; ++i) out.axpy(-c(i), frame.dU[i]);
  return out;
}

SpanProjector::SpanProjector(std::vector<ScalarField> fields) : fields_(std::move(fields)) {
  const std::size_t m = fields_.size();
  gram_.resize(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) gram_(i, j) = gram_(j, i) = inner_h1(fields_[i], fields_[j]);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_);
  const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
  condition_ = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(condition_ < kMaxGramCondition)) throw FrameError("span projector: singular Gram matrix", condition_, 0);
  gram_inv_ = gram_.ldlt().solve(Eigen::MatrixXd::Identity(m, m));
}

Eigen::VectorXd SpanProjector::coefficients(const ScalarField& f) const {
  Eigen::VectorXd b(fields_.size());
  for (std::size_t i = 0; i < fields_.size(); ++i) b(i) = inner_h1(f, fields_[i]);
  return gram_inv_ * b;
}

ScalarField SpanProjector::operator()(const ScalarField& f) const {
  const Eigen::VectorXd c = coefficients(f);
  ScalarField out = f;
  for (std::size_t i = 0; i < fields_.size(); ++i) out.axpy(-c(i), fields_[i]);
  return out;
}

ScalarField apply_L(const ScalarField& w, const EnergyModel& model, const EnergyState& base,
                    const TangentFrame& frame) {
  if (w.is_zero()) return ScalarField(w.grid());
  return project_W(model.hessian_apply(base, project_W(w, frame)), frame);
}

Reducer::Reducer(const RadialProfile& profile, ProblemParams problem, ReductionOptions options)
    : problem_(std::move(problem)), opt_(options), profile_(profile), ref_(BoxGrid(options.half_width, options.n)),
      ref_grad_{ref_, ref_, ref_}, ref_radial_(ref_) {
  validate(problem_);
  if (std::abs(problem_.p - profile_.p) > 1e-12) throw ConfigError("reducer: profile exponent differs from p");
  if (!(opt_.tol_aux > 0.0) || opt_.max_iter <= 0 || !(opt_.hz > 0.0) || !(opt_.eps_max > 0.0))
    throw ConfigError("reducer: invalid options");
  const BoxGrid grid(opt_.half_width, opt_.n);
  // domain check at lambda = 1: the reference grid is scale invariant
  ScalarField sampled = scaled_profile(profile_, 0.1, {0.0, 0.0, 0.0}, PotentialSpec::constant(1.0), grid);
  ref_ = opt_.discrete_profile ? discrete_ground_state(profile_, grid).U : std::move(sampled);
  const VectorField g = grad4(ref_);
  ref_radial_ = ScalarField(grid);
  for (int i = 0; i < 3; ++i) {
    ref_grad_[i] = ScalarField(grid, std::vector<double>(g.component(i).begin(), g.component(i).end()));
  }
  const std::size_t n = grid.n();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        const std::size_t c = grid.index(i, j, k);
        const Point3 x = grid.point(i, j, k);
        ref_radial_[c] = x[0] * ref_grad_[0][c] + x[1] * ref_grad_[1][c] + x[2] * ref_grad_[2][c];
      }
  c0_ = i_bar(ref_, 1.0, problem_.p);
  c0_continuum_ = profile_constants(profile_).C0;
  theta_ = theta_of(problem_.p);
}

Ansatz Reducer::ansatz(double eps, const Point3& z) const {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  const ScaleFactor sf = scale_factor(problem_.potential, eps, z);
  const double lam = sf.lambda, a = 2.0 / (problem_.p - 1.0), amp = std::pow(lam, a);
  const BoxGrid grid(opt_.half_width / lam, opt_.n, z);
  ScalarField U(grid);
  std::array<ScalarField, 3> d{ScalarField(grid), ScalarField(grid), ScalarField(grid)};
  for (std::size_t c = 0; c < grid.size(); ++c) {
    U[c] = amp * ref_[c];
    for (int i = 0; i < 3; ++i) {
      const double li = sf.dlambda[i] / lam;
      d[i][c] = amp * (a * li * ref_[c] + li * ref_radial_[c] - lam * ref_grad_[i][c]);
    }
  }
  return Ansatz{eps, z, sf, grid, std::move(U), make_frame(std::move(d))};
}

EnergyModel Reducer::model(double eps, const Ansatz& a) const {
  ProblemParams p = problem_;
  p.eps = eps;
  return EnergyModel(p, a.grid);
}

double Reducer::leading(double eps, const Point3& z) const {
  const Point3 x{eps * z[0], eps * z[1], eps * z[2]};
  return c0_ * std::pow(problem_.potential.value(x), theta_);
}

ReductionResult Reducer::solve_auxiliary(double eps, const Point3& z, const ScalarField* w0) const {
  return solve_auxiliary(ansatz(eps, z), w0);
}

ReductionResult Reducer::solve_auxiliary(const Ansatz& a, const ScalarField* w0) const {
  if (a.eps > opt_.eps_max) throw ConfigError("eps above the admissible maximum for the reduction");
  const EnergyModel m = model(a.eps, a);
  const TangentFrame& frame = a.frame;
  ReductionResult out(a.grid);
  out.gram_condition = frame.gram_condition();
  const EnergyState base = m.state(a.U);
  ScalarField& w = out.w;
  if (w0 != nullptr) w = project_W(on_grid(a.grid, *w0), frame);

  auto L = [&](const ScalarField& v) { return project_W(m.hessian_apply(base, v), frame); };
  ScalarField grad(a.grid);
  EnergyState s = base;
  int rising = 0;
  for (int k = 0;; ++k) {
    if (k > 0 || !w.is_zero()) {
      const ScalarField* warm = s.phi ? &s.phi->phi : nullptr;
      s = m.state(a.U + w, warm);
    }
    grad = m.gradient(s);
    const ScalarField r = project_W(grad, frame);
    const double res = norm_h1(r);
    if (!out.residual_history.empty()) {
      const double prev = out.residual_history.back();
      out.max_contraction_ratio = std::max(out.max_contraction_ratio, res / prev);
      rising = res > prev ? rising + 1 : 0;
    }
    out.residual_history.push_back(res);
    out.aux_residual = res;
    if (res <= opt_.tol_aux) break;
    if (rising >= 3)
      throw ContractionError("auxiliary equation: the fixed-point map is not contracting; try a smaller eps", res, k);
    if (k == opt_.max_iter) throw SolverError("auxiliary equation: no convergence", res, k);
    ScalarField delta(a.grid);
    const auto kr = minres(L, delta, r, h1_dot, 1e-3, 0.1 * opt_.tol_aux, 400);
    out.krylov_iterations.push_back(kr.iterations);
    w.axpy(-1.0, project_W(delta, frame));
    ++out.iterations;
  }
  const Eigen::Vector3d alpha = frame_coefficients(grad, frame);
  for (int i = 0; i < 3; ++i) out.alpha[i] = alpha(i);
  out.w_h1_norm = norm_h1(w);
  out.full_residual = norm_h1(grad);
  out.breakdown = m.energy(s);
  out.energy = out.breakdown.total;
  for (int i = 0; i < 3; ++i) {
    const double d = norm_h1(frame.dU[i]) * out.w_h1_norm;
    if (d > 0.0) out.orthogonality = std::max(out.orthogonality, std::abs(inner_h1(w, frame.dU[i])) / d);
  }
  const Point3 x{a.eps * a.z[0], a.eps * a.z[1], a.eps * a.z[2]};
  const Point3 gv = problem_.potential.gradient(x);
  const double scale = a.eps * std::sqrt(gv[0] * gv[0] + gv[1] * gv[1] + gv[2] * gv[2]) + a.eps * a.eps;
  out.bound_constant = out.w_h1_norm / scale;
  out.gradient = std::move(grad);
  return out;
}

ReducedSample Reducer::reduced_value(double eps, const Point3& z, bool gradients) const {
  const Ansatz a = ansatz(eps, z);
  const ReductionResult r0 = solve_auxiliary(a);
  ReducedSample out;
  out.eps = eps;
  out.z = z;
  out.J_tilde = r0.energy;
  out.leading = leading(eps, z);
  const Point3 x{eps * z[0], eps * z[1], eps * z[2]};
  const double v = problem_.potential.value(x);
  out.leading_continuum = c0_continuum_ * std::pow(v, theta_);
  out.expansion_error = std::abs(out.J_tilde - out.leading);
  const Point3 gv = problem_.potential.gradient(x);
  for (int i = 0; i < 3; ++i) out.predicted_grad[i] = eps * theta_ * c0_ * std::pow(v, theta_ - 1.0) * gv[i];
  out.w_norm = r0.w_h1_norm;
  out.iterations = r0.iterations;
  out.full_residual = r0.full_residual;
  out.aux_residual = r0.aux_residual;
  out.alpha = r0.alpha;
  out.gram = a.frame.gram;
  if (!gradients) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    out.grad_J_tilde.fill(nan);
    out.grad_J_tilde_fd.fill(nan);
    out.grad_J_tilde_pairing.fill(nan);
    out.M.fill(nan);
    out.alpha_jacobian.fill(nan);
    return out;
  }

  // Explicit grid dependence at fixed nodal values (phi drops out by stationarity):
  // with spacing s every term scales like a power of s, and V is sampled at
  // x_c = z + xi_c / lambda(z).
  const EnergyBreakdown& e = r0.breakdown;
  const double s_ds = e.kinetic + 3.0 * (e.potential + e.coupling + e.nonlinear) + (e.field - e.field_quartic) -
                      e.field_quartic;
  const ScalarField u = a.U + r0.w;
  const double lam = a.scale.lambda, pa = 2.0 / (problem_.p - 1.0);
  std::array<double, 3> sampled_v{0.0, 0.0, 0.0};
  const std::size_t n = a.grid.n();
  for (std::size_t ii = 0; ii < n; ++ii)
    for (std::size_t jj = 0; jj < n; ++jj)
      for (std::size_t kk = 0; kk < n; ++kk) {
        const std::size_t c = a.grid.index(ii, jj, kk);
        const Point3 y = a.grid.point(ii, jj, kk);
        const Point3 g = problem_.potential.gradient({eps * y[0], eps * y[1], eps * y[2]});
        const double radial = (y[0] - z[0]) * g[0] + (y[1] - z[1]) * g[1] + (y[2] - z[2]) * g[2];
        for (int i = 0; i < 3; ++i) sampled_v[i] += (g[i] - a.scale.dlambda[i] / lam * radial) * u[c] * u[c];
      }
  for (int i = 0; i < 3; ++i) sampled_v[i] *= 0.5 * eps * a.grid.cell_volume();

  const double h = opt_.hz;
  for (int i = 0; i < 3; ++i) {
    Point3 zp = z, zm = z;
    zp[i] += h;
    zm[i] -= h;
    const ReductionResult rp = solve_auxiliary(ansatz(eps, zp), &r0.w);
    const ReductionResult rm = solve_auxiliary(ansatz(eps, zm), &r0.w);
    out.iterations += rp.iterations + rm.iterations;
    ScalarField wdot(a.grid);
    for (std::size_t c = 0; c < wdot.size(); ++c) wdot[c] = (rp.w[c] - rm.w[c]) / (2.0 * h);
    const double rate = a.scale.dlambda[i] / lam;
    ScalarField nodal = wdot;
    nodal.axpy(pa * rate, a.U);
    out.grad_J_tilde[i] = inner_h1(nodal, r0.gradient) - rate * s_ds + sampled_v[i];
    wdot += transport(r0.w, a, i);
    ScalarField tangent = a.frame.dU[i] + wdot;
    out.grad_J_tilde_pairing[i] = inner_h1(tangent, r0.gradient);
    out.grad_J_tilde_fd[i] = (rp.energy - rm.energy) / (2.0 * h);
    for (int j = 0; j < 3; ++j) out.alpha_jacobian(j, i) = (rp.alpha[j] - rm.alpha[j]) / (2.0 * h);
    for (int j = 0; j < 3; ++j) out.M(i, j) = inner_h1(tangent, a.frame.dU[j]);
  }
  return out;
}

Eigen::Matrix3d ReducedSample::hessian() const {
  const Eigen::Matrix3d H = M * alpha_jacobian;
  return 0.5 * (H + H.transpose());
}

NaturalConstraintReport Reducer::check_natural_constraint(double eps, const Point3& z) const {
  const ReducedSample s = reduced_value(eps, z);
  NaturalConstraintReport out;
  out.full_residual = s.full_residual;
  out.M = s.M;
  out.min_singular_value = Eigen::JacobiSVD<Eigen::Matrix3d>(s.M).singularValues().minCoeff();
  out.min_gram_diagonal = s.gram.diagonal().minCoeff();
  return out;
}

SpectrumEstimate Reducer::spectrum(double eps, const Point3& z, int steps) const {
  const Ansatz a = ansatz(eps, z);
  const EnergyModel m = model(eps, a);
  const EnergyState base = m.state(a.U);
  const BoxGrid& g = a.grid;
  const double lam = a.scale.lambda;
  const ScalarField start = sample(g, [&](const Point3& x) {
    const double y0 = lam * (x[0] - z[0]), y1 = lam * (x[1] - z[1]), y2 = lam * (x[2] - z[2]);
    return (1.0 + 0.3 * y0 - 0.2 * y1 * y2 + 0.1 * y2 * y2) * std::exp(-0.25 * (y0 * y0 + y1 * y1 + y2 * y2));
  });
  SpectrumEstimate out;
  out.steps = steps;
  // Rounding leaves components along the removed directions in the Krylov
  // space; shifting them to kShift keeps them away from the bottom.
  constexpr double kShift = 4.0;
  {
    auto L = [&](const ScalarField& v) {
      const ScalarField pv = project_W(v, a.frame);
      ScalarField y = project_W(m.hessian_apply(base, pv), a.frame);
      y.axpy(kShift, v - pv);
      return y;
    };
    const auto ritz = tridiagonal_eigenvalues(lanczos(L, project_W(start, a.frame), h1_dot, steps));
    out.min_ritz_L = *std::min_element(ritz.begin(), ritz.end());
    out.min_abs_ritz_L = std::abs(ritz.front());
    for (double r : ritz) {
      out.min_abs_ritz_L = std::min(out.min_abs_ritz_L, std::abs(r));
      if (std::abs(r - kShift) > 1e-6) out.max_ritz_L = std::max(out.max_ritz_L, r);
    }
    out.inverse_norm_L = 1.0 / out.min_abs_ritz_L;
  }
  {
    const SpanProjector P({a.U, a.frame.dU[0], a.frame.dU[1], a.frame.dU[2]});
    auto H = [&](const ScalarField& v) {
      const ScalarField pv = P(v);
      ScalarField y = P(m.hessian_apply(base, pv));
      y.axpy(kShift, v - pv);
      return y;
    };
    const auto ritz = tridiagonal_eigenvalues(lanczos(H, P(start), h1_dot, steps));
    out.min_ritz_coercive = *std::min_element(ritz.begin(), ritz.end());
  }
  return out;
}

}  // namespace qslsp
