#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "qslsp/energy.hpp"
#include "qslsp/profile.hpp"

namespace qslsp {

/// Orthogonal projection onto the H1-complement of span(frame.dU).
/// Throws FrameError when the Gram matrix is numerically singular.
ScalarField project_W(const ScalarField& f, const TangentFrame& frame);

/// H1-orthogonal projection onto the complement of span(fields), any count.
class SpanProjector {
 public:
  explicit SpanProjector(std::vector<ScalarField> fields);
  ScalarField operator()(const ScalarField& f) const;
  /// Coefficients c with f - sum c_i fields_i orthogonal to the span.
  Eigen::VectorXd coefficients(const ScalarField& f) const;
  double condition() const noexcept { return condition_; }

 private:
  std::vector<ScalarField> fields_;
  Eigen::MatrixXd gram_;
  Eigen::MatrixXd gram_inv_;
  double condition_ = 1.0;
};

/// L_{eps,z}[w] = Pi A[w] with A the Hessian representative at u_base.
ScalarField apply_L(const ScalarField& w, const EnergyModel& model, const EnergyState& base,
                    const TangentFrame& frame);

struct ReductionOptions {
  double half_width = 6.7;  ///< box half-width in units of the profile length 1 / lambda
  std::size_t n = 63;       ///< nodes per axis
  bool discrete_profile = true;  ///< use the discrete ground state rather than the sampled profile
  double tol_aux = 1e-9;    ///< ||Pi grad J(U + w)||_{H1}
  int max_iter = 30;
  double hz = 1e-3;         ///< step for d/dz by central differences
  double eps_max = 0.25;
  double tol_orth = 1e-8;
};

/// U_{eps,z} on a box centred at z with spacing proportional to 1 / lambda(z),
/// and its tangent frame.
struct Ansatz {
  double eps = 0.0;
  Point3 z{0.0, 0.0, 0.0};
  ScaleFactor scale;
  BoxGrid grid;
  ScalarField U;
  TangentFrame frame;
};

struct ReductionResult {
  explicit ReductionResult(const BoxGrid& grid) : w(grid), gradient(grid) {}
  ScalarField w;
  ScalarField gradient;                  ///< grad J(U + w)
  std::array<double, 3> alpha{0.0, 0.0, 0.0};
  double w_h1_norm = 0.0;
  double aux_residual = 0.0;
  double full_residual = 0.0;
  int iterations = 0;
  std::vector<double> residual_history;  ///< aux residual before every update
  std::vector<int> krylov_iterations;
  double max_contraction_ratio = 0.0;    ///< max r_{k+1} / r_k
  double orthogonality = 0.0;            ///< max_i |<w|dU_i>| / (||w|| ||dU_i||)
  double bound_constant = 0.0;           ///< ||w|| / (eps |grad V(eps z)| + eps^2)
  double gram_condition = 0.0;
  double energy = 0.0;                   ///< J_eps(U + w)
  EnergyBreakdown breakdown;
};

struct ReducedSample {
  double eps = 0.0;
  Point3 z{0.0, 0.0, 0.0};
  double J_tilde = 0.0;
  double leading = 0.0;          ///< C0 V(eps z)^theta with the discrete C0
  double leading_continuum = 0.0;
  double expansion_error = 0.0;  ///< |J_tilde - leading|
  /// d/dz_i J_tilde by the chain rule on the moving grid: <dv_i | grad J(U + w)>_{H1}
  /// with dv_i the nodal derivative of U + w, plus the explicit dependence of
  /// the discrete functional on the grid spacing and on the sampled V.
  std::array<double, 3> grad_J_tilde{};
  std::array<double, 3> grad_J_tilde_fd{};       ///< central differences of J_tilde
  std::array<double, 3> grad_J_tilde_pairing{};  ///< <dU_i + dw_i | grad J(U + w)>_{H1} at fixed nodes
  std::array<double, 3> predicted_grad{};  ///< eps theta C0 V^{theta-1} grad V
  double w_norm = 0.0;
  int iterations = 0;
  Eigen::Matrix3d M = Eigen::Matrix3d::Zero();  ///< <dU_i + dw_i | dU_j>_{H1}
  Eigen::Matrix3d gram = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d alpha_jacobian = Eigen::Matrix3d::Zero();  ///< d alpha_i / d z_j by central differences
  /// sym(M alpha_jacobian): the Hessian of J_tilde where alpha = 0.
  Eigen::Matrix3d hessian() const;
  double full_residual = 0.0;
  double aux_residual = 0.0;
  std::array<double, 3> alpha{};
};

struct NaturalConstraintReport {
  double full_residual = 0.0;
  Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
  double min_singular_value = 0.0;
  double min_gram_diagonal = 0.0;
};

struct SpectrumEstimate {
  double min_abs_ritz_L = 0.0;        ///< smallest |Ritz value| of L on W
  double min_ritz_L = 0.0;
  double max_ritz_L = 0.0;
  double inverse_norm_L = 0.0;        ///< 1 / min_abs_ritz_L
  double min_ritz_coercive = 0.0;     ///< Hessian restricted to {U, dU_i}^perp
  int steps = 0;
};

/// Lyapunov-Schmidt reduction around the manifold of rescaled profiles.
/// `problem.eps` is ignored; eps is passed per call.
class Reducer {
 public:
  Reducer(const RadialProfile& profile, ProblemParams problem, ReductionOptions options = {});

  const ReductionOptions& options() const noexcept { return opt_; }
  const ProblemParams& problem() const noexcept { return problem_; }
  const RadialProfile& profile() const noexcept { return profile_; }
  double C0() const noexcept { return c0_; }            ///< I_bar_1 of the profile used for U
  double C0_continuum() const noexcept { return c0_continuum_; }
  double theta() const noexcept { return theta_; }
  /// Profile values on the reference grid (half-width options.half_width, centred at 0).
  const ScalarField& reference_profile() const noexcept { return ref_; }

  Ansatz ansatz(double eps, const Point3& z) const;
  EnergyModel model(double eps, const Ansatz& a) const;

  /// Fixed-point iteration w <- w - L^{-1} Pi grad J(U + w) from w0 (zero by
  /// default, otherwise a field matched by grid index).
  ReductionResult solve_auxiliary(double eps, const Point3& z, const ScalarField* w0 = nullptr) const;
  ReductionResult solve_auxiliary(const Ansatz& a, const ScalarField* w0 = nullptr) const;

  /// With `gradients` false only the auxiliary solve at z runs; the gradient
  /// fields, M and alpha_jacobian are then nan.
  ReducedSample reduced_value(double eps, const Point3& z, bool gradients = true) const;
  NaturalConstraintReport check_natural_constraint(double eps, const Point3& z) const;
  SpectrumEstimate spectrum(double eps, const Point3& z, int steps = 40) const;

  /// C0 V(eps z)^theta with the discrete constant.
  double leading(double eps, const Point3& z) const;

 private:
  ProblemParams problem_;
  ReductionOptions opt_;
  RadialProfile profile_;
  ScalarField ref_;
  std::array<ScalarField, 3> ref_grad_;  // d/dxi_i of ref_
  ScalarField ref_radial_;               // xi . grad ref_
  double c0_ = 0.0, c0_continuum_ = 0.0, theta_ = 0.0;
};

}  // namespace qslsp
