#pragma once

#include <Eigen/Core>
#include <array>
#include <vector>

#include "qslsp/grid.hpp"
#include "qslsp/potential.hpp"

namespace qslsp {

/// Ground state U of -Lap U + U = U^p in R^3, tabulated on r_j = j*dr up to
/// r_cut. Beyond r_reliable the shooting trajectory is replaced by A e^{-r}/r.
struct RadialProfile {
  double p = 3.0;
  double u0 = 0.0;            ///< U(0)
  double u0_bracket = 0.0;    ///< final bisection bracket width
  double dr = 0.0;
  double r_reliable = 0.0;    ///< last radius where the shooting trajectory is trusted
  double tail_A = 0.0;        ///< U(r) ~ tail_A e^{-r} / r
  std::vector<double> u;      ///< U(r_j)
  std::vector<double> du;     ///< U'(r_j)
  double max_ode_residual = 0.0;

  double r_cut() const noexcept { return dr * static_cast<double>(u.size() - 1); }
  double value(double r) const;
  double derivative(double r) const;
  double second_derivative(double r) const;  ///< from the ODE

  /// |U'' + (2/r)U' - U + U^p| at every table node, U'' from 6th-order
  /// differences of the stored U'.
  std::vector<double> ode_residuals() const;
};

/// Shooting + bisection on U(0) in [1, 10 (p+1)^{1/(p-1)}]; bracket width <= tol.
RadialProfile shoot_ground_state(double p, double tol = 1e-10);

struct ProfileConstants {
  double C0 = 0.0;
  double theta = 0.0;
  double mu = 0.0;
  double l2_sq = 0.0;       ///< ||U||_2^2
  double lp1_pow = 0.0;     ///< ||U||_{p+1}^{p+1}
  double d12_sq = 0.0;      ///< ||grad U||_2^2
  double moment2 = 0.0;     ///< int |x|^2 U^2
  double moment4 = 0.0;     ///< int |x|^4 U^2
};

ProfileConstants profile_constants(const RadialProfile& prof);
double theta_of(double p);
double mu_of(double p);

/// lambda = V(eps z)^{1/2} together with d lambda / d z_i = eps d_iV(eps z) / (2 lambda).
struct ScaleFactor {
  double lambda = 1.0;
  Point3 dlambda{0.0, 0.0, 0.0};
};
ScaleFactor scale_factor(const PotentialSpec& V, double eps, const Point3& z);

/// Samples lambda^{2/(p-1)} U(lambda |x - z|). Throws DomainError when more
/// than 1e-6 of the L2 mass may lie outside the box (union bound over the six
/// faces).
ScalarField scaled_profile(const RadialProfile& prof, double eps, const Point3& z, const PotentialSpec& V,
                           const Grid& grid);

struct TangentFrame {
  std::array<ScalarField, 3> dU;  ///< d/dz_i U_{eps,z}
  Eigen::Matrix3d gram;           ///< <dU_i | dU_j>_{H1}
  double gram_condition() const;
};

/// Analytic frame d/dz_i of lambda^a U(lambda |x - z|) sampled on a box.
TangentFrame tangent_frame(const RadialProfile& prof, double eps, const Point3& z, const PotentialSpec& V,
                           const BoxGrid& grid);

TangentFrame make_frame(std::array<ScalarField, 3> fields);

/// Discrete ground state of -Lap_h U + U = U^p on an origin-centred box, by
/// Newton iteration from the sampled profile. Reflection symmetric.
struct DiscreteGroundState {
  ScalarField U;
  int iterations = 0;
  double residual = 0.0;   ///< max |U_{k+1} - U_k| / max|U| at exit
};
DiscreteGroundState discrete_ground_state(const RadialProfile& prof, const BoxGrid& grid, double tol = 1e-12);

/// Values of a profile-shaped field away from its grid: cubic (Catmull-Rom
/// style) tensor interpolation of an origin-centred box field; zero outside.
double tricubic(const ScalarField& f, const Point3& x);

}  // namespace qslsp
