#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace qslsp {

struct KrylovResult {
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;          ///< final residual norm in the solver's norm
  double initial_residual = 0.0;
};

/// Preconditioned conjugate gradients for a symmetric positive definite
/// operator. `dot` must be the inner product in which `apply` is symmetric;
/// `precond` must be symmetric positive definite in the same inner product.
/// Stops when the preconditioned residual norm sqrt(<r, M r>) drops below
/// max(rel_tol * initial, abs_tol).
template <class Vec, class Apply, class Precond, class Dot>
KrylovResult pcg(Apply&& apply, Vec& x, const Vec& b, Precond&& precond, Dot&& dot, double rel_tol,
                 double abs_tol, int max_iter) {
  KrylovResult res;
  Vec r = b;
  r.axpy(-1.0, apply(x));
  Vec z = precond(r);
  double rz = dot(r, z);
  res.initial_residual = std::sqrt(std::abs(rz));
  res.residual = res.initial_residual;
  const double target = std::max(rel_tol * res.initial_residual, abs_tol);
  if (res.residual <= target) {
    res.converged = true;
    return res;
  }
  Vec p = z;
  for (int it = 1; it <= max_iter; ++it) {
    Vec ap = apply(p);
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) {
      res.iterations = it;
      return res;
    }
    const double alpha = rz / pap;
    x.axpy(alpha, p);
    r.axpy(-alpha, ap);
    z = precond(r);
    const double rz_new = dot(r, z);
    res.iterations = it;
    res.residual = std::sqrt(std::abs(rz_new));
    if (res.residual <= target) {
      res.converged = true;
      return res;
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    p *= beta;
    p.axpy(1.0, z);
  }
  return res;
}

/// MINRES for a symmetric, possibly indefinite operator, without
/// preconditioning, in the inner product `dot`. Stops when the residual norm
/// drops below max(rel_tol * ||b||, abs_tol).
template <class Vec, class Apply, class Dot>
KrylovResult minres(Apply&& apply, Vec& x, const Vec& b, Dot&& dot, double rel_tol, double abs_tol,
                    int max_iter) {
  KrylovResult res;
  Vec v = b;
  v.axpy(-1.0, apply(x));
  double gamma = std::sqrt(std::max(0.0, dot(v, v)));
  res.initial_residual = gamma;
  res.residual = gamma;
  const double target = std::max(rel_tol * std::sqrt(std::max(0.0, dot(b, b))), abs_tol);
  if (gamma <= target) {
    res.converged = true;
    return res;
  }
  v *= 1.0 / gamma;
  Vec v_prev = v;
  v_prev *= 0.0;
  Vec w = v_prev, w_prev = v_prev;
  double eta = gamma;
  double c_prev = 1.0, c = 1.0, s_prev = 0.0, s = 0.0;

  for (int it = 1; it <= max_iter; ++it) {
    Vec v_next = apply(v);
    const double delta = dot(v, v_next);
    v_next.axpy(-delta, v);
    v_next.axpy(-gamma, v_prev);
    const double gamma_next = std::sqrt(std::max(0.0, dot(v_next, v_next)));

    const double a0 = c * delta - c_prev * s * gamma;
    const double a1 = std::hypot(a0, gamma_next);
    const double a2 = s * delta + c_prev * c * gamma;
    const double a3 = s_prev * gamma;
    const double c_next = a0 / a1;
    const double s_next = gamma_next / a1;

    Vec w_next = v;
    w_next.axpy(-a3, w_prev);
    w_next.axpy(-a2, w);
    w_next *= 1.0 / a1;
    x.axpy(c_next * eta, w_next);
    eta = -s_next * eta;

    res.iterations = it;
    res.residual = std::abs(eta);
    if (res.residual <= target) {
      res.converged = true;
      return res;
    }
    if (gamma_next <= 0.0) break;
    v_next *= 1.0 / gamma_next;
    v_prev = std::move(v);
    v = std::move(v_next);
    w_prev = std::move(w);
    w = std::move(w_next);
    gamma = gamma_next;
    c_prev = c;
    c = c_next;
    s_prev = s;
    s = s_next;
  }
  return res;
}

/// Lanczos tridiagonalisation with full reorthogonalisation. Returns the
/// diagonal and off-diagonal of the Lanczos matrix; its eigenvalues are the
/// Ritz values of `apply` on the Krylov space of `start`.
struct LanczosTridiagonal {
  std::vector<double> diag;
  std::vector<double> offdiag;
};

template <class Vec, class Apply, class Dot>
LanczosTridiagonal lanczos(Apply&& apply, Vec start, Dot&& dot, int steps) {
  LanczosTridiagonal t;
  std::vector<Vec> basis;
  double nrm = std::sqrt(dot(start, start));
  if (!(nrm > 0.0)) return t;
  start *= 1.0 / nrm;
  basis.push_back(std::move(start));
  for (int k = 0; k < steps; ++k) {
    Vec q = apply(basis.back());
    const double a = dot(basis.back(), q);
    t.diag.push_back(a);
    for (int pass = 0; pass < 2; ++pass)
      for (const Vec& b : basis) q.axpy(-dot(b, q), b);
    const double bnext = std::sqrt(std::max(0.0, dot(q, q)));
    if (k + 1 == steps || bnext < 1e-12 * std::abs(a) + 1e-300) break;
    t.offdiag.push_back(bnext);
    q *= 1.0 / bnext;
    basis.push_back(std::move(q));
  }
  return t;
}

/// Eigenvalues of a symmetric tridiagonal matrix, ascending.
std::vector<double> tridiagonal_eigenvalues(const LanczosTridiagonal& t);

}  // namespace qslsp
