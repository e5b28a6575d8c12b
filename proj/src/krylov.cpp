#include "qslsp/krylov.hpp"

#include <Eigen/Eigenvalues>

namespace qslsp {

std::vector<double> tridiagonal_eigenvalues(const LanczosTridiagonal& t) {
  const auto m = static_cast<Eigen::Index>(t.diag.size());
  if (m == 0) return {};
  Eigen::VectorXd d(m), e(std::max<Eigen::Index>(m - 1, 0));
  for (Eigen::Index i = 0; i < m; ++i) d(i) = t.diag[i];
  for (Eigen::Index i = 0; i + 1 < m; ++i) e(i) = t.offdiag[i];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

}  // namespace qslsp
