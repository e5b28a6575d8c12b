#include "qslsp/sine_solver.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "qslsp/error.hpp"

namespace qslsp {
namespace {

struct FftwBufferDeleter {
  void operator()(double* p) const noexcept { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<double, FftwBufferDeleter>;

// FFTW planning is not thread safe; execution of an existing plan on another
// aligned buffer is.
std::mutex plan_mutex;

fftw_plan cached_plan(std::size_t n) {
  static std::map<std::size_t, fftw_plan> plans;
  std::lock_guard lock(plan_mutex);
  if (auto it = plans.find(n); it != plans.end()) return it->second;
  const int m = static_cast<int>(n);
  FftwBuffer scratch(fftw_alloc_real(n * n * n));
  fftw_plan plan = fftw_plan_r2r_3d(m, m, m, scratch.get(), scratch.get(), FFTW_RODFT00, FFTW_RODFT00,
                                    FFTW_RODFT00, FFTW_ESTIMATE);
  if (plan == nullptr) throw SolverError("fftw: could not create sine transform plan");
  plans.emplace(n, plan);
  return plan;
}

double* thread_buffer(std::size_t count) {
  thread_local FftwBuffer buffer;
  thread_local std::size_t capacity = 0;
  if (capacity < count) {
    buffer.reset(fftw_alloc_real(count));
    capacity = count;
  }
  return buffer.get();
}

}  // namespace

DirichletSineSolver::DirichletSineSolver(const BoxGrid& grid) : n_(grid.n()), axis_eig_(grid.n()) {
  const double h2 = grid.spacing() * grid.spacing();
  for (std::size_t k = 0; k < n_; ++k) {
    const double theta = std::numbers::pi * static_cast<double>(k + 1) / static_cast<double>(n_ + 1);
    axis_eig_[k] = (2.0 - 2.0 * std::cos(theta)) / h2;
  }
  cached_plan(n_);
}

double DirichletSineSolver::min_eigenvalue() const noexcept { return 3.0 * axis_eig_.front(); }
double DirichletSineSolver::max_eigenvalue() const noexcept { return 3.0 * axis_eig_.back(); }

void DirichletSineSolver::solve(std::span<const double> rhs, std::span<double> out, double a,
                                double b) const {
  const std::size_t total = n_ * n_ * n_;
  if (rhs.size() != total || out.size() != total) throw UsageError("sine solver: size mismatch");
  fftw_plan plan = cached_plan(n_);
  double* buf = thread_buffer(total);
  std::memcpy(buf, rhs.data(), total * sizeof(double));
  fftw_execute_r2r(plan, buf, buf);
  const double norm = 1.0 / std::pow(2.0 * static_cast<double>(n_ + 1), 3);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) {
      const double eij = axis_eig_[i] + axis_eig_[j];
      double* row = buf + (i * n_ + j) * n_;
      for (std::size_t k = 0; k < n_; ++k) row[k] *= norm / (a * (eij + axis_eig_[k]) + b);
    }
  fftw_execute_r2r(plan, buf, buf);
  std::memcpy(out.data(), buf, total * sizeof(double));
}

}  // namespace qslsp
