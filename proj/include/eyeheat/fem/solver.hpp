#pragma once

#include <Eigen/SparseCholesky>
#include <memory>
#include <optional>

#include "eyeheat/fem/assembly.hpp"

namespace eyeheat::fem {

struct SolverOptions {
  double relative_tolerance = 1e-10;
  int max_iterations = 10000;
  /// Systems up to this size use sparse Cholesky; larger ones use
  /// incomplete-Cholesky preconditioned conjugate gradients.
  Eigen::Index direct_limit = 50000;
};

struct SolveReport {
  double relative_residual = 0.0;
  int iterations = 0;  ///< refinement steps (direct) or CG iterations
  bool direct = true;
};

/// Factorizes an SPD operator once and solves repeatedly. Direct solves are
/// followed by iterative refinement with extended-precision residuals, so the
/// result is accurate to a few ulps of the solution rather than cond(A)*eps.
class SpdSolver {
 public:
  explicit SpdSolver(SparseMatrix A, SolverOptions options = {});
  ~SpdSolver();
  SpdSolver(SpdSolver&&) noexcept;
  SpdSolver& operator=(SpdSolver&&) noexcept;

  Vector solve(const Vector& b, SolveReport* report = nullptr) const;
  const SparseMatrix& matrix() const noexcept { return A_; }

 private:
  struct Impl;
  SparseMatrix A_;
  SolverOptions options_;
  std::unique_ptr<Impl> impl_;
};

/// r = b - A x accumulated in long double.
Vector residual(const SparseMatrix& A, const Vector& x, const Vector& b);

/// One-shot SPD solve meeting ||A x - b|| <= tol ||b||; throws NumericalError
/// carrying the achieved residual otherwise.
Vector solve_spd(const SparseMatrix& A, const Vector& b, const SolverOptions& options = {},
                 SolveReport* report = nullptr);

}  // namespace eyeheat::fem
