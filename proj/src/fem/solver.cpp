#include "eyeheat/fem/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <cmath>

#include "eyeheat/error.hpp"

namespace eyeheat::fem {

struct SpdSolver::Impl {
  std::optional<Eigen::SimplicialLDLT<SparseMatrix>> ldlt;
  std::optional<Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                                         Eigen::IncompleteCholesky<double>>>
      cg;
};

Vector residual(const SparseMatrix& A, const Vector& x, const Vector& b) {
  std::vector<long double> acc(static_cast<std::size_t>(b.size()));
  for (Eigen::Index i = 0; i < b.size(); ++i) acc[i] = b[i];
  for (Eigen::Index col = 0; col < A.outerSize(); ++col) {
    const long double xc = x[col];
    for (SparseMatrix::InnerIterator it(A, col); it; ++it)
      acc[it.row()] -= static_cast<long double>(it.value()) * xc;
  }
  Vector r(b.size());
  for (Eigen::Index i = 0; i < b.size(); ++i) r[i] = static_cast<double>(acc[i]);
  return r;
}

SpdSolver::SpdSolver(SparseMatrix A, SolverOptions options)
    : A_(std::move(A)), options_(options), impl_(std::make_unique<Impl>()) {
  if (A_.rows() != A_.cols()) throw ValidationError("operator must be square");
  if (A_.rows() <= options_.direct_limit) {
    auto& f = impl_->ldlt.emplace();
    f.compute(A_);
    if (f.info() != Eigen::Success)
      throw NumericalError("sparse LDL^T factorization failed (matrix not SPD?)");
    if (A_.rows() > 0 && !(f.vectorD().minCoeff() > 0.0))
      throw NumericalError("operator is not positive definite");
  } else {
    auto& s = impl_->cg.emplace();
    s.setMaxIterations(options_.max_iterations);
    s.setTolerance(0.1 * options_.relative_tolerance);
    s.compute(A_);
    if (s.info() != Eigen::Success) throw NumericalError("incomplete Cholesky preconditioner failed");
  }
}

SpdSolver::~SpdSolver() = default;
SpdSolver::SpdSolver(SpdSolver&&) noexcept = default;
SpdSolver& SpdSolver::operator=(SpdSolver&&) noexcept = default;

Vector SpdSolver::solve(const Vector& b, SolveReport* report) const {
  if (b.size() != A_.rows()) throw ValidationError("right-hand side has wrong size");
  const double bnorm = b.norm();
  SolveReport rep;
  if (bnorm == 0.0) {
    if (report) *report = rep;
    return Vector::Zero(b.size());
  }
  Vector x;
  if (impl_->ldlt) {
    x = impl_->ldlt->solve(b);
    Vector r = residual(A_, x, b);
    double rel = r.norm() / bnorm;
    for (int step = 0; step < 3 && rel > 1e-15; ++step) {
      const Vector dx = impl_->ldlt->solve(r);
      const Vector candidate = x + dx;
      const Vector rc = residual(A_, candidate, b);
      const double relc = rc.norm() / bnorm;
      ++rep.iterations;
      if (!(relc < rel)) break;
      x = candidate;
      r = rc;
      rel = relc;
    }
    rep.relative_residual = rel;
    rep.direct = true;
  } else {
    x = impl_->cg->solve(b);
    rep.iterations = static_cast<int>(impl_->cg->iterations());
    rep.relative_residual = residual(A_, x, b).norm() / bnorm;
    rep.direct = false;
  }
  if (report) *report = rep;
  if (!std::isfinite(rep.relative_residual) ||
      rep.relative_residual > options_.relative_tolerance)
    throw NumericalError("linear solve stagnated: relative residual " +
                             std::to_string(rep.relative_residual) + " after " +
                             std::to_string(rep.iterations) + " iterations",
                         {rep.relative_residual});
  return x;
}

Vector solve_spd(const SparseMatrix& A, const Vector& b, const SolverOptions& options,
                 SolveReport* report) {
  return SpdSolver(A, options).solve(b, report);
}

}  // namespace eyeheat::fem
