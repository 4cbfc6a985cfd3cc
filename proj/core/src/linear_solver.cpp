#include "linear_solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <cmath>
#include <string>

#ifdef NSF_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

namespace nsf::detail {

struct LinearSolver::Impl {
  SpMat a;
#ifdef NSF_HAVE_UMFPACK
  Eigen::UmfPackLU<SpMat> lu;
#else
  Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
#endif
  Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> krylov;
  bool ready = false;
};

LinearSolver::LinearSolver(LinearBackend backend, double tol)
    : impl_(std::make_unique<Impl>()), backend_(backend), tol_(tol) {}
LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

bool LinearSolver::ready() const { return impl_->ready; }

void LinearSolver::factorize(const SpMat& a) {
  impl_->a = a;
  impl_->a.makeCompressed();
  impl_->ready = false;
  if (backend_ == LinearBackend::Direct) {
    impl_->lu.compute(impl_->a);
    if (impl_->lu.info() != Eigen::Success) throw SolverError("linear", "sparse factorization failed (singular matrix)");
  } else {
    impl_->krylov.preconditioner().setDroptol(1e-6);
    impl_->krylov.preconditioner().setFillfactor(20);
    impl_->krylov.setTolerance(0.1 * tol_);
    impl_->krylov.setMaxIterations(5000);
    impl_->krylov.compute(impl_->a);
    if (impl_->krylov.info() != Eigen::Success) throw SolverError("linear", "preconditioner setup failed");
  }
  impl_->ready = true;
}

Vec LinearSolver::solve(const Vec& b) const {
  if (!impl_->ready) throw SolverError("linear", "solve called before factorize");
  const double bn = b.norm();
  if (bn == 0.0) {
    last_residual_ = 0.0;
    return Vec::Zero(b.size());
  }
  auto apply = [this](const Vec& rhs) -> Vec {
    if (backend_ == LinearBackend::Direct) return impl_->lu.solve(rhs);
    return impl_->krylov.solveWithGuess(rhs, Vec::Zero(rhs.size()));
  };
  Vec x = apply(b);
  Vec r = b - impl_->a * x;
  double rel = r.norm() / bn;
  for (int pass = 0; pass < 2 && !(rel <= tol_); ++pass) {
    x += apply(r);
    r = b - impl_->a * x;
    rel = r.norm() / bn;
  }
  last_residual_ = rel;
  if (!std::isfinite(rel) || rel > tol_)
    throw SolverError("linear", "relative residual " + std::to_string(rel) + " above tolerance " + std::to_string(tol_));
  return x;
}

Vec solve_sparse(const SpMat& a, const Vec& b, LinearBackend backend, double tol, double* residual) {
  LinearSolver s(backend, tol);
  s.factorize(a);
  Vec x = s.solve(b);
  if (residual) *residual = s.last_residual();
  return x;
}

}  // namespace nsf::detail
