#pragma once

#include <Eigen/Sparse>
#include <memory>

#include "nsf/subsolvers.hpp"

namespace nsf::detail {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Vec = Eigen::VectorXd;
using Triplets = std::vector<Eigen::Triplet<double>>;

// Sparse solve with a residual contract: every returned x satisfies
// ||A x - b|| <= tol ||b|| for the factored A, after at most two rounds of
// iterative refinement; otherwise SolverError is thrown.
class LinearSolver {
 public:
  LinearSolver(LinearBackend backend, double tol);
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  void factorize(const SpMat& a);
  Vec solve(const Vec& b) const;
  bool ready() const;
  double last_residual() const { return last_residual_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  LinearBackend backend_;
  double tol_;
  mutable double last_residual_ = 0.0;
};

// One-shot convenience.
Vec solve_sparse(const SpMat& a, const Vec& b, LinearBackend backend, double tol, double* residual = nullptr);

}  // namespace nsf::detail
