#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <vector>

namespace opf::detail {

struct Inertia {
  int positive = 0;
  int negative = 0;
  int zero = 0;
};

/// Symmetric indefinite factorization of a KKT matrix given by its lower
/// triangle. Sparse matrices use a fill-reducing LDL^T without pivoting; small
/// ones go through LAPACK's Bunch-Kaufman routine. The sparsity pattern must
/// stay the same between calls to `factor`.
class KktFactor {
 public:
  explicit KktFactor(bool dense) : dense_(dense) {}

  /// Returns false when the factorization breaks down.
  bool factor(const Eigen::SparseMatrix<double>& lower);
  Inertia inertia() const { return inertia_; }
  /// Solves with two steps of iterative refinement against `lower`.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  Eigen::VectorXd solve_once(const Eigen::VectorXd& rhs) const;

  bool dense_;
  bool analyzed_ = false;
  const Eigen::SparseMatrix<double>* matrix_ = nullptr;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> sparse_;
  Eigen::MatrixXd dense_factor_;
  std::vector<int> pivots_;
  Inertia inertia_;
};

}  // namespace opf::detail
