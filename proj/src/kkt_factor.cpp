#include "kkt_factor.hpp"

#include <lapacke.h>

#include <cmath>

namespace opf::detail {

bool KktFactor::factor(const Eigen::SparseMatrix<double>& lower) {
  matrix_ = &lower;
  inertia_ = {};
  const auto n = lower.rows();
  if (dense_) {
    dense_factor_ = Eigen::MatrixXd(lower);
    pivots_.assign(static_cast<std::size_t>(n), 0);
    const lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', static_cast<lapack_int>(n),
                                           dense_factor_.data(), static_cast<lapack_int>(n),
                                           pivots_.data());
    if (info < 0) return false;
    // D has 1x1 and 2x2 diagonal blocks; a 2x2 block is flagged by a negative
    // pivot on both of its rows.
    for (Eigen::Index i = 0; i < n; ++i) {
      if (pivots_[static_cast<std::size_t>(i)] > 0) {
        const double d = dense_factor_(i, i);
        if (d > 0) {
          ++inertia_.positive;
        } else if (d < 0) {
          ++inertia_.negative;
        } else {
          ++inertia_.zero;
        }
      } else {
        const double a = dense_factor_(i, i);
        const double b = dense_factor_(i + 1, i);
        const double c = dense_factor_(i + 1, i + 1);
        const double det = a * c - b * b;
        if (det < 0) {
          ++inertia_.positive;
          ++inertia_.negative;
        } else if (det > 0) {
          (a > 0 ? inertia_.positive : inertia_.negative) += 2;
        } else {
          inertia_.zero += 2;
        }
        ++i;
      }
    }
    return info == 0;
  }

  if (!analyzed_) {
    sparse_.analyzePattern(lower);
    analyzed_ = true;
  }
  sparse_.factorize(lower);
  if (sparse_.info() != Eigen::Success) {
    inertia_.zero = 1;
    return false;
  }
  const Eigen::VectorXd d = sparse_.vectorD();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (d[i] > 0) {
      ++inertia_.positive;
    } else if (d[i] < 0) {
      ++inertia_.negative;
    } else {
      ++inertia_.zero;
    }
  }
  return std::isfinite(d.sum());
}

Eigen::VectorXd KktFactor::solve_once(const Eigen::VectorXd& rhs) const {
  if (!dense_) return sparse_.solve(rhs);
  Eigen::VectorXd x = rhs;
  const auto n = static_cast<lapack_int>(rhs.size());
  LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n, 1, dense_factor_.data(), n, pivots_.data(),
                 x.data(), n);
  return x;
}

Eigen::VectorXd KktFactor::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x = solve_once(rhs);
  for (int k = 0; k < 2; ++k) {
    const Eigen::VectorXd r = rhs - matrix_->selfadjointView<Eigen::Lower>() * x;
    x += solve_once(r);
  }
  return x;
}

}  // namespace opf::detail
