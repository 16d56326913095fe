#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "opf/modelir.hpp"

namespace opf {

enum class SolveStatus { Optimal, Infeasible, IterationLimit, NumericalError };
std::string_view to_string(SolveStatus s);

enum class BarrierStrategy { Monotone, Adaptive };

struct SolverOptions {
  double tol = 1e-6;  ///< KKT max-norm tolerance
  int max_iter = 500;
  BarrierStrategy barrier = BarrierStrategy::Monotone;
  double mu_init = 0.1;
  double regularization_floor = 1e-8;
  double tau = 0.995;  ///< fraction-to-boundary
  std::optional<double> time_limit;  ///< seconds
  /// KKT systems whose primal dimension is below this use the dense
  /// Bunch-Kaufman factorization instead of sparse LDL^T.
  int dense_below = 200;

  /// Throws std::invalid_argument on out-of-range values.
  void check() const;
};

/// Solution of a ModelIR. Dual sign conventions follow the Lagrangian
/// f(x) + y'g(x) - zb'x: a row multiplier is >= 0 when its upper bound is
/// active and <= 0 when its lower bound is; a bound multiplier is >= 0 at the
/// lower bound and <= 0 at the upper bound.
struct SolveResult {
  SolveStatus status = SolveStatus::NumericalError;
  double objective = 0.0;
  std::vector<double> primal;
  std::vector<double> constraint_duals;
  std::vector<double> bound_duals;
  double kkt_residual = 0.0;
  int iterations = 0;
  double wall_time = 0.0;
  std::string message;
};

struct IterationRecord {
  int iter = 0;
  double mu = 0.0;
  double primal_inf = 0.0;
  double dual_inf = 0.0;
  double compl_ = 0.0;
  double alpha_primal = 0.0;
  double alpha_dual = 0.0;
  double reg = 0.0;  ///< primal regularization used for the step
  int inertia_corrections = 0;
};

struct IterationLog {
  std::vector<IterationRecord> records;
  /// Columns: iter, mu, primal_inf, dual_inf, compl, alpha_primal,
  /// alpha_dual, reg.
  void write_csv(std::ostream& os) const;
};

struct SolveOutput {
  SolveResult result;
  IterationLog log;
};

/// Primal-dual interior-point method with a log barrier on bounds and
/// inequality slacks, inertia-corrected Newton steps and an l1-merit
/// backtracking line search.
SolveOutput solve(const ModelIR& m, const SolverOptions& opts = {});

/// KKT residuals recomputed from the model. Stationarity and
/// complementarity are divided by `scale` = 1 + max-norm of all duals;
/// primal feasibility is absolute.
struct KktReport {
  double stationarity = 0.0;
  double primal_feasibility = 0.0;
  double complementarity = 0.0;
  double scale = 1.0;
  double max() const;
  bool passes(double tol) const { return max() <= tol; }
};

KktReport kkt_check(const ModelIR& m, const SolveResult& r);

}  // namespace opf
