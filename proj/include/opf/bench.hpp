#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "opf/formulations.hpp"
#include "opf/ipm.hpp"

namespace opf {

enum class TimingStatistic { Median, Min };

struct BenchConfig {
  std::vector<std::string> cases;
  std::vector<PowerFlowKind> power_flows{std::begin(kAllPowerFlows), std::end(kAllPowerFlows)};
  std::vector<CostKind> costs{std::begin(kPwlEncodings), std::end(kPwlEncodings)};
  int trials = 5;
  TimingStatistic statistic = TimingStatistic::Median;
  SolverOptions solver;

  /// Throws std::invalid_argument on trials < 1 or a non piecewise-linear
  /// cost kind.
  void check() const;
};

/// Position of a piecewise-linear encoding in kPwlEncodings.
std::size_t encoding_index(CostKind k);

/// Per-encoding seconds, indexed like kPwlEncodings. Missing entries are
/// empty.
using EncodingTimes = std::array<std::optional<double>, 4>;

/// time_m / min_n time_n. Throws IncompleteCell if an encoding is missing
/// and DomainError on a non-positive time.
std::array<double, 4> runtime_ratio(const EncodingTimes& times);

struct BenchCell {
  CostKind cost = CostKind::Lambda;
  /// Solver status name, or "BuildError" / "RecoveryMismatch" when the cell
  /// failed before or after the solve.
  std::string status;
  bool optimal = false;
  double objective = 0.0;
  double seconds = 0.0;  ///< timing statistic of solve-only wall time
  int iterations = 0;
  std::string message;
};

struct BenchRow {
  std::string case_name;
  PowerFlowKind pf = PowerFlowKind::AC;
  std::size_t buses = 0;
  std::size_t branches = 0;
  std::array<std::optional<BenchCell>, 4> cells;  ///< indexed like kPwlEncodings
  /// Encoding objective minus the lambda objective; empty unless both cells
  /// are optimal.
  std::array<std::optional<double>, 4> deltas;
  /// Present only when all four encodings solved to optimality.
  std::optional<std::array<double, 4>> ratios;
  /// Encoding with ratio 1; ties go to the earliest in kPwlEncodings.
  std::optional<CostKind> fastest;

  const std::optional<BenchCell>& cell(CostKind k) const { return cells[encoding_index(k)]; }
};

struct BenchReport {
  std::vector<BenchRow> rows;
  /// Cases where an SOC objective exceeds the matching AC objective.
  std::vector<std::string> bound_violations;
};

/// Builds and solves every case x power flow x encoding cell in order.
/// Cell failures are recorded in the report. Throws if a case cannot be
/// read or has validation errors.
BenchReport run_suite(const BenchConfig& cfg);

/// Fills deltas, ratios and fastest from the cells of `row`.
void finalize_row(BenchRow& row);

enum class ReportFormat { Csv, Markdown };

std::string render_report(const BenchReport& r, ReportFormat format);

}  // namespace opf
