#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "opf/ipm.hpp"
#include "opf/modelir.hpp"
#include "opf/netdata.hpp"
#include "opf/pwlcost.hpp"

namespace opf {

enum class PowerFlowKind { AC, SOC, DC };
enum class CostKind { Psi, Lambda, Delta, Phi, Polynomial };

inline constexpr PowerFlowKind kAllPowerFlows[] = {PowerFlowKind::AC, PowerFlowKind::SOC,
                                                   PowerFlowKind::DC};
/// The four piecewise-linear encodings in declaration order.
inline constexpr CostKind kPwlEncodings[] = {CostKind::Psi, CostKind::Lambda, CostKind::Delta,
                                             CostKind::Phi};

std::string_view to_string(PowerFlowKind k);
std::string_view to_string(CostKind k);
/// Accepts the lower-case CLI spellings: ac, soc, dc / psi, lambda, delta, phi, poly.
std::optional<PowerFlowKind> parse_power_flow_kind(std::string_view s);
std::optional<CostKind> parse_cost_kind(std::string_view s);

/// Network physics as a ModelIR plus the variable index of every physical
/// quantity. Entries are -1 where the power-flow kind has no such variable.
struct PowerFlowModel {
  PowerFlowKind kind = PowerFlowKind::AC;
  ModelIR model;
  double base_mva = 100.0;
  std::vector<int> pg, qg;                  ///< per generator
  std::vector<int> vm, va, wii;             ///< per bus
  std::vector<int> wr, wi;                  ///< per branch
  std::vector<int> p_fr, q_fr, p_to, q_to;  ///< per branch
};

/// A complete OPF model: physics plus one cost encoding.
struct OpfModel {
  PowerFlowModel pf;
  CostKind cost = CostKind::Lambda;
  /// Cost actually encoded for each generator: a validated curve for the
  /// piecewise encodings, the case-file polynomial otherwise.
  std::vector<CostSpec> costs;
  /// Auxiliary cost variables per generator.
  std::vector<std::vector<int>> aux;
  /// Build notes (edge cases handled, curves changed by preprocessing).
  std::vector<std::string> notes;

  const ModelIR& model() const { return pf.model; }
};

struct BuildOptions {
  /// Require every curve to satisfy the modeling assumptions as given
  /// instead of cleaning it.
  bool strict = false;
  /// Slope merge tolerance in $/MWh.
  double slope_tol = kDefaultSlopeTol;
};

/// Variables and constraints of the AC, SOC or DC power-flow model. Throws
/// BuildError on a network with validation errors.
PowerFlowModel build_power_flow(const Network& net, PowerFlowKind kind);

/// Validated per-generator curves (p.u. power). Curves are cleaned by
/// `preprocess` unless `opts.strict` is set. Throws BuildError when a
/// generator has no piecewise-linear cost or, in strict mode, violates an
/// assumption.
std::vector<PwlCurve> prepare_curves(const Network& net, const BuildOptions& opts = {});

/// Epigraph encoding: one cost variable and one row per segment.
OpfModel attach_cost_psi(PowerFlowModel pf, std::span<const PwlCurve> curves);
/// Convex-combination encoding over the breakpoints.
OpfModel attach_cost_lambda(PowerFlowModel pf, std::span<const PwlCurve> curves);
/// Segment-bin encoding.
OpfModel attach_cost_delta(PowerFlowModel pf, std::span<const PwlCurve> curves);
/// Excess-over-breakpoint encoding. Variable bounds use each generator's
/// active-power upper bound from `pf`.
OpfModel attach_cost_phi(PowerFlowModel pf, std::span<const PwlCurve> curves);
/// Quadratic costs (coefficients over MW) lowered to epigraph rows.
OpfModel attach_cost_polynomial(PowerFlowModel pf, std::span<const PolynomialCost> costs);

OpfModel build_opf(const Network& net, PowerFlowKind pf, CostKind cost,
                   const BuildOptions& opts = {});

struct BranchFlow {
  ComplexPU from;
  ComplexPU to;
};

struct OpfSolution {
  std::vector<ComplexPU> dispatch;     ///< p.u.; imaginary part 0 for DC
  std::vector<double> vm;              ///< AC: |V|; SOC: sqrt(W_ii); DC: 1
  std::vector<double> va;              ///< AC/DC angle (rad); empty for SOC
  std::vector<double> w;               ///< SOC W_ii; empty otherwise
  std::vector<BranchFlow> flows;       ///< p.u.; reactive 0 for DC
  std::vector<double> generator_cost;  ///< $/h recomputed from dispatch
  double objective = 0.0;              ///< solver objective, $/h
};

/// Relative tolerance of the recovery consistency check.
inline constexpr double kRecoveryTol = 1e-6;

/// Extracts physical quantities and recomputes each generator's cost from
/// its dispatch alone. Throws RecoveryMismatch when the recomputed total
/// differs from the solver objective by more than kRecoveryTol relative.
OpfSolution recover_solution(const OpfModel& m, const SolveResult& result);

}  // namespace opf
