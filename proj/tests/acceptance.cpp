#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "opf/bench.hpp"
#include "opf/formulations.hpp"
#include "opf/ipm.hpp"
#include "oracles.hpp"

using namespace opf;

namespace {

constexpr double kAgreeRel = 1e-5;
constexpr double kRelaxRel = 1e-6;
constexpr double kOracleAbs = 1e-8;
constexpr double kOracleTol = 1e-12;
constexpr std::size_t kOracleMaxVars = 12;
constexpr int kCurves = 1000;
constexpr int kPointsPerCurve = 100;
constexpr double kPwlAbs = 1e-9;
constexpr int kAuditPoints = 100;
constexpr double kAuditRel = 1e-5;
constexpr double kKktTol = 1e-6;
constexpr double kRatioFloor = 1.0 - 1e-12;
constexpr double kTimeBudget = 120.0;

int failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << "criterion " << id << " " << (pass ? "PASS" : "FAIL") << "  " << title << ": "
            << detail << std::endl;
}

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

struct Cell {
  SolveStatus status;
  double objective;
  int iterations;
  double kkt;
};

struct Case {
  std::string name;
  Network net;
};

std::vector<Case> bundled_cases() {
  std::vector<std::string> paths;
  for (const auto& e : std::filesystem::directory_iterator(OPF_CASE_DIR)) {
    if (e.path().extension() == ".m") paths.push_back(e.path().string());
  }
  std::sort(paths.begin(), paths.end());
  std::vector<Case> out;
  for (const auto& p : paths) out.push_back({std::filesystem::path(p).stem().string(), read_case_file(p)});
  return out;
}

std::vector<std::size_t> point_counts(const Network& net) {
  std::vector<std::size_t> out;
  for (const auto& g : net.generators()) {
    if (const auto* c = std::get_if<PwlCurve>(&g.cost)) out.push_back(c->num_points());
  }
  return out;
}

using Grid = std::map<std::string, std::map<PowerFlowKind, std::map<CostKind, Cell>>>;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

// Criterion 4 helpers: encoding variables set by hand on a single-bus model.
PwlCurve random_convex(std::mt19937& rng, int npts) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<CostPoint> pts{{u(rng) * 2.0, u(rng) * 100.0}};
  double slope = -5.0 + 10.0 * u(rng);
  for (int i = 1; i < npts; ++i) {
    const double p = pts.back().power + 0.05 + u(rng);
    pts.push_back({p, pts.back().cost + slope * (p - pts.back().power)});
    slope += 0.01 + 5.0 * u(rng);
  }
  return PwlCurve(pts);
}

int var_index(const ModelIR& m, const std::string& name) {
  for (std::size_t j = 0; j < m.num_variables(); ++j) {
    if (m.variables()[j].name == name) return static_cast<int>(j);
  }
  throw std::runtime_error("no variable " + name);
}

/// Worst violation at x of bounds and cost rows; the load balance is left
/// out because x sweeps the dispatch.
double worst_residual(const ModelIR& m, const std::vector<double>& x) {
  double w = 0.0;
  const auto r = eval_residuals(m, x);
  const auto off = m.row_offsets();
  for (std::size_t b = 0; b < m.blocks().size(); ++b) {
    if (m.blocks()[b]->name() == "balance_p") continue;
    for (std::size_t i = 0; i < m.blocks()[b]->size(); ++i) w = std::max(w, std::abs(r[off[b] + i]));
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto& v = m.variables()[j];
    if (v.lower == v.upper) continue;
    w = std::max({w, v.lower - x[j], x[j] - v.upper});
  }
  return w;
}

/// Largest disagreement between the four encodings and the max form at x,
/// including feasibility of the hand-set encoding point.
double encoding_spread(const std::array<ModelIR, 4>& models, const PwlCurve& c, double x) {
  const double max_form = evaluate(c, x);
  double worst = 0.0;
  const auto pts = c.points();
  const std::size_t np = pts.size();
  for (std::size_t k = 0; k < 4; ++k) {
    const ModelIR& m = models[k];
    std::vector<double> z(m.num_variables(), 0.0);
    z[static_cast<std::size_t>(var_index(m, "pg[0]"))] = x;
    double value = 0.0;
    switch (kPwlEncodings[k]) {
      case CostKind::Psi: {
        // Smallest cg satisfying every epigraph row.
        const int cg = var_index(m, "cg[0]");
        const auto body = eval_constraints(m, z);
        const auto off = m.row_offsets();
        double need = -kInf;
        for (std::size_t b = 0; b < m.blocks().size(); ++b) {
          if (m.blocks()[b]->name() != "cost_psi_epigraph") continue;
          for (std::size_t r = 0; r < m.blocks()[b]->size(); ++r) {
            need = std::max(need, body[off[b] + r] - m.blocks()[b]->upper(r));
          }
        }
        z[static_cast<std::size_t>(cg)] = need;
        break;
      }
      case CostKind::Lambda: {
        std::size_t l = 0;
        while (l + 2 < np && x > pts[l + 1].power) ++l;
        const double t = (x - pts[l].power) / (pts[l + 1].power - pts[l].power);
        z[static_cast<std::size_t>(var_index(m, "lambda[0][" + std::to_string(l) + "]"))] = 1.0 - t;
        z[static_cast<std::size_t>(var_index(m, "lambda[0][" + std::to_string(l + 1) + "]"))] = t;
        break;
      }
      case CostKind::Delta: {
        double left = x - pts[0].power;
        for (std::size_t l = 0; l + 1 < np; ++l) {
          const double width = pts[l + 1].power - pts[l].power;
          const double fill = std::clamp(left, 0.0, width);
          z[static_cast<std::size_t>(var_index(m, "dpg[0][" + std::to_string(l) + "]"))] = fill;
          left -= fill;
        }
        break;
      }
      case CostKind::Phi: {
        for (std::size_t l = 1; l + 1 < np; ++l) {
          z[static_cast<std::size_t>(var_index(m, "phi[0][" + std::to_string(l) + "]"))] =
              std::max(0.0, x - pts[l].power);
        }
        break;
      }
      default:
        break;
    }
    value = m.objective(z);
    worst = std::max({worst, std::abs(value - max_form), worst_residual(m, z)});
  }
  return worst;
}

}  // namespace

int main() {
  const auto cases = bundled_cases();

  // 1, 2, 6, 8 share one pass over the grid.
  Grid grid;
  std::vector<double> kkt_all;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& c : cases) {
    for (PowerFlowKind pf : kAllPowerFlows) {
      for (CostKind k : kPwlEncodings) {
        const OpfModel m = build_opf(c.net, pf, k);
        const auto out = solve(m.model());
        const double kkt = kkt_check(m.model(), out.result).max();
        grid[c.name][pf][k] = {out.result.status, out.result.objective, out.result.iterations, kkt};
        if (out.result.status == SolveStatus::Optimal) kkt_all.push_back(kkt);
      }
    }
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  {
    std::size_t min_bus = SIZE_MAX, max_bus = 0, min_pts = SIZE_MAX, max_pts = 0;
    for (const auto& c : cases) {
      min_bus = std::min(min_bus, c.net.buses().size());
      max_bus = std::max(max_bus, c.net.buses().size());
      for (std::size_t n : point_counts(c.net)) {
        min_pts = std::min(min_pts, n);
        max_pts = std::max(max_pts, n);
      }
    }
    const bool suite_ok = cases.size() >= 6 && min_bus >= 1 && max_bus <= 300 && min_pts <= 2 &&
                          max_pts >= 6;
    double worst = 0.0;
    int non_optimal = 0;
    for (const auto& [name, by_pf] : grid) {
      for (const auto& [pf, cells] : by_pf) {
        const Cell& ref = cells.at(CostKind::Lambda);
        for (const auto& [k, cell] : cells) {
          if (cell.status != SolveStatus::Optimal) {
            ++non_optimal;
            continue;
          }
          worst = std::max(worst, rel_gap(cell.objective, ref.objective));
        }
      }
    }
    report(1, "cross-encoding equivalence", suite_ok && non_optimal == 0 && worst <= kAgreeRel &&
                                                 elapsed < kTimeBudget,
           std::to_string(cases.size()) + " cases, " + std::to_string(min_bus) + "-" +
               std::to_string(max_bus) + " buses, " + std::to_string(min_pts) + "-" +
               std::to_string(max_pts) + " points; worst relative gap " + fmt(worst) + " (limit " +
               fmt(kAgreeRel) + "); non-optimal " + std::to_string(non_optimal) + "; " + fmt(elapsed) +
               " s (limit " + fmt(kTimeBudget) + ")");
  }

  {
    double worst = -kInf;
    int violations = 0;
    for (const auto& [name, by_pf] : grid) {
      for (CostKind k : kPwlEncodings) {
        const Cell& soc = by_pf.at(PowerFlowKind::SOC).at(k);
        const Cell& ac = by_pf.at(PowerFlowKind::AC).at(k);
        const double excess = (soc.objective - ac.objective) / std::max(1.0, std::abs(ac.objective));
        worst = std::max(worst, excess);
        if (soc.objective > ac.objective + kRelaxRel * std::abs(ac.objective)) ++violations;
      }
    }
    report(2, "relaxation bound", violations == 0,
           std::to_string(violations) + " violations; largest (SOC - AC)/|AC| " + fmt(worst) +
               " (limit " + fmt(kRelaxRel) + ")");
  }

  {
    SolverOptions o;
    o.tol = kOracleTol;
    double worst = 0.0;
    std::vector<std::string> used;
    bool ok = true;
    for (const auto& c : cases) {
      if (build_power_flow(c.net, PowerFlowKind::DC).model.num_variables() > kOracleMaxVars) continue;
      used.push_back(c.name);
      const auto best = oracle::vertex_enumeration(oracle::dc_opf_lp(c.net));
      if (!best) {
        ok = false;
        continue;
      }
      for (CostKind k : kPwlEncodings) {
        const OpfModel m = build_opf(c.net, PowerFlowKind::DC, k);
        const auto out = solve(m.model(), o);
        if (out.result.status != SolveStatus::Optimal) {
          ok = false;
          continue;
        }
        kkt_all.push_back(kkt_check(m.model(), out.result).max());
        worst = std::max(worst, std::abs(out.result.objective - *best));
      }
    }
    std::string names;
    for (const auto& n : used) names += (names.empty() ? "" : " ") + n;
    report(3, "LP oracle equivalence", ok && !used.empty() && worst <= kOracleAbs,
           names + "; worst absolute gap " + fmt(worst) + " (limit " + fmt(kOracleAbs) + ")");
  }

  {
    std::mt19937 rng(20240501);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0, worst_pre = 0.0;
    int not_idempotent = 0;
    for (int i = 0; i < kCurves; ++i) {
      const PwlCurve c = random_convex(rng, 2 + i % 7);
      const Network net(1.0, {{1, BusType::Reference, 0.9, 1.1, {c.min_power(), 0.0}}}, {},
                        {{1, c.min_power(), c.max_power(), -1.0, 1.0, c}});
      std::array<ModelIR, 4> models;
      BuildOptions strict;
      strict.strict = true;
      for (std::size_t k = 0; k < 4; ++k) models[k] = build_opf(net, PowerFlowKind::DC, kPwlEncodings[k], strict).pf.model;
      for (int j = 0; j < kPointsPerCurve; ++j) {
        const double x = c.min_power() + (c.max_power() - c.min_power()) * u(rng);
        worst = std::max(worst, encoding_spread(models, c, x));
      }
      const double span = c.max_power() - c.min_power();
      const double pmin = c.min_power() + span * (u(rng) * 1.2 - 0.2);
      const double pmax = std::max(pmin + 0.01, c.min_power() + span * (0.2 + u(rng) * 1.1));
      const PwlCurve once = preprocess(c, pmin, pmax);
      if (!(preprocess(once, pmin, pmax) == once)) ++not_idempotent;
      for (int j = 0; j <= 20; ++j) {
        const double x = pmin + (pmax - pmin) * j / 20.0;
        if (x < c.min_power() || x > c.max_power()) continue;
        worst_pre = std::max(worst_pre, std::abs(evaluate(once, x) - evaluate(c, x)));
      }
    }
    report(4, "piecewise-linear equivalence",
           worst <= kPwlAbs && worst_pre <= kPwlAbs && not_idempotent == 0,
           std::to_string(kCurves) + " curves x " + std::to_string(kPointsPerCurve) +
               " points; worst encoding gap " + fmt(worst) + ", worst preprocess change " +
               fmt(worst_pre) + " (limit " + fmt(kPwlAbs) + "); non-idempotent " +
               std::to_string(not_idempotent));
  }

  {
    // One model per kind, holding only that kind's blocks from a real build.
    const Network net9 = oracle::load_case("case9_wscc");
    const Network poly = read_case_file(std::string(OPF_CASE_DIR) + "/../poly/case9_poly.m");
    const std::vector<OpfModel> sources{
        build_opf(net9, PowerFlowKind::AC, CostKind::Psi),
        build_opf(net9, PowerFlowKind::SOC, CostKind::Lambda),
        build_opf(poly, PowerFlowKind::AC, CostKind::Polynomial)};
    const BlockKind kinds[] = {BlockKind::LinearEq,    BlockKind::LinearIneq,
                               BlockKind::QuadraticIneq, BlockKind::SocCone,
                               BlockKind::AcFlowPolar, BlockKind::ApparentPowerLimit};
    double worst = 0.0;
    std::string missing;
    unsigned seed = 1;
    for (BlockKind kind : kinds) {
      bool found = false;
      for (const auto& src : sources) {
        ModelIR m;
        for (const auto& v : src.model().variables()) m.add_variable(v);
        for (const auto& b : src.model().blocks()) {
          if (b->kind() == kind) m.add_block(b);
        }
        if (m.num_rows() == 0) continue;
        found = true;
        const auto a = oracle::audit_derivatives(m, kAuditPoints, seed++);
        worst = std::max({worst, a.worst_jacobian, a.worst_hessian});
        break;
      }
      if (!found) missing += (missing.empty() ? "" : " ") + std::string(to_string(kind));
    }
    report(5, "derivative audit", missing.empty() && worst <= kAuditRel,
           "6 kinds x " + std::to_string(kAuditPoints) + " points; worst relative error " +
               fmt(worst) + " (limit " + fmt(kAuditRel) + ")" +
               (missing.empty() ? "" : "; missing " + missing));
  }

  {
    const double worst = kkt_all.empty() ? kInf : *std::max_element(kkt_all.begin(), kkt_all.end());
    report(6, "KKT audit", !kkt_all.empty() && worst <= kKktTol,
           std::to_string(kkt_all.size()) + " optimal results; worst residual " + fmt(worst) +
               " (limit " + fmt(kKktTol) + ")");
  }

  {
    BenchConfig cfg;
    for (const auto& e : std::filesystem::directory_iterator(OPF_CASE_DIR)) {
      if (e.path().extension() == ".m") cfg.cases.push_back(e.path().string());
    }
    std::sort(cfg.cases.begin(), cfg.cases.end());
    cfg.trials = 1;
    const BenchReport a = run_suite(cfg);
    const BenchReport b = run_suite(cfg);
    const std::string csv = render_report(a, ReportFormat::Csv);
    const std::string expected_header =
        "case,pf,N,E,obj_lambda,delta_delta,delta_phi,delta_psi,t_lambda,t_delta,t_phi,t_psi,"
        "ratio_lambda,ratio_delta,ratio_phi,ratio_psi,iters_lambda,iters_delta,iters_phi,iters_psi";
    const bool header_ok = csv.rfind(expected_header + "\n", 0) == 0;
    double worst_delta = 0.0, min_ratio = kInf;
    int incomplete = 0, bad_fastest = 0, mismatched = 0;
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
      const auto& row = a.rows[r];
      if (!row.ratios) {
        ++incomplete;
        continue;
      }
      const double ref = row.cell(CostKind::Lambda)->objective;
      for (const auto& d : row.deltas) worst_delta = std::max(worst_delta, std::abs(*d) / std::max(1.0, std::abs(ref)));
      int ones = 0;
      for (double v : *row.ratios) {
        min_ratio = std::min(min_ratio, v);
        if (v == 1.0) ++ones;
      }
      if (ones < 1 || !row.fastest) ++bad_fastest;
      if (r >= b.rows.size()) {
        ++mismatched;
        continue;
      }
      const auto& other = b.rows[r];
      for (std::size_t k = 0; k < 4; ++k) {
        const auto& x = row.cells[k];
        const auto& y = other.cells[k];
        if (x->status != y->status || x->objective != y->objective || x->iterations != y->iterations ||
            row.deltas[k] != other.deltas[k]) {
          ++mismatched;
        }
      }
    }
    if (a.rows.size() != b.rows.size()) ++mismatched;
    report(7, "benchmark report",
           header_ok && incomplete == 0 && bad_fastest == 0 && mismatched == 0 &&
               worst_delta <= kAgreeRel && min_ratio >= kRatioFloor && a.rows.size() == 3 * cases.size(),
           std::to_string(a.rows.size()) + " rows; header " + (header_ok ? "ok" : "wrong") +
               "; worst relative delta " + fmt(worst_delta) + "; smallest ratio " + fmt(min_ratio) +
               "; incomplete rows " + std::to_string(incomplete) + "; rerun differences " +
               std::to_string(mismatched));
  }

  {
    std::string detail;
    bool any = false;
    for (const auto& c : cases) {
      const auto pts = point_counts(c.net);
      if (pts.empty() || *std::min_element(pts.begin(), pts.end()) < 4) continue;
      const auto& ac = grid[c.name][PowerFlowKind::AC];
      const int psi = ac.at(CostKind::Psi).iterations;
      const int others = std::min({ac.at(CostKind::Lambda).iterations, ac.at(CostKind::Delta).iterations,
                                   ac.at(CostKind::Phi).iterations});
      const bool all_optimal = std::all_of(ac.begin(), ac.end(), [](const auto& kv) {
        return kv.second.status == SolveStatus::Optimal;
      });
      if (all_optimal && psi >= others) any = true;
      detail += (detail.empty() ? "" : "; ") + c.name + " psi " + std::to_string(psi) +
                " vs min " + std::to_string(others);
    }
    report(8, "psi iteration stress", any, detail.empty() ? "no case with 4+ points on every generator" : detail);
  }

  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
