#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "opf/formulations.hpp"
#include "opf/ipm.hpp"
#include "oracles.hpp"

using namespace opf;

namespace {

void add_linear_row(ModelIR& m, const std::string& name, BlockKind kind,
                    std::vector<LinearTerm> terms, double lo, double hi) {
  auto b = std::make_shared<LinearBlock>(name, kind);
  b->add_row(std::move(terms), lo, hi);
  m.add_block(b);
}

ModelIR lp_min_x() {
  ModelIR m;
  m.add_variable({"x", 1.0, kInf, 5.0});
  m.add_objective_term(0, 1.0);
  return m;
}

/// min t s.t. x^2 - t <= 0.
ModelIR epigraph_square() {
  ModelIR m;
  m.add_variable({"x", -kInf, kInf, 1.0});
  m.add_variable({"t", -kInf, kInf, 2.0});
  m.add_objective_term(1, 1.0);
  auto q = std::make_shared<QuadraticBlock>("square");
  q->add_row({{1, -1.0}}, {{0, 0, 1.0}}, -kInf, 0.0);
  m.add_block(q);
  return m;
}

bool same_log(const IterationLog& a, const IterationLog& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const auto& x = a.records[i];
    const auto& y = b.records[i];
    if (x.mu != y.mu || x.primal_inf != y.primal_inf || x.dual_inf != y.dual_inf ||
        x.compl_ != y.compl_ || x.alpha_primal != y.alpha_primal || x.alpha_dual != y.alpha_dual ||
        x.reg != y.reg) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("LP with one bound") {
  const auto out = solve(lp_min_x());
  REQUIRE(out.result.status == SolveStatus::Optimal);
  CHECK(out.result.primal[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(out.result.objective == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(out.result.bound_duals[0] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("single bus AC with a quadratic cost") {
  const Network net(1.0, {{1, BusType::Reference, 0.9, 1.1, {1.0, 0.0}}}, {},
                    {{1, 0.0, 2.0, -1.0, 1.0, PolynomialCost{0, 0, 1}}});
  const OpfModel m = build_opf(net, PowerFlowKind::AC, CostKind::Polynomial);
  const auto out = solve(m.model());
  REQUIRE(out.result.status == SolveStatus::Optimal);
  CHECK(out.result.objective == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("small DC cases match vertex enumeration") {
  SolverOptions o;
  o.tol = 1e-12;
  for (const char* name : {"case1_single", "case2_line", "case3_ring"}) {
    const Network net = oracle::load_case(name);
    const auto best = oracle::vertex_enumeration(oracle::dc_opf_lp(net));
    REQUIRE(best.has_value());
    for (CostKind c : kPwlEncodings) {
      CAPTURE(name);
      CAPTURE(to_string(c));
      const auto out = solve(build_opf(net, PowerFlowKind::DC, c).model(), o);
      REQUIRE(out.result.status == SolveStatus::Optimal);
      CHECK(std::abs(out.result.objective - *best) <= 1e-8);
    }
  }
}

TEST_CASE("kkt_check") {
  SUBCASE("passes on an optimal result") {
    const OpfModel m = build_opf(oracle::load_case("case9_wscc"), PowerFlowKind::AC, CostKind::Lambda);
    const auto out = solve(m.model());
    REQUIRE(out.result.status == SolveStatus::Optimal);
    const KktReport rep = kkt_check(m.model(), out.result);
    CHECK(rep.passes(1e-6));
    CHECK(out.result.kkt_residual == rep.max());
  }
  SUBCASE("detects a perturbed primal") {
    const OpfModel m = build_opf(oracle::load_case("case3_ring"), PowerFlowKind::DC, CostKind::Delta);
    auto out = solve(m.model());
    REQUIRE(out.result.status == SolveStatus::Optimal);
    for (std::size_t j = 0; j < out.result.primal.size(); ++j) {
      const auto& v = m.model().variables()[j];
      if (v.lower == v.upper) continue;
      SolveResult bad = out.result;
      bad.primal[j] += 1e-3;
      CAPTURE(v.name);
      CHECK_FALSE(kkt_check(m.model(), bad).passes(1e-6));
    }
  }
  SUBCASE("hand-built point for min x^2") {
    SolveResult r;
    r.primal = {0.0, 0.0};
    r.constraint_duals = {1.0};
    r.bound_duals = {0.0, 0.0};
    const KktReport rep = kkt_check(epigraph_square(), r);
    CHECK(rep.stationarity == 0.0);
    CHECK(rep.primal_feasibility == 0.0);
    CHECK(rep.complementarity == 0.0);
  }
  SUBCASE("wrong sizes") {
    CHECK_FALSE(kkt_check(epigraph_square(), SolveResult{}).passes(1.0));
  }
}

TEST_CASE("min x^2 through an epigraph") {
  const auto out = solve(epigraph_square());
  REQUIRE(out.result.status == SolveStatus::Optimal);
  CHECK(std::abs(out.result.primal[0]) <= 1e-3);
  CHECK(std::abs(out.result.objective) <= 1e-6);
  CHECK(out.result.constraint_duals[0] == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("solves are deterministic") {
  const OpfModel m = build_opf(oracle::load_case("case5_pjm"), PowerFlowKind::AC, CostKind::Psi);
  const auto a = solve(m.model());
  const auto b = solve(m.model());
  CHECK(a.result.primal == b.result.primal);
  CHECK(a.result.constraint_duals == b.result.constraint_duals);
  CHECK(a.result.iterations == b.result.iterations);
  CHECK(same_log(a.log, b.log));
}

TEST_CASE("monotone barrier never increases") {
  for (PowerFlowKind pf : kAllPowerFlows) {
    const OpfModel m = build_opf(oracle::load_case("case9_wscc"), pf, CostKind::Psi);
    const auto out = solve(m.model());
    REQUIRE(out.result.status == SolveStatus::Optimal);
    REQUIRE(!out.log.records.empty());
    for (std::size_t i = 1; i < out.log.records.size(); ++i) {
      CHECK(out.log.records[i].mu <= out.log.records[i - 1].mu);
    }
  }
}

TEST_CASE("steps stay strictly interior") {
  const OpfModel m = build_opf(oracle::load_case("case30_lattice"), PowerFlowKind::SOC, CostKind::Phi);
  const auto out = solve(m.model());
  REQUIRE(out.result.status == SolveStatus::Optimal);
  for (const auto& r : out.log.records) {
    CHECK(r.alpha_primal > 0.0);
    CHECK(r.alpha_primal <= 1.0);
    CHECK(r.alpha_dual > 0.0);
    CHECK(r.alpha_dual <= 1.0);
  }
  // Multiplier signs follow the documented convention.
  const auto& vars = m.model().variables();
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if (vars[j].lower == vars[j].upper) continue;
    if (vars[j].lower == -kInf) CHECK(out.result.bound_duals[j] <= 0.0);
    if (vars[j].upper == kInf) CHECK(out.result.bound_duals[j] >= 0.0);
  }
}

TEST_CASE("dense and sparse factorizations agree") {
  const OpfModel m = build_opf(oracle::load_case("case9_wscc"), PowerFlowKind::AC, CostKind::Delta);
  SolverOptions dense, sparse;
  dense.dense_below = 1 << 20;
  sparse.dense_below = 0;
  const auto a = solve(m.model(), dense);
  const auto b = solve(m.model(), sparse);
  REQUIRE(a.result.status == SolveStatus::Optimal);
  REQUIRE(b.result.status == SolveStatus::Optimal);
  CHECK(a.result.objective == doctest::Approx(b.result.objective).epsilon(1e-7));
}

TEST_CASE("adaptive barrier") {
  SolverOptions o;
  o.barrier = BarrierStrategy::Adaptive;
  const OpfModel m = build_opf(oracle::load_case("case5_pjm"), PowerFlowKind::DC, CostKind::Lambda);
  const auto a = solve(m.model(), o);
  const auto b = solve(m.model());
  REQUIRE(a.result.status == SolveStatus::Optimal);
  CHECK(a.result.objective == doctest::Approx(b.result.objective).epsilon(1e-6));
}

TEST_CASE("iteration log CSV") {
  const auto out = solve(lp_min_x());
  std::ostringstream os;
  out.log.write_csv(os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "iter,mu,primal_inf,dual_inf,compl,alpha_primal,alpha_dual,reg");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 7);
  }
  CHECK(rows == out.log.records.size());
  CHECK(static_cast<int>(rows) == out.result.iterations);
}

TEST_CASE("infeasible input is not reported optimal") {
  ModelIR m;
  m.add_variable({"x", 0.0, 1.0, 0.5});
  m.add_variable({"y", 0.0, 1.0, 0.5});
  m.add_objective_term(0, 1.0);
  add_linear_row(m, "sum", BlockKind::LinearEq, {{0, 1.0}, {1, 1.0}}, 3.0, 3.0);
  const auto out = solve(m);
  CHECK((out.result.status == SolveStatus::Infeasible ||
         out.result.status == SolveStatus::NumericalError));
}

TEST_CASE("iteration limit") {
  SolverOptions o;
  o.max_iter = 2;
  const OpfModel m = build_opf(oracle::load_case("case9_wscc"), PowerFlowKind::AC, CostKind::Psi);
  const auto out = solve(m.model(), o);
  CHECK(out.result.status == SolveStatus::IterationLimit);
  CHECK(out.result.iterations == 2);
}

TEST_CASE("fixed variables and constant rows") {
  ModelIR m;
  m.add_variable({"x", 2.0, 2.0, 0.0});
  m.add_variable({"y", 0.0, 5.0, 1.0});
  m.add_objective_term(1, 1.0);
  add_linear_row(m, "fixed", BlockKind::LinearEq, {{0, 1.0}}, 2.0, 2.0);
  add_linear_row(m, "link", BlockKind::LinearIneq, {{0, 1.0}, {1, 1.0}}, 3.0, kInf);
  const auto out = solve(m);
  REQUIRE(out.result.status == SolveStatus::Optimal);
  CHECK(out.result.primal[0] == 2.0);
  CHECK(out.result.primal[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("solver options are checked") {
  SolverOptions o;
  o.tol = 0.0;
  CHECK_THROWS_AS(o.check(), std::invalid_argument);
  o = {};
  o.max_iter = -1;
  CHECK_THROWS_AS(o.check(), std::invalid_argument);
  o = {};
  o.tau = 1.5;
  CHECK_THROWS_AS(o.check(), std::invalid_argument);
}
