#include <cmath>
#include <sstream>

#include "doctest.h"
#include "opf/errors.hpp"
#include "opf/formulations.hpp"
#include "opf/modelir.hpp"
#include "oracles.hpp"

using namespace opf;

namespace {

ModelIR with_vars(int n, double lo = -kInf, double hi = kInf) {
  ModelIR m;
  for (int i = 0; i < n; ++i) m.add_variable({"x" + std::to_string(i), lo, hi, 0.0});
  return m;
}

ModelIR one_block(BlockPtr b, int n) {
  ModelIR m = with_vars(n, -2.0, 2.0);
  m.add_block(std::move(b));
  return m;
}

}  // namespace

TEST_CASE("linear equality residual") {
  ModelIR m = with_vars(2);
  auto b = std::make_shared<LinearBlock>("sum", BlockKind::LinearEq);
  b->add_row({{0, 1.0}, {1, 1.0}}, 1.0, 1.0);
  m.add_block(b);
  const std::vector<double> x{0.5, 0.5};
  CHECK(eval_residuals(m, x)[0] == 0.0);
  const std::vector<double> y{0.5, 0.7};
  CHECK(eval_residuals(m, y)[0] == doctest::Approx(0.2));
}

TEST_CASE("inequality residual is the signed violation") {
  ModelIR m = with_vars(1);
  auto b = std::make_shared<LinearBlock>("range", BlockKind::LinearIneq);
  b->add_row({{0, 1.0}}, -1.0, 2.0);
  m.add_block(b);
  CHECK(eval_residuals(m, std::vector<double>{0.0})[0] == 0.0);
  CHECK(eval_residuals(m, std::vector<double>{3.0})[0] == doctest::Approx(1.0));
  CHECK(eval_residuals(m, std::vector<double>{-1.5})[0] == doctest::Approx(-0.5));
}

TEST_CASE("cone boundary") {
  ModelIR m = with_vars(4);
  auto b = std::make_shared<SocConeBlock>("cone");
  b->add_row(0, 1, 2, 3);
  m.add_block(b);
  CHECK(eval_constraints(m, std::vector<double>{3, 4, 5, 5})[0] == 0.0);
  CHECK(eval_residuals(m, std::vector<double>{3, 4, 5, 5})[0] == 0.0);
}

TEST_CASE("polar flow on a lossless line") {
  // p_12 = -b v1 v2 sin(t1 - t2) with y = -10j: Re(Yft) = 0, Im(Yft) = 10.
  ModelIR m = with_vars(5);
  auto b = std::make_shared<AcFlowBlock>("ohm");
  b->add_row({0, 1, 2, 3, 4, 0.0, 0.0, 10.0});
  m.add_block(b);
  const std::vector<double> x{0.0, 1.0, 1.0, 0.1, 0.0};
  const double want = 10.0 * std::sin(0.1);
  CHECK(eval_constraints(m, x)[0] == doctest::Approx(want).epsilon(1e-14));
  CHECK(want == doctest::Approx(0.9983).epsilon(1e-4));
  CHECK(eval_residuals(m, x)[0] == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("dimension mismatch") {
  ModelIR m = with_vars(2);
  CHECK_THROWS_AS(eval_residuals(m, std::vector<double>{1.0}), DimensionMismatch);
  CHECK_THROWS_AS(eval_jacobian(m, std::vector<double>{1.0, 2.0, 3.0}), DimensionMismatch);
  CHECK_THROWS_AS(m.objective(std::vector<double>{1.0}), DimensionMismatch);
}

TEST_CASE("linear models have a zero Hessian") {
  ModelIR m = with_vars(3);
  auto b = std::make_shared<LinearBlock>("rows", BlockKind::LinearIneq);
  b->add_row({{0, 1.0}, {2, -3.0}}, -1.0, 1.0);
  b->add_row({{1, 2.0}}, 0.0, kInf);
  m.add_block(b);
  const auto h = eval_lagrangian_hessian(m, std::vector<double>{1, 2, 3}, std::vector<double>{4, 5});
  CHECK(Eigen::MatrixXd(h).isZero(0.0));
}

TEST_CASE("cone Hessian") {
  auto b = std::make_shared<SocConeBlock>("cone");
  b->add_row(0, 1, 2, 3);
  const ModelIR m = one_block(b, 4);
  const Eigen::MatrixXd h =
      Eigen::MatrixXd(eval_lagrangian_hessian(m, std::vector<double>{0.3, 0.1, 1.0, 0.9},
                                              std::vector<double>{1.0}));
  Eigen::MatrixXd want = Eigen::MatrixXd::Zero(4, 4);
  want(0, 0) = 2.0;
  want(1, 1) = 2.0;
  want(2, 3) = want(3, 2) = -1.0;
  CHECK(h.isApprox(want));
}

TEST_CASE("derivatives match finite differences per block kind") {
  SUBCASE("quadratic") {
    auto b = std::make_shared<QuadraticBlock>("quad");
    b->add_row({{0, 2.0}, {1, -1.0}}, {{0, 0, 3.0}, {0, 1, -0.5}, {2, 2, 1.5}}, -kInf, 4.0);
    b->add_row({{2, 1.0}}, {{1, 2, 2.0}}, -1.0, 1.0);
    const auto a = oracle::audit_derivatives(one_block(b, 3), 100, 1);
    CHECK(a.worst_jacobian <= 1e-5);
    CHECK(a.worst_hessian <= 1e-5);
  }
  SUBCASE("cone") {
    auto b = std::make_shared<SocConeBlock>("cone");
    b->add_row(0, 1, 2, 3);
    b->add_row(1, 4, 3, 2);
    const auto a = oracle::audit_derivatives(one_block(b, 5), 100, 2);
    CHECK(a.worst_jacobian <= 1e-5);
    CHECK(a.worst_hessian <= 1e-5);
  }
  SUBCASE("polar flow") {
    auto b = std::make_shared<AcFlowBlock>("ohm");
    b->add_row({0, 1, 2, 3, 4, 1.2, -0.9, 8.5});
    b->add_row({5, 2, 1, 4, 3, -7.0, 8.1, 0.9});
    const auto a = oracle::audit_derivatives(one_block(b, 6), 100, 3);
    CHECK(a.worst_jacobian <= 1e-5);
    CHECK(a.worst_hessian <= 1e-5);
  }
  SUBCASE("apparent power") {
    auto b = std::make_shared<ApparentPowerBlock>("limit");
    b->add_row(0, 1, 1.5);
    b->add_row(1, 2, 0.5);
    const auto a = oracle::audit_derivatives(one_block(b, 3), 100, 4);
    CHECK(a.worst_jacobian <= 1e-5);
    CHECK(a.worst_hessian <= 1e-5);
  }
  SUBCASE("linear") {
    auto b = std::make_shared<LinearBlock>("lin", BlockKind::LinearEq);
    b->add_row({{0, 2.0}, {1, -1.0}}, 0.0, 0.0);
    const auto a = oracle::audit_derivatives(one_block(b, 2), 100, 5);
    CHECK(a.worst_jacobian <= 1e-5);
    CHECK(a.worst_hessian <= 1e-5);
  }
}

TEST_CASE("AC Jacobian at flat start") {
  const Network net = oracle::load_case("case9_wscc");
  const OpfModel m = build_opf(net, PowerFlowKind::AC, CostKind::Lambda);
  const auto x = m.model().initial_point();
  const Eigen::MatrixXd jac = Eigen::MatrixXd(eval_jacobian(m.model(), x));
  for (std::size_t j = 0; j < x.size(); ++j) {
    for (std::size_t r = 0; r < m.model().num_rows(); ++r) {
      const double fd = oracle::central_difference(
          [&](const std::vector<double>& z) { return eval_constraints(m.model(), z)[r]; }, x, j);
      CHECK(std::abs(jac(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) - fd) <= 1e-6);
    }
  }
}

TEST_CASE("sparsity is stable across points") {
  const Network net = oracle::load_case("case5_pjm");
  for (PowerFlowKind pf : kAllPowerFlows) {
    const OpfModel m = build_opf(net, pf, CostKind::Psi);
    const auto x0 = m.model().initial_point();
    auto x1 = x0;
    for (std::size_t i = 0; i < x1.size(); ++i) x1[i] = 0.0;
    const std::vector<double> y0(m.model().num_rows(), 1.0);
    const std::vector<double> y1(m.model().num_rows(), 0.0);
    const auto j0 = eval_jacobian(m.model(), x0);
    const auto j1 = eval_jacobian(m.model(), x1);
    const auto h0 = eval_lagrangian_hessian(m.model(), x0, y0);
    const auto h1 = eval_lagrangian_hessian(m.model(), x1, y1);
    CHECK(j0.nonZeros() == j1.nonZeros());
    CHECK(h0.nonZeros() == h1.nonZeros());
    for (Eigen::Index k = 0; k < j0.nonZeros(); ++k) {
      CHECK(j0.innerIndexPtr()[k] == j1.innerIndexPtr()[k]);
    }
    const auto s0 = derivative_structure(m.model());
    const auto s1 = derivative_structure(m.model());
    CHECK(s0.jacobian.size() == s1.jacobian.size());
    CHECK(s0.hessian.size() == s1.hessian.size());
  }
}

TEST_CASE("objective is linear plus offset") {
  const Network net = oracle::load_case("case3_ring");
  const OpfModel m = build_opf(net, PowerFlowKind::DC, CostKind::Delta);
  const auto c = m.model().objective_coefficients();
  auto x = m.model().initial_point();
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += 0.1 * static_cast<double>(i % 5);
  double dot = m.model().objective_offset();
  for (std::size_t i = 0; i < x.size(); ++i) dot += c[i] * x[i];
  CHECK(m.model().objective(x) == dot);
}

TEST_CASE("model checks") {
  ModelIR m = with_vars(1);
  CHECK_THROWS_AS(m.add_variable({"bad", 1.0, 0.0, 0.0}), BuildError);
  auto b = std::make_shared<LinearBlock>("oob", BlockKind::LinearEq);
  b->add_row({{3, 1.0}}, 0.0, 0.0);
  m.add_block(b);
  CHECK_THROWS_AS(m.check(), BuildError);
  CHECK_THROWS_AS(LinearBlock("x", BlockKind::SocCone), BuildError);
  auto e = std::make_shared<LinearBlock>("eq", BlockKind::LinearEq);
  CHECK_THROWS_AS(e->add_row({{0, 1.0}}, 0.0, 1.0), BuildError);
}

TEST_CASE("dump lists every block") {
  const Network net = oracle::load_case("case2_line");
  const OpfModel m = build_opf(net, PowerFlowKind::SOC, CostKind::Phi);
  const std::string text = dump(m.model());
  for (const auto& b : m.model().blocks()) CHECK(text.find(b->name()) != std::string::npos);
  CHECK(text.find("pg[0]") != std::string::npos);
}
