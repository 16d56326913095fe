#include <glob.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "opf/bench.hpp"
#include "opf/errors.hpp"
#include "opf/formulations.hpp"
#include "opf/netdata.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kNonOptimal = 1;
constexpr int kInputError = 2;

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> expand(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  ::globfree(&g);
  return out;
}

int cmd_validate(const std::string& path) {
  const opf::Network net = opf::read_case_file(path);
  const auto findings = opf::validate_network(net);
  std::printf("%zu buses, %zu branches, %zu generators, base %g MVA\n", net.buses().size(),
              net.branches().size(), net.generators().size(), net.base_mva());
  for (const auto& f : findings) {
    std::printf("%s: %s\n", f.severity == opf::Severity::Error ? "error" : "warning",
                f.message.c_str());
  }
  return opf::has_errors(findings) ? kInputError : kOk;
}

void print_curve(const opf::PwlCurve& c, double base) {
  for (const auto& p : c.points()) std::printf(" (%g MW, %g)", p.power * base, p.cost);
  std::printf("\n");
}

int cmd_preprocess(const std::string& path, double slope_tol) {
  const opf::Network net = opf::read_case_file(path);
  int status = kOk;
  for (std::size_t k = 0; k < net.generators().size(); ++k) {
    const auto& g = net.generators()[k];
    const auto* curve = std::get_if<opf::PwlCurve>(&g.cost);
    if (!curve) {
      std::printf("gen %zu: polynomial cost\n", k + 1);
      continue;
    }
    std::printf("gen %zu raw: ", k + 1);
    print_curve(*curve, net.base_mva());
    for (const auto& v : opf::check_assumptions(*curve, g.pmin, g.pmax)) {
      std::printf("  violates: %s\n", v.message.c_str());
    }
    try {
      const auto clean = opf::preprocess(*curve, g.pmin, g.pmax, slope_tol * net.base_mva());
      std::printf("gen %zu clean:", k + 1);
      print_curve(clean, net.base_mva());
    } catch (const opf::ConvexityError& e) {
      std::printf("gen %zu rejected: %s\n", k + 1, e.what());
      status = kInputError;
    }
  }
  return status;
}

struct SolveArgs {
  std::string path;
  std::string pf = "ac";
  std::string cost = "lambda";
  double tol = 1e-6;
  int max_iter = 500;
  std::string log_path;
};

int cmd_solve(const SolveArgs& a) {
  const auto pf = opf::parse_power_flow_kind(a.pf);
  const auto cost = opf::parse_cost_kind(a.cost);
  if (!pf || !cost) {
    std::cerr << "unknown --pf or --cost value\n";
    return kInputError;
  }
  const opf::Network net = opf::read_case_file(a.path);
  const opf::OpfModel model = opf::build_opf(net, *pf, *cost);
  for (const auto& note : model.notes) std::printf("note: %s\n", note.c_str());
  opf::SolverOptions opts;
  opts.tol = a.tol;
  opts.max_iter = a.max_iter;
  opts.check();
  const auto out = opf::solve(model.model(), opts);
  const auto& r = out.result;
  if (!a.log_path.empty()) {
    std::ofstream log(a.log_path);
    if (!log) throw std::runtime_error("cannot write " + a.log_path);
    out.log.write_csv(log);
  }
  std::printf("status: %s\n", std::string(opf::to_string(r.status)).c_str());
  if (!r.message.empty()) std::printf("message: %s\n", r.message.c_str());
  std::printf("iterations: %d\nsolve time: %.6f s\n", r.iterations, r.wall_time);
  std::printf("variables: %zu, rows: %zu\n", model.model().num_variables(),
              model.model().num_rows());
  if (r.status != opf::SolveStatus::Optimal) return kNonOptimal;
  const auto sol = opf::recover_solution(model, r);
  std::printf("objective: %.10g\nkkt residual: %.3e\n", r.objective, r.kkt_residual);
  const double base = net.base_mva();
  for (std::size_t k = 0; k < sol.dispatch.size(); ++k) {
    std::printf("gen %zu: pg %.6g MW, qg %.6g MVAr, cost %.8g\n", k + 1,
                sol.dispatch[k].re * base, sol.dispatch[k].im * base, sol.generator_cost[k]);
  }
  return kOk;
}

struct BenchArgs {
  std::string cases;
  std::string pf = "ac,soc,dc";
  std::string cost = "psi,lambda,delta,phi";
  int trials = 5;
  std::string out;
  std::string format = "csv";
  std::string statistic = "median";
};

int cmd_bench(const BenchArgs& a) {
  opf::BenchConfig cfg;
  cfg.cases = expand(a.cases);
  if (cfg.cases.empty()) {
    std::cerr << "no case files match " << a.cases << "\n";
    return kInputError;
  }
  cfg.power_flows.clear();
  for (const auto& s : split(a.pf)) {
    const auto k = opf::parse_power_flow_kind(s);
    if (!k) {
      std::cerr << "unknown power flow " << s << "\n";
      return kInputError;
    }
    cfg.power_flows.push_back(*k);
  }
  cfg.costs.clear();
  for (const auto& s : split(a.cost)) {
    const auto k = opf::parse_cost_kind(s);
    if (!k) {
      std::cerr << "unknown cost encoding " << s << "\n";
      return kInputError;
    }
    cfg.costs.push_back(*k);
  }
  cfg.trials = a.trials;
  cfg.statistic =
      a.statistic == "min" ? opf::TimingStatistic::Min : opf::TimingStatistic::Median;
  const auto fmt = a.format == "md" ? opf::ReportFormat::Markdown : opf::ReportFormat::Csv;
  const auto report = opf::run_suite(cfg);
  const std::string text = opf::render_report(report, fmt);
  if (a.out.empty() || a.out == "-") {
    std::cout << text;
  } else {
    std::ofstream os(a.out);
    if (!os) throw std::runtime_error("cannot write " + a.out);
    os << text;
  }
  for (const auto& row : report.rows) {
    for (const auto& c : row.cells) {
      if (c && !c->optimal) return kNonOptimal;
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal power flow formulation workbench"};
  app.require_subcommand(1);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Parse a case and report findings");
  validate->add_option("case", validate_path)->required();

  std::string pre_path;
  double slope_tol = opf::kDefaultSlopeTol;
  auto* pre = app.add_subcommand("preprocess", "Show cost curves before and after cleaning");
  pre->add_option("case", pre_path)->required();
  pre->add_option("--slope-tol", slope_tol, "Slope merge tolerance in $/MWh");

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Build and solve one formulation");
  solve->add_option("case", sa.path)->required();
  solve->add_option("--pf", sa.pf)->check(CLI::IsMember({"ac", "soc", "dc"}));
  solve->add_option("--cost", sa.cost)
      ->check(CLI::IsMember({"psi", "lambda", "delta", "phi", "poly"}));
  solve->add_option("--tol", sa.tol);
  solve->add_option("--max-iter", sa.max_iter);
  solve->add_option("--log-iters", sa.log_path, "Write the iteration log as CSV");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Run the formulation grid over a set of cases");
  bench->add_option("--cases", ba.cases, "Glob of case files")->required();
  bench->add_option("--pf", ba.pf, "Comma-separated list of ac, soc, dc");
  bench->add_option("--cost", ba.cost, "Comma-separated list of psi, lambda, delta, phi");
  bench->add_option("--trials", ba.trials)->check(CLI::PositiveNumber);
  bench->add_option("--out", ba.out);
  bench->add_option("--format", ba.format)->check(CLI::IsMember({"csv", "md"}));
  bench->add_option("--statistic", ba.statistic)->check(CLI::IsMember({"median", "min"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (*validate) return cmd_validate(validate_path);
    if (*pre) return cmd_preprocess(pre_path, slope_tol);
    if (*solve) return cmd_solve(sa);
    if (*bench) return cmd_bench(ba);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kOk;
}
