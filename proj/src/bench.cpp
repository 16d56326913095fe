#include "opf/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "opf/errors.hpp"

namespace opf {

void BenchConfig::check() const {
  if (trials < 1) throw std::invalid_argument("trials must be at least 1");
  for (CostKind c : costs) {
    if (c == CostKind::Polynomial) {
      throw std::invalid_argument("bench compares piecewise-linear encodings only");
    }
  }
  solver.check();
}

std::size_t encoding_index(CostKind k) {
  for (std::size_t i = 0; i < std::size(kPwlEncodings); ++i) {
    if (kPwlEncodings[i] == k) return i;
  }
  throw std::invalid_argument("not a piecewise-linear encoding: " + std::string(to_string(k)));
}

std::array<double, 4> runtime_ratio(const EncodingTimes& times) {
  double best = kInf;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!times[i]) {
      throw IncompleteCell("no runtime for encoding " +
                           std::string(to_string(kPwlEncodings[i])));
    }
    if (!(*times[i] > 0.0)) throw DomainError("runtimes must be positive");
    best = std::min(best, *times[i]);
  }
  std::array<double, 4> out{};
  for (std::size_t i = 0; i < times.size(); ++i) out[i] = *times[i] / best;
  return out;
}

void finalize_row(BenchRow& row) {
  row.deltas = {};
  row.ratios.reset();
  row.fastest.reset();
  const auto& ref = row.cells[encoding_index(CostKind::Lambda)];
  EncodingTimes times;
  bool all_optimal = true;
  for (std::size_t i = 0; i < row.cells.size(); ++i) {
    const auto& c = row.cells[i];
    if (c && c->optimal) {
      times[i] = std::max(c->seconds, 1e-9);
      if (ref && ref->optimal) row.deltas[i] = c->objective - ref->objective;
    } else {
      all_optimal = false;
    }
  }
  if (!all_optimal) return;
  row.ratios = runtime_ratio(times);
  for (std::size_t i = 0; i < row.ratios->size(); ++i) {
    if ((*row.ratios)[i] == 1.0) {
      row.fastest = kPwlEncodings[i];
      break;
    }
  }
}

namespace {

double statistic(std::vector<double> v, TimingStatistic s) {
  std::sort(v.begin(), v.end());
  if (s == TimingStatistic::Min) return v.front();
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

BenchCell run_cell(const Network& net, PowerFlowKind pf, CostKind cost,
                   const BenchConfig& cfg) {
  BenchCell cell;
  cell.cost = cost;
  OpfModel model;
  try {
    model = build_opf(net, pf, cost);
  } catch (const Error& e) {
    cell.status = "BuildError";
    cell.message = e.what();
    return cell;
  }
  std::vector<double> seconds;
  SolveResult first;
  for (int t = 0; t < cfg.trials; ++t) {
    const auto start = std::chrono::steady_clock::now();
    SolveOutput out = solve(model.model(), cfg.solver);
    const auto stop = std::chrono::steady_clock::now();
    seconds.push_back(std::chrono::duration<double>(stop - start).count());
    if (t == 0) first = std::move(out.result);
  }
  cell.status = std::string(to_string(first.status));
  cell.objective = first.objective;
  cell.iterations = first.iterations;
  cell.seconds = statistic(seconds, cfg.statistic);
  cell.message = first.message;
  if (first.status != SolveStatus::Optimal) return cell;
  try {
    recover_solution(model, first);
    cell.optimal = true;
  } catch (const RecoveryMismatch& e) {
    cell.status = "RecoveryMismatch";
    cell.message = e.what();
  }
  return cell;
}

}  // namespace

BenchReport run_suite(const BenchConfig& cfg) {
  cfg.check();
  BenchReport report;
  for (const auto& path : cfg.cases) {
    const Network net = read_case_file(path);
    for (const auto& f : validate_network(net)) {
      if (f.severity == Severity::Error) {
        throw StructuralError(path + ": " + f.message);
      }
    }
    const std::string name = std::filesystem::path(path).stem().string();
    std::optional<double> ac_obj, soc_obj;
    for (PowerFlowKind pf : cfg.power_flows) {
      BenchRow row;
      row.case_name = name;
      row.pf = pf;
      row.buses = net.buses().size();
      row.branches = net.branches().size();
      for (CostKind c : cfg.costs) row.cells[encoding_index(c)] = run_cell(net, pf, c, cfg);
      finalize_row(row);
      const auto& ref = row.cell(CostKind::Lambda);
      if (ref && ref->optimal) {
        if (pf == PowerFlowKind::AC) ac_obj = ref->objective;
        if (pf == PowerFlowKind::SOC) soc_obj = ref->objective;
      }
      report.rows.push_back(std::move(row));
    }
    if (ac_obj && soc_obj && *soc_obj > *ac_obj + 1e-6 * std::abs(*ac_obj)) {
      report.bound_violations.push_back(name);
    }
  }
  return report;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Column order: lambda first, then delta, phi, psi.
constexpr CostKind kColumnOrder[] = {CostKind::Lambda, CostKind::Delta, CostKind::Phi,
                                     CostKind::Psi};

std::vector<std::string> header() {
  std::vector<std::string> h{"case", "pf", "N", "E", "obj_lambda"};
  for (CostKind c : kColumnOrder) {
    if (c != CostKind::Lambda) h.push_back("delta_" + lower(to_string(c)));
  }
  for (CostKind c : kColumnOrder) h.push_back("t_" + lower(to_string(c)));
  for (CostKind c : kColumnOrder) h.push_back("ratio_" + lower(to_string(c)));
  for (CostKind c : kColumnOrder) h.push_back("iters_" + lower(to_string(c)));
  return h;
}

std::vector<std::string> fields(const BenchRow& row) {
  std::vector<std::string> f{row.case_name, std::string(to_string(row.pf)),
                             std::to_string(row.buses), std::to_string(row.branches)};
  auto status_or = [&](CostKind c, auto&& value) -> std::string {
    const auto& cell = row.cell(c);
    if (!cell) return "";
    if (!cell->optimal) return cell->status;
    return value(*cell);
  };
  f.push_back(status_or(CostKind::Lambda, [](const BenchCell& c) { return num(c.objective); }));
  for (CostKind c : kColumnOrder) {
    if (c == CostKind::Lambda) continue;
    const auto& d = row.deltas[encoding_index(c)];
    f.push_back(status_or(c, [&](const BenchCell&) { return d ? num(*d) : ""; }));
  }
  for (CostKind c : kColumnOrder) {
    const auto& cell = row.cell(c);
    f.push_back(cell && cell->optimal ? num(cell->seconds) : "");
  }
  for (CostKind c : kColumnOrder) {
    f.push_back(row.ratios ? num((*row.ratios)[encoding_index(c)]) : "");
  }
  for (CostKind c : kColumnOrder) {
    const auto& cell = row.cell(c);
    f.push_back(cell && cell->status != "BuildError" ? std::to_string(cell->iterations) : "");
  }
  return f;
}

std::string join(const std::vector<std::string>& v, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

}  // namespace

std::string render_report(const BenchReport& r, ReportFormat format) {
  std::ostringstream os;
  const auto h = header();
  if (format == ReportFormat::Csv) {
    os << join(h, ",") << "\n";
    for (const auto& row : r.rows) os << join(fields(row), ",") << "\n";
    return os.str();
  }
  os << "Runtimes are solve-only wall-clock seconds; model build time is excluded.\n\n";
  os << "| " << join(h, " | ") << " |\n";
  os << "|";
  for (std::size_t i = 0; i < h.size(); ++i) os << "---|";
  os << "\n";
  for (const auto& row : r.rows) os << "| " << join(fields(row), " | ") << " |\n";
  if (!r.bound_violations.empty()) {
    os << "\nSOC objective above AC objective: " << join(r.bound_violations, ", ") << "\n";
  }
  return os.str();
}

}  // namespace opf
