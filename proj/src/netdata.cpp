#include "opf/netdata.hpp"

#include <charconv>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include "opf/errors.hpp"

namespace opf {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Row {
  int line = 0;
  std::vector<double> values;
};

struct RawCase {
  std::optional<double> base_mva;
  int base_line = 0;
  std::map<std::string, std::vector<Row>> tables;
  std::map<std::string, int> table_line;
};

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

double parse_number(std::string_view tok, int line) {
  std::string_view t = tok;
  bool neg = false;
  if (!t.empty() && (t.front() == '+' || t.front() == '-')) {
    neg = t.front() == '-';
    t.remove_prefix(1);
  }
  if (t == "Inf" || t == "inf") {
    return neg ? -std::numeric_limits<double>::infinity()
               : std::numeric_limits<double>::infinity();
  }
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || std::isnan(v)) {
    throw ParseError(line, "malformed number '" + std::string(tok) + "'");
  }
  return neg ? -v : v;
}

void split_values(std::string_view s, int line, std::vector<double>& out) {
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == ',' || s[i] == '\r')) ++i;
    if (i >= s.size()) break;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != ',' && s[j] != '\r') ++j;
    out.push_back(parse_number(s.substr(i, j - i), line));
    i = j;
  }
}

RawCase tokenize(std::string_view text) {
  RawCase raw;
  std::string current;  // table being read, empty when outside a table
  bool in_cell = false;  // skipping a {...} cell array
  std::vector<double> pending;
  int pending_line = 0;

  auto flush_row = [&](int line) {
    if (!pending.empty()) {
      raw.tables[current].push_back({pending_line ? pending_line : line, pending});
      pending.clear();
      pending_line = 0;
    }
  };

  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    if (const auto pct = line.find('%'); pct != std::string_view::npos) {
      line = line.substr(0, pct);
    }
    line = trim(line);
    if (line.empty()) continue;

    if (in_cell) {
      if (line.find('}') != std::string_view::npos) in_cell = false;
      continue;
    }

    if (current.empty()) {
      if (line.rfind("function", 0) == 0) continue;
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ParseError(line_no, "unexpected text '" + std::string(line) + "'");
      }
      std::string_view lhs = trim(line.substr(0, eq));
      std::string_view rhs = trim(line.substr(eq + 1));
      if (lhs.rfind("mpc.", 0) != 0) {
        throw ParseError(line_no, "expected an mpc.<field> assignment");
      }
      lhs.remove_prefix(4);
      const std::string field(lhs);
      if (!rhs.empty() && rhs.front() == '{') {
        if (rhs.find('}') == std::string_view::npos) in_cell = true;
        continue;
      }
      if (!rhs.empty() && rhs.front() == '[') {
        current = field;
        raw.tables[current];
        raw.table_line[current] = line_no;
        rhs.remove_prefix(1);
        line = rhs;
        // fall through to row handling for data on the opening line
      } else {
        if (field == "baseMVA") {
          std::string_view v = rhs;
          if (!v.empty() && v.back() == ';') v.remove_suffix(1);
          raw.base_mva = parse_number(trim(v), line_no);
          raw.base_line = line_no;
        }
        continue;  // version strings and other scalars
      }
    }

    // Inside a numeric table.
    std::string_view rest = line;
    while (!rest.empty()) {
      const auto stop = rest.find_first_of(";]");
      const std::string_view chunk = rest.substr(0, stop);
      if (pending.empty()) pending_line = line_no;
      split_values(chunk, line_no, pending);
      if (stop == std::string_view::npos) {
        break;
      }
      if (rest[stop] == ';') {
        flush_row(line_no);
        rest = trim(rest.substr(stop + 1));
      } else {  // ']'
        flush_row(line_no);
        current.clear();
        rest = trim(rest.substr(stop + 1));
        if (!rest.empty() && rest.front() == ';') rest.remove_prefix(1);
        if (!trim(rest).empty()) {
          throw ParseError(line_no, "unexpected text after table end");
        }
        break;
      }
    }
    if (!current.empty()) flush_row(line_no);  // newline ends a row
  }
  if (!current.empty()) {
    throw ParseError(line_no, "table mpc." + current + " is not terminated");
  }
  return raw;
}

const std::vector<Row>& require_table(const RawCase& raw, const std::string& name,
                                      std::size_t min_cols) {
  const auto it = raw.tables.find(name);
  if (it == raw.tables.end()) {
    throw ParseError(0, "missing table mpc." + name);
  }
  for (const auto& row : it->second) {
    if (row.values.size() < min_cols) {
      throw ParseError(row.line, "mpc." + name + " row has " +
                                     std::to_string(row.values.size()) +
                                     " columns, expected at least " +
                                     std::to_string(min_cols));
    }
  }
  return it->second;
}

int as_int(double v, int line, const char* what) {
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw ParseError(line, std::string(what) + " must be an integer");
  }
  return static_cast<int>(v);
}

CostSpec parse_cost(const Row& row, double base) {
  const auto& v = row.values;
  const int model = as_int(v[0], row.line, "gencost model");
  const int n = as_int(v[3], row.line, "gencost point count");
  if (n < 0) throw ParseError(row.line, "negative gencost count");
  if (model == 1) {
    if (v.size() < 4 + 2 * static_cast<std::size_t>(n)) {
      throw ParseError(row.line, "gencost row declares " + std::to_string(n) +
                                     " points but has fewer values");
    }
    std::vector<CostPoint> pts;
    for (int i = 0; i < n; ++i) {
      pts.push_back({v[4 + 2 * i] / base, v[5 + 2 * i]});
    }
    try {
      return PwlCurve(std::move(pts));
    } catch (const DegenerateSegment& e) {
      throw DegenerateSegment("line " + std::to_string(row.line) + ": " + e.what());
    }
  }
  if (model == 2) {
    if (v.size() < 4 + static_cast<std::size_t>(n)) {
      throw ParseError(row.line, "gencost row declares " + std::to_string(n) +
                                     " coefficients but has fewer values");
    }
    if (n > 3) {
      throw UnsupportedFeature("line " + std::to_string(row.line) +
                               ": polynomial costs above degree 2 are not supported");
    }
    PolynomialCost p;
    // Highest degree first.
    double* slots[] = {&p.c, &p.b, &p.a};
    for (int i = 0; i < n; ++i) *slots[3 - n + i] = v[4 + i];
    return p;
  }
  throw UnsupportedFeature("line " + std::to_string(row.line) + ": unknown cost model " +
                           std::to_string(model));
}

// Bounds beyond +-90 degrees (Matpower uses +-360 for "none") count as absent.
bool angle_absent(double deg) { return std::abs(deg) >= 90.0; }

// Smallest adjustment of `guess` such that forward(result) == target.
template <typename Forward>
double invert_exact(double target, double guess, Forward forward) {
  if (!std::isfinite(target)) return guess;
  double x = guess;
  for (int i = 0; i < 64; ++i) {
    const double y = forward(x);
    if (y == target) return x;
    x = std::nextafter(x, y < target ? std::numeric_limits<double>::infinity()
                                     : -std::numeric_limits<double>::infinity());
  }
  return guess;
}

}  // namespace

Network::Network(double base_mva, std::vector<Bus> buses, std::vector<Branch> branches,
                 std::vector<Generator> generators)
    : base_mva_(base_mva),
      buses_(std::move(buses)),
      branches_(std::move(branches)),
      generators_(std::move(generators)) {
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    bus_pos_.emplace(buses_[i].id, static_cast<int>(i));  // first occurrence wins
  }
  gens_at_bus_.assign(buses_.size(), {});
  for (std::size_t k = 0; k < generators_.size(); ++k) {
    const int b = bus_index(generators_[k].bus);
    if (b >= 0) gens_at_bus_[static_cast<std::size_t>(b)].push_back(k);
  }
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    if (buses_[i].type == BusType::Reference) {
      reference_bus_ = static_cast<int>(i);
      reference_from_data_ = true;
      break;
    }
  }
  if (reference_bus_ < 0) {
    int best_id = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < buses_.size(); ++i) {
      if (!gens_at_bus_[i].empty() && buses_[i].id < best_id) {
        best_id = buses_[i].id;
        reference_bus_ = static_cast<int>(i);
      }
    }
    if (reference_bus_ < 0 && !buses_.empty()) reference_bus_ = 0;
  }
}

int Network::bus_index(int id) const {
  const auto it = bus_pos_.find(id);
  return it == bus_pos_.end() ? -1 : it->second;
}

Network parse_case(std::string_view text) {
  const RawCase raw = tokenize(text);
  if (!raw.base_mva) throw ParseError(0, "missing mpc.baseMVA");
  const double base = *raw.base_mva;
  if (!(base > 0.0) || !std::isfinite(base)) {
    throw ParseError(raw.base_line, "baseMVA must be positive");
  }

  std::vector<Bus> buses;
  for (const auto& row : require_table(raw, "bus", 13)) {
    const auto& v = row.values;
    Bus b;
    b.id = as_int(v[0], row.line, "bus id");
    if (b.id <= 0) throw ParseError(row.line, "bus id must be positive");
    const int type = as_int(v[1], row.line, "bus type");
    if (type < 1 || type > 4) throw ParseError(row.line, "bus type must be 1..4");
    b.type = static_cast<BusType>(type);
    b.demand = {v[2] / base, v[3] / base};
    if (v[4] != 0.0 || v[5] != 0.0) {
      throw UnsupportedFeature("line " + std::to_string(row.line) + ": bus " +
                               std::to_string(b.id) + " has a shunt (Gs/Bs)");
    }
    b.vmax = v[11];
    b.vmin = v[12];
    if (!(b.vmin > 0.0) || b.vmin > b.vmax) {
      throw ParseError(row.line, "bus voltage bounds require 0 < Vmin <= Vmax");
    }
    buses.push_back(b);
  }

  const auto& gen_rows = require_table(raw, "gen", 10);
  const auto& cost_rows = require_table(raw, "gencost", 4);
  if (cost_rows.size() != gen_rows.size()) {
    throw StructuralError("mpc.gencost has " + std::to_string(cost_rows.size()) +
                          " rows but mpc.gen has " + std::to_string(gen_rows.size()));
  }
  std::vector<Generator> gens;
  for (std::size_t k = 0; k < gen_rows.size(); ++k) {
    const auto& row = gen_rows[k];
    const auto& v = row.values;
    const bool in_service = v.size() < 8 || v[7] > 0.0;
    CostSpec cost = parse_cost(cost_rows[k], base);
    if (!in_service) continue;
    Generator g;
    g.bus = as_int(v[0], row.line, "generator bus");
    g.qmax = v[3] / base;
    g.qmin = v[4] / base;
    g.pmax = v[8] / base;
    g.pmin = v[9] / base;
    if (g.pmin > g.pmax) throw ParseError(row.line, "generator Pmin exceeds Pmax");
    if (g.qmin > g.qmax) throw ParseError(row.line, "generator Qmin exceeds Qmax");
    g.cost = std::move(cost);
    gens.push_back(std::move(g));
  }

  std::vector<Branch> branches;
  for (const auto& row : require_table(raw, "branch", 11)) {
    const auto& v = row.values;
    if (v[10] <= 0.0) continue;  // out of service
    Branch br;
    br.from_bus = as_int(v[0], row.line, "branch from bus");
    br.to_bus = as_int(v[1], row.line, "branch to bus");
    br.series_impedance = {v[2], v[3]};
    br.charging = v[4];
    br.rate = v[5] / base;
    br.tap_ratio = v[8];
    if (v[9] != 0.0) {
      throw UnsupportedFeature("line " + std::to_string(row.line) +
                               ": phase-shifting transformers are not supported");
    }
    if (br.tap_ratio < 0.0) throw ParseError(row.line, "negative tap ratio");
    if (br.rate < 0.0) throw ParseError(row.line, "negative thermal rating");
    const double amin = v.size() > 11 ? v[11] : 0.0;
    const double amax = v.size() > 12 ? v[12] : 0.0;
    const bool none = amin == 0.0 && amax == 0.0;
    br.angmin = none || angle_absent(amin) ? -kDefaultAngleBound : amin * kDegToRad;
    br.angmax = none || angle_absent(amax) ? kDefaultAngleBound : amax * kDegToRad;
    br.angle_bounds_defaulted = none || angle_absent(amin) || angle_absent(amax);
    if (br.angmin > 0.0 || br.angmax < 0.0) {
      throw StructuralError("line " + std::to_string(row.line) +
                            ": angle-difference bounds must satisfy angmin <= 0 <= angmax");
    }
    branches.push_back(br);
  }

  return Network(base, std::move(buses), std::move(branches), std::move(gens));
}

Network read_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open case file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_case(ss.str());
}

double to_engineering(double pu, double base) {
  return invert_exact(pu, pu * base, [base](double mw) { return mw / base; });
}

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_degrees(double rad) {
  return invert_exact(rad, rad / kDegToRad, [](double d) { return d * kDegToRad; });
}

std::string angle_field(const Branch& br, double rad, double absent) {
  if (br.angle_bounds_defaulted && std::abs(rad) == kDefaultAngleBound) return num(absent);
  return num(to_degrees(rad));
}

}  // namespace

std::string write_case(const Network& net, std::string_view name) {
  const double base = net.base_mva();
  std::ostringstream out;
  out << "function mpc = " << name << "\n";
  out << "mpc.version = '2';\n";
  out << "mpc.baseMVA = " << num(base) << ";\n\n";

  out << "%% bus data\n";
  out << "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\n";
  out << "mpc.bus = [\n";
  for (const auto& b : net.buses()) {
    out << "\t" << b.id << "\t" << static_cast<int>(b.type) << "\t"
        << num(to_engineering(b.demand.re, base)) << "\t"
        << num(to_engineering(b.demand.im, base)) << "\t0\t0\t1\t1\t0\t1\t1\t" << num(b.vmax)
        << "\t" << num(b.vmin) << ";\n";
  }
  out << "];\n\n";

  out << "%% generator data\n";
  out << "%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\n";
  out << "mpc.gen = [\n";
  for (const auto& g : net.generators()) {
    out << "\t" << g.bus << "\t0\t0\t" << num(to_engineering(g.qmax, base)) << "\t"
        << num(to_engineering(g.qmin, base)) << "\t1\t" << num(base) << "\t1\t"
        << num(to_engineering(g.pmax, base)) << "\t" << num(to_engineering(g.pmin, base))
        << ";\n";
  }
  out << "];\n\n";

  out << "%% branch data\n";
  out << "%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax\n";
  out << "mpc.branch = [\n";
  for (const auto& br : net.branches()) {
    const std::string rate = num(to_engineering(br.rate, base));
    out << "\t" << br.from_bus << "\t" << br.to_bus << "\t" << num(br.series_impedance.re)
        << "\t" << num(br.series_impedance.im) << "\t" << num(br.charging) << "\t" << rate
        << "\t" << rate << "\t" << rate << "\t" << num(br.tap_ratio) << "\t0\t1\t"
        << angle_field(br, br.angmin, -360.0) << "\t" << angle_field(br, br.angmax, 360.0)
        << ";\n";
  }
  out << "];\n\n";

  out << "%% generator cost data\n";
  out << "mpc.gencost = [\n";
  for (const auto& g : net.generators()) {
    if (const auto* poly = std::get_if<PolynomialCost>(&g.cost)) {
      out << "\t2\t0\t0\t3\t" << num(poly->c) << "\t" << num(poly->b) << "\t" << num(poly->a)
          << ";\n";
    } else {
      const auto& curve = std::get<PwlCurve>(g.cost);
      out << "\t1\t0\t0\t" << curve.num_points();
      for (const auto& p : curve.points()) {
        out << "\t" << num(to_engineering(p.power, base)) << "\t" << num(p.cost);
      }
      out << ";\n";
    }
  }
  out << "];\n";
  return out.str();
}

ComplexPU branch_admittance(const Branch& b) {
  const std::complex<double> z(b.series_impedance.re, b.series_impedance.im);
  if (std::abs(z) == 0.0) {
    throw SingularBranch("branch " + std::to_string(b.from_bus) + "-" +
                         std::to_string(b.to_bus) + " has zero series impedance");
  }
  const auto y = 1.0 / z;
  return {y.real(), y.imag()};
}

std::vector<Finding> validate_network(const Network& net) {
  std::vector<Finding> out;
  auto warn = [&](std::string m) { out.push_back({Severity::Warning, std::move(m)}); };
  auto error = [&](std::string m) { out.push_back({Severity::Error, std::move(m)}); };

  std::set<int> seen;
  for (const auto& b : net.buses()) {
    if (!seen.insert(b.id).second) error("duplicate bus id " + std::to_string(b.id));
  }

  std::vector<int> degree(net.buses().size(), 0);
  for (std::size_t e = 0; e < net.branches().size(); ++e) {
    const auto& br = net.branches()[e];
    const std::string tag = "branch " + std::to_string(e + 1) + " (" +
                            std::to_string(br.from_bus) + "-" + std::to_string(br.to_bus) +
                            ")";
    const int f = net.bus_index(br.from_bus);
    const int t = net.bus_index(br.to_bus);
    if (f < 0 || t < 0) {
      error("dangling branch endpoint: " + tag);
      continue;
    }
    if (f == t) error("branch connects a bus to itself: " + tag);
    ++degree[static_cast<std::size_t>(f)];
    ++degree[static_cast<std::size_t>(t)];
    if (br.series_impedance.re == 0.0 && br.series_impedance.im == 0.0) {
      error("zero series impedance: " + tag);
    }
    if (!br.has_thermal_limit()) warn("thermal limit treated as unlimited: " + tag);
    if (br.angle_bounds_defaulted) {
      warn("default +-30 degree angle-difference bounds: " + tag);
    }
  }

  if (net.buses().size() > 1) {
    for (std::size_t i = 0; i < net.buses().size(); ++i) {
      if (degree[i] == 0) warn("isolated bus " + std::to_string(net.buses()[i].id));
    }
  }

  for (std::size_t k = 0; k < net.generators().size(); ++k) {
    const auto& g = net.generators()[k];
    const std::string tag = "generator " + std::to_string(k + 1);
    if (net.bus_index(g.bus) < 0) {
      error("dangling generator bus: " + tag + " references bus " + std::to_string(g.bus));
    }
    if (g.pmin > g.pmax) error("pmin exceeds pmax: " + tag);
    if (g.qmin > g.qmax) error("qmin exceeds qmax: " + tag);
    if (const auto* poly = std::get_if<PolynomialCost>(&g.cost)) {
      if (poly->c < 0.0) error("non-convex quadratic cost: " + tag);
    } else {
      const auto& curve = std::get<PwlCurve>(g.cost);
      const auto s = curve.slopes();
      for (std::size_t l = 1; l < s.size(); ++l) {
        if (s[l] < s[l - 1] - kDefaultSlopeTol) {
          error("non-convex piecewise-linear cost: " + tag);
          break;
        }
      }
    }
  }

  if (net.buses().empty()) {
    error("network has no buses");
  } else if (!net.reference_from_data()) {
    warn("no reference bus in data; using bus " +
         std::to_string(net.buses()[static_cast<std::size_t>(net.reference_bus())].id));
  }
  return out;
}

bool has_errors(const std::vector<Finding>& findings) {
  for (const auto& f : findings) {
    if (f.severity == Severity::Error) return true;
  }
  return false;
}

}  // namespace opf
