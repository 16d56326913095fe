#include "opf/formulations.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <sstream>

#include "opf/errors.hpp"

namespace opf {

std::string_view to_string(PowerFlowKind k) {
  switch (k) {
    case PowerFlowKind::AC: return "AC";
    case PowerFlowKind::SOC: return "SOC";
    case PowerFlowKind::DC: return "DC";
  }
  return "?";
}

std::string_view to_string(CostKind k) {
  switch (k) {
    case CostKind::Psi: return "Psi";
    case CostKind::Lambda: return "Lambda";
    case CostKind::Delta: return "Delta";
    case CostKind::Phi: return "Phi";
    case CostKind::Polynomial: return "Polynomial";
  }
  return "?";
}

std::optional<PowerFlowKind> parse_power_flow_kind(std::string_view s) {
  if (s == "ac") return PowerFlowKind::AC;
  if (s == "soc") return PowerFlowKind::SOC;
  if (s == "dc") return PowerFlowKind::DC;
  return std::nullopt;
}

std::optional<CostKind> parse_cost_kind(std::string_view s) {
  if (s == "psi") return CostKind::Psi;
  if (s == "lambda") return CostKind::Lambda;
  if (s == "delta") return CostKind::Delta;
  if (s == "phi") return CostKind::Phi;
  if (s == "poly") return CostKind::Polynomial;
  return std::nullopt;
}

namespace {

using cplx = std::complex<double>;

/// Pi-model admittances: S_fr = conj(ff)|V_f|^2 + conj(ft) V_f conj(V_t),
/// S_to = conj(tt)|V_t|^2 + conj(tf) V_t conj(V_f).
struct PiModel {
  cplx ff, ft, tf, tt;
};

PiModel pi_model(const Branch& br) {
  const ComplexPU ya = branch_admittance(br);
  const cplx y(ya.re, ya.im);
  const cplx ch(0.0, br.charging / 2.0);
  const double tap = br.tap();
  return {(y + ch) / (tap * tap), -y / tap, -y / tap, y + ch};
}

std::string idx(std::string_view base, int i) {
  std::ostringstream os;
  os << base << "[" << i << "]";
  return os.str();
}

double midpoint(double lo, double hi) {
  if (lo > -kInf && hi < kInf) return 0.5 * (lo + hi);
  if (lo > -kInf) return lo;
  if (hi < kInf) return hi;
  return 0.0;
}

void add_balance(PowerFlowModel& pf, const Network& net, bool reactive) {
  const auto& buses = net.buses();
  std::vector<std::vector<LinearTerm>> rows(buses.size());
  for (std::size_t i = 0; i < buses.size(); ++i) {
    for (std::size_t k : net.gens_at_bus()[i]) {
      rows[i].push_back({reactive ? pf.qg[k] : pf.pg[k], 1.0});
    }
  }
  for (std::size_t e = 0; e < net.branches().size(); ++e) {
    const auto& br = net.branches()[e];
    const auto f = static_cast<std::size_t>(net.bus_index(br.from_bus));
    const auto t = static_cast<std::size_t>(net.bus_index(br.to_bus));
    rows[f].push_back({reactive ? pf.q_fr[e] : pf.p_fr[e], -1.0});
    rows[t].push_back({reactive ? pf.q_to[e] : pf.p_to[e], -1.0});
  }
  auto block = std::make_shared<LinearBlock>(reactive ? "balance_q" : "balance_p",
                                             BlockKind::LinearEq);
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const double d = reactive ? buses[i].demand.im : buses[i].demand.re;
    block->add_row(std::move(rows[i]), d, d);
  }
  pf.model.add_block(block);
}

void add_angle_difference(PowerFlowModel& pf, const Network& net) {
  auto block = std::make_shared<LinearBlock>("angle_difference", BlockKind::LinearIneq);
  for (const auto& br : net.branches()) {
    const int f = pf.va[static_cast<std::size_t>(net.bus_index(br.from_bus))];
    const int t = pf.va[static_cast<std::size_t>(net.bus_index(br.to_bus))];
    block->add_row({{f, 1.0}, {t, -1.0}}, br.angmin, br.angmax);
  }
  pf.model.add_block(block);
}

void add_thermal(PowerFlowModel& pf, const Network& net) {
  auto block = std::make_shared<ApparentPowerBlock>("thermal_limit");
  for (std::size_t e = 0; e < net.branches().size(); ++e) {
    const auto& br = net.branches()[e];
    if (!br.has_thermal_limit()) continue;
    block->add_row(pf.p_fr[e], pf.q_fr[e], br.rate);
    block->add_row(pf.p_to[e], pf.q_to[e], br.rate);
  }
  if (block->size() > 0) pf.model.add_block(block);
}

void add_generators(PowerFlowModel& pf, const Network& net) {
  const auto& gens = net.generators();
  pf.pg.assign(gens.size(), -1);
  pf.qg.assign(gens.size(), -1);
  for (std::size_t k = 0; k < gens.size(); ++k) {
    const auto& g = gens[k];
    const int ik = static_cast<int>(k);
    pf.pg[k] = pf.model.add_variable({idx("pg", ik), g.pmin, g.pmax, midpoint(g.pmin, g.pmax)});
    if (pf.kind != PowerFlowKind::DC) {
      pf.qg[k] =
          pf.model.add_variable({idx("qg", ik), g.qmin, g.qmax, midpoint(g.qmin, g.qmax)});
    }
  }
}

void add_flow_variables(PowerFlowModel& pf, const Network& net,
                        const std::vector<BranchFlow>& init) {
  const std::size_t ne = net.branches().size();
  pf.p_fr.assign(ne, -1);
  pf.q_fr.assign(ne, -1);
  pf.p_to.assign(ne, -1);
  pf.q_to.assign(ne, -1);
  for (std::size_t e = 0; e < ne; ++e) {
    const auto& br = net.branches()[e];
    const double lim = br.has_thermal_limit() ? br.rate : kInf;
    const int ie = static_cast<int>(e);
    pf.p_fr[e] = pf.model.add_variable({idx("p_fr", ie), -lim, lim, init[e].from.re});
    pf.p_to[e] = pf.model.add_variable({idx("p_to", ie), -lim, lim, init[e].to.re});
    if (pf.kind != PowerFlowKind::DC) {
      pf.q_fr[e] = pf.model.add_variable({idx("q_fr", ie), -lim, lim, init[e].from.im});
      pf.q_to[e] = pf.model.add_variable({idx("q_to", ie), -lim, lim, init[e].to.im});
    }
  }
}

void build_ac(PowerFlowModel& pf, const Network& net) {
  const auto& buses = net.buses();
  pf.vm.assign(buses.size(), -1);
  pf.va.assign(buses.size(), -1);
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const int id = buses[i].id;
    pf.vm[i] = pf.model.add_variable({idx("vm", id), buses[i].vmin, buses[i].vmax, 1.0});
    const bool ref = static_cast<int>(i) == net.reference_bus();
    pf.va[i] = pf.model.add_variable(
        {idx("va", id), ref ? 0.0 : -kInf, ref ? 0.0 : kInf, 0.0});
  }
  add_generators(pf, net);

  std::vector<BranchFlow> init;
  std::vector<PiModel> pis;
  for (const auto& br : net.branches()) {
    const PiModel pi = pi_model(br);
    pis.push_back(pi);
    // Flows at the flat start V = 1 angle 0.
    const cplx sf = std::conj(pi.ff) + std::conj(pi.ft);
    const cplx st = std::conj(pi.tt) + std::conj(pi.tf);
    init.push_back({{sf.real(), sf.imag()}, {st.real(), st.imag()}});
  }
  add_flow_variables(pf, net, init);

  add_balance(pf, net, false);
  add_balance(pf, net, true);

  auto ohm = std::make_shared<AcFlowBlock>("ohm_polar");
  for (std::size_t e = 0; e < net.branches().size(); ++e) {
    const auto& br = net.branches()[e];
    const auto f = static_cast<std::size_t>(net.bus_index(br.from_bus));
    const auto t = static_cast<std::size_t>(net.bus_index(br.to_bus));
    const PiModel& pi = pis[e];
    ohm->add_row({pf.p_fr[e], pf.vm[f], pf.vm[t], pf.va[f], pf.va[t], pi.ff.real(),
                  pi.ft.real(), pi.ft.imag()});
    ohm->add_row({pf.q_fr[e], pf.vm[f], pf.vm[t], pf.va[f], pf.va[t], -pi.ff.imag(),
                  -pi.ft.imag(), pi.ft.real()});
    ohm->add_row({pf.p_to[e], pf.vm[t], pf.vm[f], pf.va[t], pf.va[f], pi.tt.real(),
                  pi.tf.real(), pi.tf.imag()});
    ohm->add_row({pf.q_to[e], pf.vm[t], pf.vm[f], pf.va[t], pf.va[f], -pi.tt.imag(),
                  -pi.tf.imag(), pi.tf.real()});
  }
  if (ohm->size() > 0) pf.model.add_block(ohm);
  add_thermal(pf, net);
  if (!net.branches().empty()) add_angle_difference(pf, net);
}

void build_soc(PowerFlowModel& pf, const Network& net) {
  const auto& buses = net.buses();
  const auto& branches = net.branches();
  pf.wii.assign(buses.size(), -1);
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const auto& b = buses[i];
    pf.wii[i] = pf.model.add_variable({idx("w", b.id), b.vmin * b.vmin, b.vmax * b.vmax, 1.0});
  }
  add_generators(pf, net);

  pf.wr.assign(branches.size(), -1);
  pf.wi.assign(branches.size(), -1);
  std::vector<BranchFlow> init;
  std::vector<PiModel> pis;
  for (std::size_t e = 0; e < branches.size(); ++e) {
    const auto& br = branches[e];
    const auto& bf = buses[static_cast<std::size_t>(net.bus_index(br.from_bus))];
    const auto& bt = buses[static_cast<std::size_t>(net.bus_index(br.to_bus))];
    const double vv_max = bf.vmax * bt.vmax;
    const double vv_min = bf.vmin * bt.vmin;
    const double widest = std::max(-br.angmin, br.angmax);
    const int ie = static_cast<int>(e);
    // Valid bounds for W_ij = V_f conj(V_t) implied by voltage and angle limits.
    pf.wr[e] = pf.model.add_variable({idx("wr", ie), vv_min * std::cos(widest), vv_max, 1.0});
    pf.wi[e] = pf.model.add_variable(
        {idx("wi", ie), vv_max * std::sin(br.angmin), vv_max * std::sin(br.angmax), 0.0});
    const PiModel pi = pi_model(br);
    pis.push_back(pi);
    const cplx sf = std::conj(pi.ff) + std::conj(pi.ft);
    const cplx st = std::conj(pi.tt) + std::conj(pi.tf);
    init.push_back({{sf.real(), sf.imag()}, {st.real(), st.imag()}});
  }
  add_flow_variables(pf, net, init);

  add_balance(pf, net, false);
  add_balance(pf, net, true);

  auto ohm = std::make_shared<LinearBlock>("ohm_lifted", BlockKind::LinearEq);
  auto angle = std::make_shared<LinearBlock>("angle_difference_lifted", BlockKind::LinearIneq);
  auto cone = std::make_shared<SocConeBlock>("soc_cone");
  for (std::size_t e = 0; e < branches.size(); ++e) {
    const auto& br = branches[e];
    const auto f = static_cast<std::size_t>(net.bus_index(br.from_bus));
    const auto t = static_cast<std::size_t>(net.bus_index(br.to_bus));
    const PiModel& pi = pis[e];
    const int wf = pf.wii[f], wt = pf.wii[t], wr = pf.wr[e], wi = pf.wi[e];
    ohm->add_row({{pf.p_fr[e], 1.0},
                  {wf, -pi.ff.real()},
                  {wr, -pi.ft.real()},
                  {wi, -pi.ft.imag()}},
                 0.0, 0.0);
    ohm->add_row({{pf.q_fr[e], 1.0},
                  {wf, pi.ff.imag()},
                  {wr, pi.ft.imag()},
                  {wi, -pi.ft.real()}},
                 0.0, 0.0);
    ohm->add_row({{pf.p_to[e], 1.0},
                  {wt, -pi.tt.real()},
                  {wr, -pi.tf.real()},
                  {wi, pi.tf.imag()}},
                 0.0, 0.0);
    ohm->add_row({{pf.q_to[e], 1.0},
                  {wt, pi.tt.imag()},
                  {wr, pi.tf.imag()},
                  {wi, pi.tf.real()}},
                 0.0, 0.0);
    angle->add_row({{wi, 1.0}, {wr, -std::tan(br.angmax)}}, -kInf, 0.0);
    angle->add_row({{wi, 1.0}, {wr, -std::tan(br.angmin)}}, 0.0, kInf);
    cone->add_row(wr, wi, wf, wt);
  }
  if (!branches.empty()) {
    pf.model.add_block(ohm);
    pf.model.add_block(angle);
    pf.model.add_block(cone);
  }
  add_thermal(pf, net);
}

void build_dc(PowerFlowModel& pf, const Network& net) {
  const auto& buses = net.buses();
  add_generators(pf, net);
  pf.va.assign(buses.size(), -1);
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const bool ref = static_cast<int>(i) == net.reference_bus();
    pf.va[i] = pf.model.add_variable(
        {idx("va", buses[i].id), ref ? 0.0 : -kInf, ref ? 0.0 : kInf, 0.0});
  }
  add_flow_variables(pf, net, std::vector<BranchFlow>(net.branches().size()));

  add_balance(pf, net, false);

  auto ohm = std::make_shared<LinearBlock>("ohm_dc", BlockKind::LinearEq);
  for (std::size_t e = 0; e < net.branches().size(); ++e) {
    const auto& br = net.branches()[e];
    const int f = pf.va[static_cast<std::size_t>(net.bus_index(br.from_bus))];
    const int t = pf.va[static_cast<std::size_t>(net.bus_index(br.to_bus))];
    // p_ij = -Im(y) / tap * (theta_i - theta_j); for y = 1/(jx) this is (theta_i - theta_j)/x.
    const double b = -branch_admittance(br).im / br.tap();
    ohm->add_row({{pf.p_fr[e], 1.0}, {f, -b}, {t, b}}, 0.0, 0.0);
    ohm->add_row({{pf.p_to[e], 1.0}, {t, -b}, {f, b}}, 0.0, 0.0);
  }
  if (ohm->size() > 0) pf.model.add_block(ohm);
  if (!net.branches().empty()) add_angle_difference(pf, net);
}

void require_validated(std::span<const PwlCurve> curves, const PowerFlowModel& pf) {
  if (curves.size() != pf.pg.size()) {
    throw BuildError("expected one cost curve per generator (" + std::to_string(pf.pg.size()) +
                     "), got " + std::to_string(curves.size()));
  }
  for (std::size_t k = 0; k < curves.size(); ++k) {
    if (!curves[k].validated()) {
      throw BuildError("cost curve of generator " + std::to_string(k + 1) +
                       " has not been validated");
    }
  }
}

OpfModel start_model(PowerFlowModel pf, CostKind kind, std::span<const PwlCurve> curves) {
  require_validated(curves, pf);
  OpfModel m;
  m.pf = std::move(pf);
  m.cost = kind;
  m.costs.assign(curves.begin(), curves.end());
  m.aux.assign(curves.size(), {});
  return m;
}

double initial_dispatch(const OpfModel& m, std::size_t k) {
  return m.pf.model.variable(m.pf.pg[k]).initial;
}

double clamp_to_curve(const PwlCurve& c, double x) {
  return std::clamp(x, c.min_power(), c.max_power());
}

}  // namespace

PowerFlowModel build_power_flow(const Network& net, PowerFlowKind kind) {
  const auto findings = validate_network(net);
  for (const auto& f : findings) {
    if (f.severity == Severity::Error) throw BuildError("invalid network: " + f.message);
  }
  PowerFlowModel pf;
  pf.kind = kind;
  pf.base_mva = net.base_mva();
  switch (kind) {
    case PowerFlowKind::AC: build_ac(pf, net); break;
    case PowerFlowKind::SOC: build_soc(pf, net); break;
    case PowerFlowKind::DC: build_dc(pf, net); break;
  }
  return pf;
}

std::vector<PwlCurve> prepare_curves(const Network& net, const BuildOptions& opts) {
  std::vector<PwlCurve> out;
  for (std::size_t k = 0; k < net.generators().size(); ++k) {
    const auto& g = net.generators()[k];
    const auto* curve = std::get_if<PwlCurve>(&g.cost);
    if (!curve) {
      throw BuildError("generator " + std::to_string(k + 1) +
                       " has a polynomial cost; piecewise-linear encodings need point lists");
    }
    if (opts.strict) {
      const auto v = check_assumptions(*curve, g.pmin, g.pmax);
      if (!v.empty()) {
        throw BuildError("generator " + std::to_string(k + 1) + ": " + v.front().message);
      }
      PwlCurve c = *curve;
      c.mark_validated();
      out.push_back(std::move(c));
    } else {
      // Slopes are in $/h per p.u., the tolerance is given per MW.
      out.push_back(preprocess(*curve, g.pmin, g.pmax, opts.slope_tol * net.base_mva()));
    }
  }
  return out;
}

OpfModel attach_cost_psi(PowerFlowModel pf, std::span<const PwlCurve> curves) {
  OpfModel m = start_model(std::move(pf), CostKind::Psi, curves);
  auto rows = std::make_shared<LinearBlock>("cost_psi_epigraph", BlockKind::LinearIneq);
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    double lo = kInf, hi = -kInf;
    for (const auto& p : c.points()) {
      lo = std::min(lo, p.cost);
      hi = std::max(hi, p.cost);
    }
    const double init = evaluate(c, clamp_to_curve(c, initial_dispatch(m, k)));
    const int cg = m.pf.model.add_variable({idx("cg", static_cast<int>(k)), lo, hi, init});
    m.aux[k].push_back(cg);
    m.pf.model.add_objective_term(cg, 1.0);
    const int pg = m.pf.pg[k];
    for (std::size_t l = 0; l < c.num_segments(); ++l) {
      rows->add_row({{pg, c.slopes()[l]}, {cg, -1.0}}, -kInf, -c.intercepts()[l]);
    }
  }
  m.pf.model.add_block(rows);
  return m;
}

OpfModel attach_cost_lambda(PowerFlowModel pf, std::span<const PwlCurve> curves) {
  OpfModel m = start_model(std::move(pf), CostKind::Lambda, curves);
  auto rows = std::make_shared<LinearBlock>("cost_lambda", BlockKind::LinearEq);
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    const auto pts = c.points();
    const double x0 = clamp_to_curve(c, initial_dispatch(m, k));
    std::vector<LinearTerm> link, convexity;
    for (std::size_t l = 0; l < pts.size(); ++l) {
      // Interpolation weights of the starting dispatch.
      double w = 0.0;
      if (l + 1 < pts.size() && x0 >= pts[l].power && x0 <= pts[l + 1].power) {
        w = (pts[l + 1].power - x0) / (pts[l + 1].power - pts[l].power);
      } else if (l > 0 && x0 > pts[l - 1].power && x0 <= pts[l].power) {
        w = (x0 - pts[l - 1].power) / (pts[l].power - pts[l - 1].power);
      }
      const int lam = m.pf.model.add_variable(
          {idx("lambda", static_cast<int>(k)) + "[" + std::to_string(l) + "]", 0.0, 1.0, w});
      m.aux[k].push_back(lam);
      m.pf.model.add_objective_term(lam, pts[l].cost);
      link.push_back({lam, pts[l].power});
      convexity.push_back({lam, 1.0});
    }
    link.push_back({m.pf.pg[k], -1.0});
    rows->add_row(std::move(link), 0.0, 0.0);
    rows->add_row(std::move(convexity), 1.0, 1.0);
  }
  m.pf.model.add_block(rows);
  return m;
}

OpfModel attach_cost_delta(PowerFlowModel pf, std::span<const PwlCurve> curves) {
  OpfModel m = start_model(std::move(pf), CostKind::Delta, curves);
  auto rows = std::make_shared<LinearBlock>("cost_delta_link", BlockKind::LinearEq);
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    const auto pts = c.points();
    const double x0 = clamp_to_curve(c, initial_dispatch(m, k));
    std::vector<LinearTerm> link{{m.pf.pg[k], 1.0}};
    for (std::size_t l = 0; l < c.num_segments(); ++l) {
      const double width = pts[l + 1].power - pts[l].power;
      const double fill = std::clamp(x0 - pts[l].power, 0.0, width);
      const int bin = m.pf.model.add_variable(
          {idx("dpg", static_cast<int>(k)) + "[" + std::to_string(l) + "]", 0.0, width, fill});
      m.aux[k].push_back(bin);
      m.pf.model.add_objective_term(bin, c.slopes()[l]);
      link.push_back({bin, -1.0});
    }
    m.pf.model.add_objective_constant(pts[0].cost);
    rows->add_row(std::move(link), pts[0].power, pts[0].power);
  }
  m.pf.model.add_block(rows);
  return m;
}

OpfModel attach_cost_phi(PowerFlowModel pf, std::span<const PwlCurve> curves) {
  OpfModel m = start_model(std::move(pf), CostKind::Phi, curves);
  auto rows = std::make_shared<LinearBlock>("cost_phi", BlockKind::LinearIneq);
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    const auto pts = c.points();
    const int pg = m.pf.pg[k];
    const double pmax = m.pf.model.variable(pg).upper;
    const double x0 = initial_dispatch(m, k);
    m.pf.model.add_objective_term(pg, c.slopes()[0]);
    m.pf.model.add_objective_constant(c.intercepts()[0]);
    if (c.num_points() == 2) {
      m.notes.push_back("generator " + std::to_string(k + 1) +
                        ": two-point curve, Phi encoding reduces to a linear cost");
    }
    // One excess variable per interior breakpoint.
    for (std::size_t l = 1; l + 1 < pts.size(); ++l) {
      const double start = pts[l].power;
      const int phi = m.pf.model.add_variable(
          {idx("phi", static_cast<int>(k)) + "[" + std::to_string(l) + "]", 0.0, pmax - start,
           std::max(0.0, x0 - start)});
      m.aux[k].push_back(phi);
      m.pf.model.add_objective_term(phi, c.slopes()[l] - c.slopes()[l - 1]);
      rows->add_row({{phi, 1.0}, {pg, -1.0}}, -start, kInf);
    }
  }
  if (rows->size() > 0) m.pf.model.add_block(rows);
  return m;
}

OpfModel attach_cost_polynomial(PowerFlowModel pf, std::span<const PolynomialCost> costs) {
  if (costs.size() != pf.pg.size()) {
    throw BuildError("expected one polynomial cost per generator");
  }
  OpfModel m;
  m.pf = std::move(pf);
  m.cost = CostKind::Polynomial;
  m.aux.assign(costs.size(), {});
  auto rows = std::make_shared<QuadraticBlock>("cost_polynomial_epigraph");
  const double base = m.pf.base_mva;
  for (std::size_t k = 0; k < costs.size(); ++k) {
    const auto& p = costs[k];
    if (p.c < 0.0) {
      throw BuildError("generator " + std::to_string(k + 1) + " has a non-convex quadratic cost");
    }
    m.costs.emplace_back(p);
    const int pg = m.pf.pg[k];
    // Coefficients are per MW; dispatch is in p.u.
    const double c2 = p.c * base * base;
    const double c1 = p.b * base;
    m.pf.model.add_objective_constant(p.a);
    if (p.c == 0.0) {
      m.pf.model.add_objective_term(pg, c1);
      continue;
    }
    const double x0 = m.pf.model.variable(pg).initial;
    const int cg = m.pf.model.add_variable(
        {idx("cg", static_cast<int>(k)), -kInf, kInf, c2 * x0 * x0 + c1 * x0});
    m.aux[k].push_back(cg);
    m.pf.model.add_objective_term(cg, 1.0);
    rows->add_row({{pg, c1}, {cg, -1.0}}, {{pg, pg, c2}}, -kInf, 0.0);
  }
  if (rows->size() > 0) m.pf.model.add_block(rows);
  return m;
}

OpfModel build_opf(const Network& net, PowerFlowKind pf_kind, CostKind cost,
                   const BuildOptions& opts) {
  PowerFlowModel pf = build_power_flow(net, pf_kind);
  if (cost == CostKind::Polynomial) {
    std::vector<PolynomialCost> polys;
    for (std::size_t k = 0; k < net.generators().size(); ++k) {
      const auto* p = std::get_if<PolynomialCost>(&net.generators()[k].cost);
      if (!p) {
        throw BuildError("generator " + std::to_string(k + 1) +
                         " has a piecewise-linear cost; the polynomial model needs "
                         "coefficients");
      }
      polys.push_back(*p);
    }
    return attach_cost_polynomial(std::move(pf), polys);
  }
  const auto curves = prepare_curves(net, opts);
  OpfModel m;
  switch (cost) {
    case CostKind::Psi: m = attach_cost_psi(std::move(pf), curves); break;
    case CostKind::Lambda: m = attach_cost_lambda(std::move(pf), curves); break;
    case CostKind::Delta: m = attach_cost_delta(std::move(pf), curves); break;
    case CostKind::Phi: m = attach_cost_phi(std::move(pf), curves); break;
    case CostKind::Polynomial: break;
  }
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& raw = std::get<PwlCurve>(net.generators()[k].cost);
    if (!(raw == curves[k])) {
      m.notes.push_back("generator " + std::to_string(k + 1) + ": cost curve cleaned from " +
                        std::to_string(raw.num_points()) + " to " +
                        std::to_string(curves[k].num_points()) + " points");
    }
  }
  return m;
}

OpfSolution recover_solution(const OpfModel& m, const SolveResult& result) {
  if (result.status != SolveStatus::Optimal) {
    throw Error("recover_solution: solve status is " + std::string(to_string(result.status)));
  }
  const auto& pf = m.pf;
  const auto& x = result.primal;
  if (x.size() != pf.model.num_variables()) {
    throw DimensionMismatch("recover_solution: primal vector does not match the model");
  }
  auto val = [&](int i) { return i >= 0 ? x[static_cast<std::size_t>(i)] : 0.0; };

  OpfSolution s;
  s.objective = result.objective;
  for (std::size_t k = 0; k < pf.pg.size(); ++k) s.dispatch.push_back({val(pf.pg[k]), val(pf.qg[k])});
  switch (pf.kind) {
    case PowerFlowKind::AC:
      for (std::size_t i = 0; i < pf.vm.size(); ++i) {
        s.vm.push_back(val(pf.vm[i]));
        s.va.push_back(val(pf.va[i]));
      }
      break;
    case PowerFlowKind::SOC:
      for (int w : pf.wii) {
        s.w.push_back(val(w));
        s.vm.push_back(std::sqrt(std::max(0.0, val(w))));
      }
      break;
    case PowerFlowKind::DC:
      for (int a : pf.va) {
        s.va.push_back(val(a));
        s.vm.push_back(1.0);
      }
      break;
  }
  for (std::size_t e = 0; e < pf.p_fr.size(); ++e) {
    s.flows.push_back({{val(pf.p_fr[e]), val(pf.q_fr[e])}, {val(pf.p_to[e]), val(pf.q_to[e])}});
  }

  double total = 0.0;
  for (std::size_t k = 0; k < m.costs.size(); ++k) {
    const double p = s.dispatch[k].re;
    double cost = 0.0;
    if (const auto* poly = std::get_if<PolynomialCost>(&m.costs[k])) {
      cost = evaluate_polynomial(*poly, p * pf.base_mva);
    } else {
      const auto& c = std::get<PwlCurve>(m.costs[k]);
      cost = evaluate(c, clamp_to_curve(c, p));
    }
    s.generator_cost.push_back(cost);
    total += cost;
  }
  const double diff = std::abs(total - result.objective);
  if (diff > kRecoveryTol * std::max(1.0, std::abs(result.objective))) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "recovered cost " << total << " differs from solver objective " << result.objective;
    throw RecoveryMismatch(msg.str());
  }
  return s;
}

}  // namespace opf
