#include "opf/modelir.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "opf/errors.hpp"

namespace opf {

namespace {

Entry lower_entry(int a, int b) { return a >= b ? Entry{a, b} : Entry{b, a}; }

double at(std::span<const double> x, int i) { return x[static_cast<std::size_t>(i)]; }

void print_bound(std::ostream& os, double v) {
  if (v == kInf) {
    os << "+inf";
  } else if (v == -kInf) {
    os << "-inf";
  } else {
    os << v;
  }
}

void print_range(std::ostream& os, double lo, double hi) {
  os << "  in [";
  print_bound(os, lo);
  os << ", ";
  print_bound(os, hi);
  os << "]";
}

}  // namespace

std::string_view to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::LinearEq: return "LinearEq";
    case BlockKind::LinearIneq: return "LinearIneq";
    case BlockKind::QuadraticIneq: return "QuadraticIneq";
    case BlockKind::SocCone: return "SocCone";
    case BlockKind::AcFlowPolar: return "AcFlowPolar";
    case BlockKind::ApparentPowerLimit: return "ApparentPowerLimit";
  }
  return "?";
}

// ---------------------------------------------------------------- linear

LinearBlock::LinearBlock(std::string name, BlockKind kind)
    : ConstraintBlock(std::move(name)), kind_(kind) {
  if (kind != BlockKind::LinearEq && kind != BlockKind::LinearIneq) {
    throw BuildError("LinearBlock kind must be LinearEq or LinearIneq");
  }
}

void LinearBlock::add_row(std::vector<LinearTerm> terms, double lower, double upper) {
  if (kind_ == BlockKind::LinearEq && lower != upper) {
    throw BuildError("equality row '" + name() + "' needs lower == upper");
  }
  rows_.push_back(std::move(terms));
  add_range(lower, upper);
}

void LinearBlock::eval(std::span<const double> x, std::span<double> body) const {
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    double s = 0.0;
    for (const auto& t : rows_[r]) s += t.coef * at(x, t.var);
    body[r] = s;
  }
}

std::vector<Entry> LinearBlock::jacobian_structure() const {
  std::vector<Entry> out;
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    for (const auto& t : rows_[r]) out.push_back({static_cast<int>(r), t.var});
  }
  return out;
}

void LinearBlock::jacobian_values(std::span<const double>, std::span<double> vals) const {
  std::size_t k = 0;
  for (const auto& row : rows_) {
    for (const auto& t : row) vals[k++] = t.coef;
  }
}

int LinearBlock::max_variable() const {
  int m = -1;
  for (const auto& row : rows_) {
    for (const auto& t : row) m = std::max(m, t.var);
  }
  return m;
}

void LinearBlock::dump_row(std::ostream& os, std::size_t r) const {
  for (const auto& t : rows_[r]) os << " " << (t.coef < 0 ? "- " : "+ ") << std::abs(t.coef)
                                    << "*x" << t.var;
  print_range(os, lower(r), upper(r));
}

// ------------------------------------------------------------- quadratic

void QuadraticBlock::add_row(std::vector<LinearTerm> linear, std::vector<QuadTerm> quadratic,
                             double lower, double upper) {
  rows_.push_back({std::move(linear), std::move(quadratic)});
  add_range(lower, upper);
}

void QuadraticBlock::eval(std::span<const double> x, std::span<double> body) const {
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    double s = 0.0;
    for (const auto& t : rows_[r].linear) s += t.coef * at(x, t.var);
    for (const auto& q : rows_[r].quadratic) s += q.coef * at(x, q.a) * at(x, q.b);
    body[r] = s;
  }
}

std::vector<Entry> QuadraticBlock::jacobian_structure() const {
  std::vector<Entry> out;
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const int row = static_cast<int>(r);
    for (const auto& t : rows_[r].linear) out.push_back({row, t.var});
    for (const auto& q : rows_[r].quadratic) {
      out.push_back({row, q.a});
      out.push_back({row, q.b});
    }
  }
  return out;
}

void QuadraticBlock::jacobian_values(std::span<const double> x, std::span<double> vals) const {
  std::size_t k = 0;
  for (const auto& row : rows_) {
    for (const auto& t : row.linear) vals[k++] = t.coef;
    for (const auto& q : row.quadratic) {
      vals[k++] = q.coef * at(x, q.b);
      vals[k++] = q.coef * at(x, q.a);
    }
  }
}

std::vector<Entry> QuadraticBlock::hessian_structure() const {
  std::vector<Entry> out;
  for (const auto& row : rows_) {
    for (const auto& q : row.quadratic) out.push_back(lower_entry(q.a, q.b));
  }
  return out;
}

void QuadraticBlock::hessian_values(std::span<const double>, std::span<const double> duals,
                                    std::span<double> vals) const {
  std::size_t k = 0;
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    for (const auto& q : rows_[r].quadratic) {
      vals[k++] = duals[r] * (q.a == q.b ? 2.0 * q.coef : q.coef);
    }
  }
}

int QuadraticBlock::max_variable() const {
  int m = -1;
  for (const auto& row : rows_) {
    for (const auto& t : row.linear) m = std::max(m, t.var);
    for (const auto& q : row.quadratic) m = std::max({m, q.a, q.b});
  }
  return m;
}

void QuadraticBlock::dump_row(std::ostream& os, std::size_t r) const {
  for (const auto& t : rows_[r].linear) {
    os << " " << (t.coef < 0 ? "- " : "+ ") << std::abs(t.coef) << "*x" << t.var;
  }
  for (const auto& q : rows_[r].quadratic) {
    os << " " << (q.coef < 0 ? "- " : "+ ") << std::abs(q.coef) << "*x" << q.a << "*x" << q.b;
  }
  print_range(os, lower(r), upper(r));
}

// ------------------------------------------------------------------ cone

void SocConeBlock::add_row(int re, int im, int wii, int wjj) {
  rows_.push_back({re, im, wii, wjj});
  add_range(-kInf, 0.0);
}

void SocConeBlock::eval(std::span<const double> x, std::span<double> body) const {
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const auto& c = rows_[r];
    const double re = at(x, c.re), im = at(x, c.im);
    body[r] = re * re + im * im - at(x, c.wii) * at(x, c.wjj);
  }
}

std::vector<Entry> SocConeBlock::jacobian_structure() const {
  std::vector<Entry> out;
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const int row = static_cast<int>(r);
    const auto& c = rows_[r];
    out.insert(out.end(), {{row, c.re}, {row, c.im}, {row, c.wii}, {row, c.wjj}});
  }
  return out;
}

void SocConeBlock::jacobian_values(std::span<const double> x, std::span<double> vals) const {
  std::size_t k = 0;
  for (const auto& c : rows_) {
    vals[k++] = 2.0 * at(x, c.re);
    vals[k++] = 2.0 * at(x, c.im);
    vals[k++] = -at(x, c.wjj);
    vals[k++] = -at(x, c.wii);
  }
}

std::vector<Entry> SocConeBlock::hessian_structure() const {
  std::vector<Entry> out;
  for (const auto& c : rows_) {
    out.push_back({c.re, c.re});
    out.push_back({c.im, c.im});
    out.push_back(lower_entry(c.wii, c.wjj));
  }
  return out;
}

void SocConeBlock::hessian_values(std::span<const double>, std::span<const double> duals,
                                  std::span<double> vals) const {
  std::size_t k = 0;
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    vals[k++] = 2.0 * duals[r];
    vals[k++] = 2.0 * duals[r];
    vals[k++] = -duals[r];
  }
}

int SocConeBlock::max_variable() const {
  int m = -1;
  for (const auto& c : rows_) m = std::max({m, c.re, c.im, c.wii, c.wjj});
  return m;
}

void SocConeBlock::dump_row(std::ostream& os, std::size_t r) const {
  const auto& c = rows_[r];
  os << " x" << c.re << "^2 + x" << c.im << "^2 - x" << c.wii << "*x" << c.wjj;
  print_range(os, lower(r), upper(r));
}

// --------------------------------------------------------------- ac flow

void AcFlowBlock::add_row(const Row& row) {
  rows_.push_back(row);
  add_range(0.0, 0.0);
}

void AcFlowBlock::eval(std::span<const double> x, std::span<double> body) const {
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const auto& f = rows_[r];
    const double vi = at(x, f.vi), vj = at(x, f.vj);
    const double d = at(x, f.ti) - at(x, f.tj);
    body[r] = f.a * vi * vi + vi * vj * (f.b * std::cos(d) + f.c * std::sin(d)) - at(x, f.flow);
  }
}

std::vector<Entry> AcFlowBlock::jacobian_structure() const {
  std::vector<Entry> out;
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const int row = static_cast<int>(r);
    const auto& f = rows_[r];
    out.insert(out.end(), {{row, f.flow}, {row, f.vi}, {row, f.vj}, {row, f.ti}, {row, f.tj}});
  }
  return out;
}

void AcFlowBlock::jacobian_values(std::span<const double> x, std::span<double> vals) const {
  std::size_t k = 0;
  for (const auto& f : rows_) {
    const double vi = at(x, f.vi), vj = at(x, f.vj);
    const double d = at(x, f.ti) - at(x, f.tj);
    const double cs = std::cos(d), sn = std::sin(d);
    const double t = f.b * cs + f.c * sn;   // value factor
    const double u = -f.b * sn + f.c * cs;  // d t / d(ti - tj)
    vals[k++] = -1.0;
    vals[k++] = 2.0 * f.a * vi + vj * t;
    vals[k++] = vi * t;
    vals[k++] = vi * vj * u;
    vals[k++] = -vi * vj * u;
  }
}

std::vector<Entry> AcFlowBlock::hessian_structure() const {
  std::vector<Entry> out;
  for (const auto& f : rows_) {
    out.push_back({f.vi, f.vi});
    out.push_back(lower_entry(f.vi, f.vj));
    out.push_back(lower_entry(f.vi, f.ti));
    out.push_back(lower_entry(f.vi, f.tj));
    out.push_back(lower_entry(f.vj, f.ti));
    out.push_back(lower_entry(f.vj, f.tj));
    out.push_back({f.ti, f.ti});
    out.push_back(lower_entry(f.ti, f.tj));
    out.push_back({f.tj, f.tj});
  }
  return out;
}

void AcFlowBlock::hessian_values(std::span<const double> x, std::span<const double> duals,
                                 std::span<double> vals) const {
  std::size_t k = 0;
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const auto& f = rows_[r];
    const double w = duals[r];
    const double vi = at(x, f.vi), vj = at(x, f.vj);
    const double d = at(x, f.ti) - at(x, f.tj);
    const double cs = std::cos(d), sn = std::sin(d);
    const double t = f.b * cs + f.c * sn;
    const double u = -f.b * sn + f.c * cs;
    vals[k++] = w * 2.0 * f.a;
    vals[k++] = w * t;
    vals[k++] = w * vj * u;
    vals[k++] = -w * vj * u;
    vals[k++] = w * vi * u;
    vals[k++] = -w * vi * u;
    vals[k++] = -w * vi * vj * t;
    vals[k++] = w * vi * vj * t;
    vals[k++] = -w * vi * vj * t;
  }
}

int AcFlowBlock::max_variable() const {
  int m = -1;
  for (const auto& f : rows_) m = std::max({m, f.flow, f.vi, f.vj, f.ti, f.tj});
  return m;
}

void AcFlowBlock::dump_row(std::ostream& os, std::size_t r) const {
  const auto& f = rows_[r];
  os << " " << f.a << "*x" << f.vi << "^2 + x" << f.vi << "*x" << f.vj << "*(" << f.b
     << "*cos(x" << f.ti << "-x" << f.tj << ") + " << f.c << "*sin(x" << f.ti << "-x" << f.tj
     << ")) - x" << f.flow;
  print_range(os, lower(r), upper(r));
}

// ------------------------------------------------------- apparent power

void ApparentPowerBlock::add_row(int p, int q, double limit) {
  rows_.push_back({p, q});
  add_range(-kInf, limit * limit);
}

void ApparentPowerBlock::eval(std::span<const double> x, std::span<double> body) const {
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const double p = at(x, rows_[r].p), q = at(x, rows_[r].q);
    body[r] = p * p + q * q;
  }
}

std::vector<Entry> ApparentPowerBlock::jacobian_structure() const {
  std::vector<Entry> out;
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    out.push_back({static_cast<int>(r), rows_[r].p});
    out.push_back({static_cast<int>(r), rows_[r].q});
  }
  return out;
}

void ApparentPowerBlock::jacobian_values(std::span<const double> x,
                                         std::span<double> vals) const {
  std::size_t k = 0;
  for (const auto& row : rows_) {
    vals[k++] = 2.0 * at(x, row.p);
    vals[k++] = 2.0 * at(x, row.q);
  }
}

std::vector<Entry> ApparentPowerBlock::hessian_structure() const {
  std::vector<Entry> out;
  for (const auto& row : rows_) {
    out.push_back({row.p, row.p});
    out.push_back({row.q, row.q});
  }
  return out;
}

void ApparentPowerBlock::hessian_values(std::span<const double>,
                                        std::span<const double> duals,
                                        std::span<double> vals) const {
  std::size_t k = 0;
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    vals[k++] = 2.0 * duals[r];
    vals[k++] = 2.0 * duals[r];
  }
}

int ApparentPowerBlock::max_variable() const {
  int m = -1;
  for (const auto& row : rows_) m = std::max({m, row.p, row.q});
  return m;
}

void ApparentPowerBlock::dump_row(std::ostream& os, std::size_t r) const {
  os << " x" << rows_[r].p << "^2 + x" << rows_[r].q << "^2";
  print_range(os, lower(r), upper(r));
}

// ----------------------------------------------------------------- model

int ModelIR::add_variable(Variable v) {
  if (v.lower > v.upper) {
    throw BuildError("variable '" + v.name + "' has lower > upper");
  }
  v.initial = std::clamp(v.initial, v.lower, v.upper);
  variables_.push_back(std::move(v));
  return static_cast<int>(variables_.size() - 1);
}

void ModelIR::add_block(BlockPtr block) {
  num_rows_ += block->size();
  blocks_.push_back(std::move(block));
}

void ModelIR::add_objective_term(int var, double coef) { objective_.push_back({var, coef}); }

std::vector<std::size_t> ModelIR::row_offsets() const {
  std::vector<std::size_t> out;
  std::size_t off = 0;
  for (const auto& b : blocks_) {
    out.push_back(off);
    off += b->size();
  }
  return out;
}

std::vector<double> ModelIR::objective_coefficients() const {
  std::vector<double> c(variables_.size(), 0.0);
  for (const auto& t : objective_) c[static_cast<std::size_t>(t.var)] += t.coef;
  return c;
}

double ModelIR::objective(std::span<const double> x) const {
  if (x.size() != variables_.size()) {
    throw DimensionMismatch("objective: point has wrong dimension");
  }
  const auto c = objective_coefficients();
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * x[i];
  return s + objective_offset_;
}

std::vector<double> ModelIR::initial_point() const {
  std::vector<double> x;
  x.reserve(variables_.size());
  for (const auto& v : variables_) x.push_back(v.initial);
  return x;
}

std::vector<double> ModelIR::row_lower() const {
  std::vector<double> out;
  out.reserve(num_rows_);
  for (const auto& b : blocks_) {
    for (std::size_t r = 0; r < b->size(); ++r) out.push_back(b->lower(r));
  }
  return out;
}

std::vector<double> ModelIR::row_upper() const {
  std::vector<double> out;
  out.reserve(num_rows_);
  for (const auto& b : blocks_) {
    for (std::size_t r = 0; r < b->size(); ++r) out.push_back(b->upper(r));
  }
  return out;
}

void ModelIR::check() const {
  const int n = static_cast<int>(variables_.size());
  for (const auto& t : objective_) {
    if (t.var < 0 || t.var >= n) throw BuildError("objective references unknown variable");
  }
  for (const auto& b : blocks_) {
    if (b->max_variable() >= n) {
      throw BuildError("block '" + b->name() + "' references unknown variable");
    }
    for (const auto& e : b->jacobian_structure()) {
      if (e.col < 0) throw BuildError("block '" + b->name() + "' has a negative index");
    }
  }
}

// ------------------------------------------------------------ evaluation

namespace {

void check_dim(const ModelIR& m, std::span<const double> x) {
  if (x.size() != m.num_variables()) {
    throw DimensionMismatch("point has " + std::to_string(x.size()) + " entries, model has " +
                            std::to_string(m.num_variables()) + " variables");
  }
}

}  // namespace

std::vector<double> eval_constraints(const ModelIR& m, std::span<const double> x) {
  check_dim(m, x);
  std::vector<double> g(m.num_rows());
  std::size_t off = 0;
  for (const auto& b : m.blocks()) {
    b->eval(x, std::span<double>(g).subspan(off, b->size()));
    off += b->size();
  }
  return g;
}

std::vector<double> eval_residuals(const ModelIR& m, std::span<const double> x) {
  auto g = eval_constraints(m, x);
  std::size_t i = 0;
  for (const auto& b : m.blocks()) {
    for (std::size_t r = 0; r < b->size(); ++r, ++i) {
      const double lo = b->lower(r), hi = b->upper(r);
      if (lo == hi) {
        g[i] -= lo;
      } else if (g[i] > hi) {
        g[i] -= hi;
      } else if (g[i] < lo) {
        g[i] -= lo;
      } else {
        g[i] = 0.0;
      }
    }
  }
  return g;
}

DerivativeStructure derivative_structure(const ModelIR& m) {
  DerivativeStructure s;
  int off = 0;
  for (const auto& b : m.blocks()) {
    const auto j = b->jacobian_structure();
    for (auto e : j) {
      e.row += off;
      s.jacobian.push_back(e);
    }
    const auto h = b->hessian_structure();
    s.hessian.insert(s.hessian.end(), h.begin(), h.end());
    s.jacobian_block_nnz.push_back(j.size());
    s.hessian_block_nnz.push_back(h.size());
    off += static_cast<int>(b->size());
  }
  return s;
}

void jacobian_values(const ModelIR& m, const DerivativeStructure& s,
                     std::span<const double> x, std::span<double> vals) {
  std::size_t k = 0;
  for (std::size_t i = 0; i < m.blocks().size(); ++i) {
    const std::size_t nnz = s.jacobian_block_nnz[i];
    m.blocks()[i]->jacobian_values(x, vals.subspan(k, nnz));
    k += nnz;
  }
}

void hessian_values(const ModelIR& m, const DerivativeStructure& s, std::span<const double> x,
                    std::span<const double> duals, std::span<double> vals) {
  std::size_t k = 0;
  std::size_t off = 0;
  for (std::size_t i = 0; i < m.blocks().size(); ++i) {
    const auto& b = m.blocks()[i];
    const std::size_t nnz = s.hessian_block_nnz[i];
    b->hessian_values(x, duals.subspan(off, b->size()), vals.subspan(k, nnz));
    k += nnz;
    off += b->size();
  }
}

Eigen::SparseMatrix<double> eval_jacobian(const ModelIR& m, std::span<const double> x) {
  check_dim(m, x);
  const auto s = derivative_structure(m);
  std::vector<double> vals(s.jacobian.size());
  jacobian_values(m, s, x, vals);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(vals.size());
  for (std::size_t k = 0; k < vals.size(); ++k) {
    trips.emplace_back(s.jacobian[k].row, s.jacobian[k].col, vals[k]);
  }
  Eigen::SparseMatrix<double> J(static_cast<Eigen::Index>(m.num_rows()),
                                static_cast<Eigen::Index>(m.num_variables()));
  J.setFromTriplets(trips.begin(), trips.end());
  return J;
}

Eigen::SparseMatrix<double> eval_lagrangian_hessian(const ModelIR& m,
                                                    std::span<const double> x,
                                                    std::span<const double> duals,
                                                    double obj_scale) {
  check_dim(m, x);
  if (duals.size() != m.num_rows()) {
    throw DimensionMismatch("duals have " + std::to_string(duals.size()) +
                            " entries, model has " + std::to_string(m.num_rows()) + " rows");
  }
  (void)obj_scale;  // linear objective
  const auto s = derivative_structure(m);
  std::vector<double> vals(s.hessian.size());
  hessian_values(m, s, x, duals, vals);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * vals.size());
  for (std::size_t k = 0; k < vals.size(); ++k) {
    const auto& e = s.hessian[k];
    trips.emplace_back(e.row, e.col, vals[k]);
    if (e.row != e.col) trips.emplace_back(e.col, e.row, vals[k]);
  }
  const auto n = static_cast<Eigen::Index>(m.num_variables());
  Eigen::SparseMatrix<double> H(n, n);
  H.setFromTriplets(trips.begin(), trips.end());
  return H;
}

void dump(const ModelIR& m, std::ostream& os) {
  os << "variables " << m.num_variables() << "\n";
  for (std::size_t i = 0; i < m.num_variables(); ++i) {
    const auto& v = m.variables()[i];
    os << "  x" << i << " " << v.name;
    print_range(os, v.lower, v.upper);
    os << " init " << v.initial << "\n";
  }
  os << "objective";
  const auto c = m.objective_coefficients();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] != 0.0) os << " " << (c[i] < 0 ? "- " : "+ ") << std::abs(c[i]) << "*x" << i;
  }
  os << " + " << m.objective_offset() << "\n";
  for (const auto& b : m.blocks()) {
    os << "block " << b->name() << " " << to_string(b->kind()) << " rows " << b->size() << "\n";
    for (std::size_t r = 0; r < b->size(); ++r) {
      os << "  r" << r << ":";
      b->dump_row(os, r);
      os << "\n";
    }
  }
}

std::string dump(const ModelIR& m) {
  std::ostringstream os;
  dump(m, os);
  return os.str();
}

}  // namespace opf
