#include "opf/ipm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "kkt_factor.hpp"

namespace opf {

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::IterationLimit: return "IterationLimit";
    case SolveStatus::NumericalError: return "NumericalError";
  }
  return "?";
}

void SolverOptions::check() const {
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
  if (max_iter < 0) throw std::invalid_argument("max_iter must be non-negative");
  if (!(mu_init > 0.0)) throw std::invalid_argument("mu_init must be positive");
  if (!(regularization_floor > 0.0)) {
    throw std::invalid_argument("regularization floor must be positive");
  }
}

void IterationLog::write_csv(std::ostream& os) const {
  os << "iter,mu,primal_inf,dual_inf,compl,alpha_primal,alpha_dual,reg\n";
  const auto old = os.precision(10);
  for (const auto& r : records) {
    os << r.iter << ',' << r.mu << ',' << r.primal_inf << ',' << r.dual_inf << ',' << r.compl_
       << ',' << r.alpha_primal << ',' << r.alpha_dual << ',' << r.reg << '\n';
  }
  os.precision(old);
}

double KktReport::max() const {
  return std::max({stationarity, primal_feasibility, complementarity});
}

KktReport kkt_check(const ModelIR& m, const SolveResult& r) {
  KktReport rep;
  const std::size_t n = m.num_variables();
  const std::size_t rows = m.num_rows();
  if (r.primal.size() != n || r.bound_duals.size() != n || r.constraint_duals.size() != rows) {
    rep.stationarity = rep.primal_feasibility = rep.complementarity = kInf;
    return rep;
  }
  const auto& x = r.primal;
  const auto& y = r.constraint_duals;
  const auto& zb = r.bound_duals;

  double dual_norm = 0.0;
  for (double v : y) dual_norm = std::max(dual_norm, std::abs(v));
  for (double v : zb) dual_norm = std::max(dual_norm, std::abs(v));
  rep.scale = 1.0 + dual_norm;

  // Stationarity: c + J'y - zb = 0.
  Eigen::VectorXd grad = Eigen::Map<const Eigen::VectorXd>(
      m.objective_coefficients().data(), static_cast<Eigen::Index>(n));
  const Eigen::SparseMatrix<double> J = eval_jacobian(m, x);
  grad += J.transpose() * Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(rows));
  grad -= Eigen::Map<const Eigen::VectorXd>(zb.data(), static_cast<Eigen::Index>(n));
  rep.stationarity = (n ? grad.lpNorm<Eigen::Infinity>() : 0.0) / rep.scale;

  const auto g = eval_constraints(m, x);
  const auto lo = m.row_lower();
  const auto hi = m.row_upper();
  double feas = 0.0;
  double comp = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    feas = std::max({feas, lo[i] - g[i], g[i] - hi[i]});
    if (lo[i] == hi[i]) continue;
    if (y[i] > 0.0) {
      comp = std::max(comp, hi[i] == kInf ? y[i] : y[i] * std::abs(hi[i] - g[i]));
    } else if (y[i] < 0.0) {
      comp = std::max(comp, lo[i] == -kInf ? -y[i] : -y[i] * std::abs(g[i] - lo[i]));
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    const auto& v = m.variables()[j];
    feas = std::max({feas, v.lower - x[j], x[j] - v.upper});
    if (v.lower == v.upper) continue;
    if (zb[j] > 0.0) {
      comp = std::max(comp, v.lower == -kInf ? zb[j] : zb[j] * std::abs(x[j] - v.lower));
    } else if (zb[j] < 0.0) {
      comp = std::max(comp, v.upper == kInf ? -zb[j] : -zb[j] * std::abs(v.upper - x[j]));
    }
  }
  rep.primal_feasibility = feas;
  rep.complementarity = comp / rep.scale;
  return rep;
}

namespace {

using Vec = Eigen::VectorXd;
using Clock = std::chrono::steady_clock;

constexpr double kBoundPush = 1e-2;
constexpr double kKappaEps = 10.0;     // barrier subproblem tolerance factor
constexpr double kMuFactor = 0.2;      // linear barrier decrease
constexpr double kMuPower = 1.5;       // superlinear barrier decrease
constexpr double kKappaSigma = 1e10;   // bound multiplier safeguard
constexpr double kArmijo = 1e-4;
constexpr double kRho = 0.1;           // penalty parameter margin
constexpr double kMaxGradient = 100.0; // gradient-based scaling threshold
constexpr double kSMax = 100.0;        // dual scaling threshold in the stopping test
constexpr int kMaxBacktracks = 40;
constexpr int kMaxLineSearchFailures = 20;
constexpr double kMaxRegularization = 1e20;
constexpr double kDualDivergence = 1e12;
constexpr double kBoundRelax = 1e-8;

/// Solver-side view of a ModelIR. The primal vector z stacks the free model
/// variables followed by one slack per range row; fixed variables are
/// constants. Constraints become c(z) = d * (g(x) - rhs) or d * (g(x) - s).
class Problem {
 public:
  /// Bounds of free variables and range rows are widened by `relax` so that problems whose feasible set touches a
  /// bound still have a strict interior.
  Problem(const ModelIR& m, double relax) : m_(m), ds_(derivative_structure(m)) {
    const std::size_t n = m.num_variables();
    zpos_.assign(n, -1);
    x_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& v = m.variables()[j];
      x_[j] = v.initial;
      if (v.lower == v.upper) {
        x_[j] = v.lower;
      } else {
        zpos_[j] = static_cast<int>(zvar_.size());
        zvar_.push_back(static_cast<int>(j));
        lz_.push_back(widen(v.lower, -relax));
        uz_.push_back(widen(v.upper, relax));
      }
    }
    nf_ = zvar_.size();
    const auto lo = m.row_lower();
    const auto hi = m.row_upper();
    rows_ = lo.size();
    slack_.assign(rows_, -1);
    rhs_.assign(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      if (lo[i] == hi[i]) {
        rhs_[i] = lo[i];
      } else {
        slack_[i] = static_cast<int>(lz_.size());
        lz_.push_back(widen(lo[i], -relax));
        uz_.push_back(widen(hi[i], relax));
      }
    }
    dim_ = lz_.size();

    // Free columns of the Jacobian and Hessian entries between free variables.
    for (std::size_t k = 0; k < ds_.jacobian.size(); ++k) {
      if (zpos_[static_cast<std::size_t>(ds_.jacobian[k].col)] >= 0) jac_keep_.push_back(k);
    }
    for (std::size_t k = 0; k < ds_.hessian.size(); ++k) {
      const auto& e = ds_.hessian[k];
      if (zpos_[static_cast<std::size_t>(e.row)] >= 0 &&
          zpos_[static_cast<std::size_t>(e.col)] >= 0) {
        hess_keep_.push_back(k);
      }
    }
    jac_vals_.resize(ds_.jacobian.size());
    hess_vals_.resize(ds_.hessian.size());
    body_.resize(rows_);

    // Gradient-based scaling of objective and rows at the starting point.
    const auto c = m.objective_coefficients();
    double cmax = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (zpos_[j] >= 0) cmax = std::max(cmax, std::abs(c[j]));
    }
    obj_scale_ = cmax > kMaxGradient ? kMaxGradient / cmax : 1.0;
    grad_ = Vec::Zero(static_cast<Eigen::Index>(dim_));
    for (std::size_t j = 0; j < n; ++j) {
      if (zpos_[j] >= 0) grad_[zpos_[j]] = obj_scale_ * c[j];
    }
    row_scale_.assign(rows_, 1.0);
    jacobian_values(m_, ds_, x_, jac_vals_);
    std::vector<double> rmax(rows_, 0.0);
    for (std::size_t k : jac_keep_) {
      const auto r = static_cast<std::size_t>(ds_.jacobian[k].row);
      rmax[r] = std::max(rmax[r], std::abs(jac_vals_[k]));
    }
    for (std::size_t i = 0; i < rows_; ++i) {
      if (rmax[i] > kMaxGradient) row_scale_[i] = kMaxGradient / rmax[i];
    }
    constant_row_.assign(rows_, 0);
    for (std::size_t i = 0; i < rows_; ++i) constant_row_[i] = slack_[i] < 0 ? 1 : 0;
    for (std::size_t k : jac_keep_) constant_row_[static_cast<std::size_t>(ds_.jacobian[k].row)] = 0;
  }

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return rows_; }
  std::size_t num_free() const { return nf_; }
  double lower(std::size_t i) const { return lz_[i]; }
  double upper(std::size_t i) const { return uz_[i]; }
  double obj_scale() const { return obj_scale_; }
  double row_scale(std::size_t i) const { return row_scale_[i]; }
  const Vec& grad() const { return grad_; }
  const std::vector<double>& full_x() const { return x_; }
  int slack(std::size_t row) const { return slack_[row]; }
  int zpos(std::size_t var) const { return zpos_[var]; }
  /// Equality row without free variables: its Jacobian row is identically zero.
  bool constant_row(std::size_t row) const { return constant_row_[row] != 0; }

  /// Starting point: model initial values and row bodies, pushed inside bounds.
  Vec initial_point() {
    Vec z(static_cast<Eigen::Index>(dim_));
    for (std::size_t i = 0; i < nf_; ++i) z[static_cast<Eigen::Index>(i)] = x_[static_cast<std::size_t>(zvar_[i])];
    set_x(z);
    m_eval_bodies();
    for (std::size_t r = 0; r < rows_; ++r) {
      if (slack_[r] >= 0) z[slack_[r]] = body_[r];
    }
    for (std::size_t i = 0; i < dim_; ++i) {
      z[static_cast<Eigen::Index>(i)] = push_inside(z[static_cast<Eigen::Index>(i)], lz_[i], uz_[i]);
    }
    return z;
  }

  void set_x(const Vec& z) {
    for (std::size_t i = 0; i < nf_; ++i) {
      x_[static_cast<std::size_t>(zvar_[i])] = z[static_cast<Eigen::Index>(i)];
    }
  }

  /// c(z), scaled.
  Vec constraints(const Vec& z) {
    set_x(z);
    m_eval_bodies();
    Vec c(static_cast<Eigen::Index>(rows_));
    for (std::size_t r = 0; r < rows_; ++r) {
      const double target = slack_[r] >= 0 ? z[slack_[r]] : rhs_[r];
      c[static_cast<Eigen::Index>(r)] = row_scale_[r] * (body_[r] - target);
    }
    return c;
  }

  /// Unscaled row bodies at the last evaluated point.
  const std::vector<double>& bodies() const { return body_; }

  /// Scaled Jacobian of c at z as (row, zcol, value) triplets.
  void jacobian(const Vec& z, std::vector<Eigen::Triplet<double>>& out) {
    set_x(z);
    jacobian_values(m_, ds_, x_, jac_vals_);
    out.clear();
    for (std::size_t k : jac_keep_) {
      const auto& e = ds_.jacobian[k];
      const auto r = static_cast<std::size_t>(e.row);
      out.emplace_back(e.row, zpos_[static_cast<std::size_t>(e.col)], row_scale_[r] * jac_vals_[k]);
    }
    for (std::size_t r = 0; r < rows_; ++r) {
      if (slack_[r] >= 0) out.emplace_back(static_cast<int>(r), slack_[r], -row_scale_[r]);
    }
  }

  /// Lower triangle of the constraint part of the Lagrangian Hessian.
  void hessian(const Vec& z, const Vec& y, std::vector<Eigen::Triplet<double>>& out) {
    set_x(z);
    std::vector<double> w(rows_);
    for (std::size_t r = 0; r < rows_; ++r) w[r] = row_scale_[r] * y[static_cast<Eigen::Index>(r)];
    hessian_values(m_, ds_, x_, w, hess_vals_);
    out.clear();
    for (std::size_t k : hess_keep_) {
      const auto& e = ds_.hessian[k];
      const int a = zpos_[static_cast<std::size_t>(e.row)];
      const int b = zpos_[static_cast<std::size_t>(e.col)];
      out.emplace_back(std::max(a, b), std::min(a, b), hess_vals_[k]);
    }
  }

  static double push_inside(double v, double lo, double hi) {
    const bool has_lo = lo > -kInf, has_hi = hi < kInf;
    if (has_lo && has_hi) {
      const double pl = std::min(kBoundPush * std::max(1.0, std::abs(lo)), kBoundPush * (hi - lo));
      const double pu = std::min(kBoundPush * std::max(1.0, std::abs(hi)), kBoundPush * (hi - lo));
      return std::clamp(v, lo + pl, hi - pu);
    }
    if (has_lo) return std::max(v, lo + kBoundPush * std::max(1.0, std::abs(lo)));
    if (has_hi) return std::min(v, hi - kBoundPush * std::max(1.0, std::abs(hi)));
    return v;
  }

 private:
  static double widen(double b, double relax) {
    return std::isfinite(b) ? b + relax : b;
  }

  void m_eval_bodies() {
    std::size_t off = 0;
    for (const auto& b : m_.blocks()) {
      b->eval(x_, std::span<double>(body_).subspan(off, b->size()));
      off += b->size();
    }
  }

  const ModelIR& m_;
  DerivativeStructure ds_;
  std::vector<int> zpos_;
  std::vector<int> zvar_;
  std::vector<double> lz_, uz_;
  std::vector<int> slack_;
  std::vector<char> constant_row_;
  std::vector<double> rhs_;
  std::vector<double> x_;
  std::vector<double> body_;
  std::vector<double> jac_vals_, hess_vals_;
  std::vector<std::size_t> jac_keep_, hess_keep_;
  std::vector<double> row_scale_;
  Vec grad_;
  double obj_scale_ = 1.0;
  std::size_t nf_ = 0, rows_ = 0, dim_ = 0;
};

struct Iterate {
  Vec z, y, zl, zu;
};

class InteriorPoint {
 public:
  InteriorPoint(const ModelIR& m, const SolverOptions& opts)
      : m_(m), opts_(opts), p_(m, std::min(kBoundRelax, 1e-3 * opts.tol)), dim_(p_.dim()), rows_(p_.rows()),
        factor_(static_cast<int>(p_.dim()) < opts.dense_below) {
    has_l_.resize(dim_);
    has_u_.resize(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      has_l_[i] = p_.lower(i) > -kInf;
      has_u_[i] = p_.upper(i) < kInf;
      nbounds_ += (has_l_[i] ? 1 : 0) + (has_u_[i] ? 1 : 0);
    }
  }

  SolveOutput run() {
    const auto start = Clock::now();
    SolveOutput out;
    auto& log = out.log;

    Iterate it;
    it.z = p_.initial_point();
    it.y = Vec::Zero(static_cast<Eigen::Index>(rows_));
    it.zl = Vec::Zero(static_cast<Eigen::Index>(dim_));
    it.zu = Vec::Zero(static_cast<Eigen::Index>(dim_));
    for (std::size_t i = 0; i < dim_; ++i) {
      if (has_l_[i]) it.zl[static_cast<Eigen::Index>(i)] = 1.0;
      if (has_u_[i]) it.zu[static_cast<Eigen::Index>(i)] = 1.0;
    }
    double mu = opts_.mu_init;
    double nu = 1.0;  // l1 penalty
    double delta_last = 0.0;
    int ls_failures = 0;
    SolveStatus status = SolveStatus::IterationLimit;
    std::string message = "iteration limit reached";

    for (int iter = 0;; ++iter) {
      Vec c = p_.constraints(it.z);
      std::vector<Eigen::Triplet<double>> jtrip;
      p_.jacobian(it.z, jtrip);
      Eigen::SparseMatrix<double> J(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(dim_));
      J.setFromTriplets(jtrip.begin(), jtrip.end());

      const Vec grad_lag = p_.grad() + J.transpose() * it.y - it.zl + it.zu;
      const double dual_norm = std::max({norm_inf(it.y), norm_inf(it.zl), norm_inf(it.zu)});
      const double bound_sum = it.zl.lpNorm<1>() + it.zu.lpNorm<1>();
      const double sd =
          std::max(kSMax, (it.y.lpNorm<1>() + bound_sum) / std::max<double>(1.0, rows_ + nbounds_)) /
          kSMax;
      const double sc = std::max(kSMax, bound_sum / std::max<double>(1.0, nbounds_)) / kSMax;
      const double primal_inf = norm_inf(c);
      const double dual_inf = norm_inf(grad_lag) / sd;
      const double compl0 = complementarity(it, 0.0) / sc;
      const double err0 = std::max({primal_inf, dual_inf, compl0});

      if (err0 <= opts_.tol) {
        SolveResult candidate = assemble(it);
        const KktReport rep = kkt_check(m_, candidate);
        if (rep.passes(opts_.tol)) {
          status = SolveStatus::Optimal;
          message = "optimal";
          break;
        }
      }
      if (dual_norm > kDualDivergence && primal_inf > opts_.tol) {
        status = SolveStatus::Infeasible;
        message = "multipliers diverge while constraints stay violated";
        break;
      }
      if (iter >= opts_.max_iter) break;
      if (opts_.time_limit &&
          std::chrono::duration<double>(Clock::now() - start).count() > *opts_.time_limit) {
        message = "time limit reached";
        break;
      }

      // Barrier parameter.
      if (opts_.barrier == BarrierStrategy::Monotone) {
        const double mu_floor = opts_.tol / 10.0;
        for (;;) {
          const double err_mu = std::max(
              {primal_inf, dual_inf, complementarity(it, mu) / sc});
          if (err_mu > kKappaEps * mu || mu <= mu_floor) break;
          mu = std::max(mu_floor, std::min(kMuFactor * mu, std::pow(mu, kMuPower)));
        }
      } else {
        const double avg = average_complementarity(it);
        mu = std::max(opts_.tol / 10.0, 0.1 * avg);
      }

      // Newton system.
      std::vector<Eigen::Triplet<double>> htrip;
      p_.hessian(it.z, it.y, htrip);
      Vec sigma(static_cast<Eigen::Index>(dim_));
      Vec rd = grad_lag;
      for (std::size_t i = 0; i < dim_; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        double s = 0.0;
        if (has_l_[i]) {
          const double gap = it.z[k] - p_.lower(i);
          s += it.zl[k] / gap;
          rd[k] += it.zl[k] - mu / gap;
        }
        if (has_u_[i]) {
          const double gap = p_.upper(i) - it.z[k];
          s += it.zu[k] / gap;
          rd[k] += -it.zu[k] + mu / gap;
        }
        sigma[k] = s;
      }

      double delta_w = 0.0, delta_c = 0.0;
      int corrections = 0;
      Eigen::SparseMatrix<double> K;
      bool ok = false;
      for (;;) {
        K = assemble_kkt(htrip, jtrip, sigma, delta_w, delta_c);
        const bool factored = factor_.factor(K);
        const auto in = factor_.inertia();
        if (factored && in.positive == static_cast<int>(dim_) &&
            in.negative == static_cast<int>(rows_) && in.zero == 0) {
          ok = true;
          break;
        }
        ++corrections;
        if (in.zero > 0 && delta_c == 0.0 && rows_ > 0) {
          delta_c = opts_.regularization_floor * std::pow(mu, 0.25);
          if (in.positive + in.zero == static_cast<int>(dim_)) continue;
        }
        if (delta_w == 0.0) {
          delta_w = delta_last == 0.0 ? opts_.regularization_floor
                                      : std::max(opts_.regularization_floor, delta_last / 10.0);
        } else {
          delta_w *= 10.0;
        }
        if (delta_w > kMaxRegularization) break;
      }
      if (!ok) {
        status = SolveStatus::NumericalError;
        message = "KKT factorization failed at maximum regularization";
        break;
      }
      if (delta_w > 0.0) delta_last = delta_w;

      Vec rhs(static_cast<Eigen::Index>(dim_ + rows_));
      rhs.head(static_cast<Eigen::Index>(dim_)) = -rd;
      rhs.tail(static_cast<Eigen::Index>(rows_)) = -c;
      const Vec sol = factor_.solve(rhs);
      const Vec dz = sol.head(static_cast<Eigen::Index>(dim_));
      const Vec dy = sol.tail(static_cast<Eigen::Index>(rows_));
      if (!dz.allFinite() || !dy.allFinite()) {
        status = SolveStatus::NumericalError;
        message = "non-finite Newton step";
        break;
      }

      Vec dzl(static_cast<Eigen::Index>(dim_)), dzu(static_cast<Eigen::Index>(dim_));
      for (std::size_t i = 0; i < dim_; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        dzl[k] = has_l_[i] ? mu / (it.z[k] - p_.lower(i)) - it.zl[k] -
                                 it.zl[k] / (it.z[k] - p_.lower(i)) * dz[k]
                           : 0.0;
        dzu[k] = has_u_[i] ? mu / (p_.upper(i) - it.z[k]) - it.zu[k] +
                                 it.zu[k] / (p_.upper(i) - it.z[k]) * dz[k]
                           : 0.0;
      }

      const double alpha_max = max_primal_step(it.z, dz);
      const double alpha_dual = std::min(max_dual_step(it.zl, dzl), max_dual_step(it.zu, dzu));

      // Penalty parameter update for the l1 merit function.
      const double c1 = c.lpNorm<1>();
      const Vec barrier_grad = barrier_gradient(it.z, mu);
      const double gdz = barrier_grad.dot(dz);
      if (c1 > 0.0) {
        const Vec kdz = K.selfadjointView<Eigen::Lower>() * sol;
        const double curv = dz.dot(kdz.head(static_cast<Eigen::Index>(dim_))) -
                            dz.dot(J.transpose() * dy);
        const double sigma_w = curv > 0.0 ? 1.0 : 0.0;
        const double required = (gdz + 0.5 * sigma_w * curv) / ((1.0 - kRho) * c1);
        if (nu < required) nu = required + 1.0;
      }
      const double phi0 = merit(it.z, c, mu, nu);
      const double slope = gdz - nu * c1;

      double alpha = alpha_max;
      bool accepted = false;
      Vec z_trial;
      for (int bt = 0; bt < kMaxBacktracks; ++bt) {
        z_trial = it.z + alpha * dz;
        const Vec c_trial = p_.constraints(z_trial);
        const double phi = merit(z_trial, c_trial, mu, nu);
        if (std::isfinite(phi) && phi <= phi0 + kArmijo * alpha * std::min(slope, 0.0)) {
          accepted = true;
          break;
        }
        if (bt == 0 && rows_ > 0) {
          // Second-order correction on the first rejected full step.
          Vec rhs_soc = rhs;
          rhs_soc.tail(static_cast<Eigen::Index>(rows_)) = -(alpha * c + c_trial);
          const Vec dsoc = factor_.solve(rhs_soc).head(static_cast<Eigen::Index>(dim_));
          const double a_soc = max_primal_step(it.z, dsoc);
          const Vec z_soc = it.z + a_soc * dsoc;
          const Vec c_soc = p_.constraints(z_soc);
          const double phi_soc = merit(z_soc, c_soc, mu, nu);
          if (dsoc.allFinite() && std::isfinite(phi_soc) &&
              phi_soc <= phi0 + kArmijo * alpha * std::min(slope, 0.0)) {
            z_trial = z_soc;
            alpha = a_soc;
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (accepted) {
        ls_failures = 0;
      } else {
        ++ls_failures;
        if (ls_failures >= kMaxLineSearchFailures) {
          status = SolveStatus::NumericalError;
          message = "line search failed " + std::to_string(ls_failures) + " times in a row";
          break;
        }
        // Take the shortest trial step and keep going.
      }

      it.z = z_trial;
      it.y += alpha * dy;
      it.zl += alpha_dual * dzl;
      it.zu += alpha_dual * dzu;
      safeguard_bound_duals(it, mu);

      IterationRecord rec;
      rec.iter = iter + 1;
      rec.mu = mu;
      rec.primal_inf = primal_inf;
      rec.dual_inf = dual_inf;
      rec.compl_ = compl0;
      rec.alpha_primal = alpha;
      rec.alpha_dual = alpha_dual;
      rec.reg = delta_w;
      rec.inertia_corrections = corrections;
      log.records.push_back(rec);
    }

    out.result = assemble(it);
    out.result.status = status;
    out.result.message = message;
    out.result.iterations = static_cast<int>(log.records.size());
    out.result.kkt_residual = kkt_check(m_, out.result).max();
    out.result.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
    return out;
  }

 private:
  static double norm_inf(const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

  double complementarity(const Iterate& it, double mu) const {
    double e = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      if (has_l_[i]) e = std::max(e, std::abs((it.z[k] - p_.lower(i)) * it.zl[k] - mu));
      if (has_u_[i]) e = std::max(e, std::abs((p_.upper(i) - it.z[k]) * it.zu[k] - mu));
    }
    return e;
  }

  double average_complementarity(const Iterate& it) const {
    double s = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      if (has_l_[i]) {
        s += (it.z[k] - p_.lower(i)) * it.zl[k];
        ++n;
      }
      if (has_u_[i]) {
        s += (p_.upper(i) - it.z[k]) * it.zu[k];
        ++n;
      }
    }
    return n ? s / n : 0.0;
  }

  Eigen::SparseMatrix<double> assemble_kkt(const std::vector<Eigen::Triplet<double>>& htrip,
                                           const std::vector<Eigen::Triplet<double>>& jtrip,
                                           const Vec& sigma, double delta_w, double delta_c) const {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(htrip.size() + jtrip.size() + dim_ + rows_);
    t.insert(t.end(), htrip.begin(), htrip.end());
    for (std::size_t i = 0; i < dim_; ++i) {
      const auto k = static_cast<int>(i);
      t.emplace_back(k, k, sigma[k] + delta_w);
    }
    const auto off = static_cast<int>(dim_);
    for (const auto& e : jtrip) t.emplace_back(off + e.row(), e.col(), e.value());
    for (std::size_t r = 0; r < rows_; ++r) {
      const int k = off + static_cast<int>(r);
      t.emplace_back(k, k, p_.constant_row(r) ? -1.0 : -delta_c);
    }
    const auto n = static_cast<Eigen::Index>(dim_ + rows_);
    Eigen::SparseMatrix<double> K(n, n);
    K.setFromTriplets(t.begin(), t.end());
    return K;
  }

  double max_primal_step(const Vec& z, const Vec& dz) const {
    double a = 1.0;
    for (std::size_t i = 0; i < dim_; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      if (has_l_[i] && dz[k] < 0.0) {
        a = std::min(a, -opts_.tau * (z[k] - p_.lower(i)) / dz[k]);
      }
      if (has_u_[i] && dz[k] > 0.0) {
        a = std::min(a, opts_.tau * (p_.upper(i) - z[k]) / dz[k]);
      }
    }
    return a;
  }

  double max_dual_step(const Vec& v, const Vec& dv) const {
    double a = 1.0;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      if (dv[k] < 0.0 && v[k] > 0.0) a = std::min(a, -opts_.tau * v[k] / dv[k]);
    }
    return a;
  }

  Vec barrier_gradient(const Vec& z, double mu) const {
    Vec g = p_.grad();
    for (std::size_t i = 0; i < dim_; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      if (has_l_[i]) g[k] -= mu / (z[k] - p_.lower(i));
      if (has_u_[i]) g[k] += mu / (p_.upper(i) - z[k]);
    }
    return g;
  }

  double merit(const Vec& z, const Vec& c, double mu, double nu) const {
    double phi = p_.grad().dot(z);
    for (std::size_t i = 0; i < dim_; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      if (has_l_[i]) {
        const double gap = z[k] - p_.lower(i);
        if (!(gap > 0.0)) return kInf;
        phi -= mu * std::log(gap);
      }
      if (has_u_[i]) {
        const double gap = p_.upper(i) - z[k];
        if (!(gap > 0.0)) return kInf;
        phi -= mu * std::log(gap);
      }
    }
    return phi + nu * c.lpNorm<1>();
  }

  void safeguard_bound_duals(Iterate& it, double mu) const {
    for (std::size_t i = 0; i < dim_; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      if (has_l_[i]) {
        const double gap = it.z[k] - p_.lower(i);
        it.zl[k] = std::clamp(it.zl[k], mu / (kKappaSigma * gap), kKappaSigma * mu / gap);
      }
      if (has_u_[i]) {
        const double gap = p_.upper(i) - it.z[k];
        it.zu[k] = std::clamp(it.zu[k], mu / (kKappaSigma * gap), kKappaSigma * mu / gap);
      }
    }
  }

  /// Maps an internal iterate back to model space with unscaled duals.
  SolveResult assemble(const Iterate& it) {
    SolveResult r;
    p_.set_x(it.z);
    r.primal = p_.full_x();
    // Report a point within the original variable bounds.
    for (std::size_t j = 0; j < r.primal.size(); ++j) {
      const auto& v = m_.variables()[j];
      r.primal[j] = std::clamp(r.primal[j], v.lower, v.upper);
    }
    r.objective = m_.objective(r.primal);
    const double os = p_.obj_scale();
    r.constraint_duals.resize(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      r.constraint_duals[i] = p_.row_scale(i) * it.y[static_cast<Eigen::Index>(i)] / os;
    }
    const std::size_t n = m_.num_variables();
    r.bound_duals.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const int k = p_.zpos(j);
      if (k >= 0) r.bound_duals[j] = (it.zl[k] - it.zu[k]) / os;
    }
    // Fixed variables absorb the remaining stationarity residual.
    bool any_fixed = false;
    for (std::size_t j = 0; j < n; ++j) any_fixed = any_fixed || p_.zpos(j) < 0;
    if (any_fixed) {
      const auto c = m_.objective_coefficients();
      const Eigen::SparseMatrix<double> J = eval_jacobian(m_, r.primal);
      const Vec jty = J.transpose() * Eigen::Map<const Vec>(r.constraint_duals.data(),
                                                            static_cast<Eigen::Index>(rows_));
      for (std::size_t j = 0; j < n; ++j) {
        if (p_.zpos(j) < 0) r.bound_duals[j] = c[j] + jty[static_cast<Eigen::Index>(j)];
      }
    }
    return r;
  }

  const ModelIR& m_;
  SolverOptions opts_;
  Problem p_;
  std::size_t dim_, rows_;
  std::vector<bool> has_l_, has_u_;
  std::size_t nbounds_ = 0;
  detail::KktFactor factor_;
};

}  // namespace

SolveOutput solve(const ModelIR& m, const SolverOptions& opts) {
  opts.check();
  m.check();
  InteriorPoint ip(m, opts);
  return ip.run();
}

}  // namespace opf
