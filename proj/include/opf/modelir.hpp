#pragma once

#include <Eigen/SparseCore>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace opf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Variable {
  std::string name;
  double lower = -kInf;
  double upper = kInf;
  double initial = 0.0;
};

enum class BlockKind {
  LinearEq,
  LinearIneq,
  QuadraticIneq,
  SocCone,
  AcFlowPolar,
  ApparentPowerLimit,
};

std::string_view to_string(BlockKind kind);

struct LinearTerm {
  int var = 0;
  double coef = 0.0;
};

/// coef * x[a] * x[b]; a == b gives a square term.
struct QuadTerm {
  int a = 0;
  int b = 0;
  double coef = 0.0;
};

/// Structural nonzero (row, col). For Hessians, row >= col.
struct Entry {
  int row = 0;
  int col = 0;
};

/// A group of constraint rows of one kind. Each row i has a body g_i(x) and
/// range lower(i) <= g_i(x) <= upper(i); equality rows have lower == upper.
///
/// Derivative structures are fixed at construction: `jacobian_values` and
/// `hessian_values` write into the slots listed by the matching structure
/// call, in the same order. Row indices in structures are block-local; column
/// indices are model variable indices. Duplicate entries are summed.
class ConstraintBlock {
 public:
  virtual ~ConstraintBlock() = default;

  virtual BlockKind kind() const = 0;
  const std::string& name() const { return name_; }
  std::size_t size() const { return lower_.size(); }
  double lower(std::size_t r) const { return lower_[r]; }
  double upper(std::size_t r) const { return upper_[r]; }

  virtual void eval(std::span<const double> x, std::span<double> body) const = 0;
  virtual std::vector<Entry> jacobian_structure() const = 0;
  virtual void jacobian_values(std::span<const double> x, std::span<double> vals) const = 0;
  virtual std::vector<Entry> hessian_structure() const = 0;
  /// Accumulates nothing; overwrites `vals` with sum_i duals[i] * hess(g_i).
  virtual void hessian_values(std::span<const double> x, std::span<const double> duals,
                              std::span<double> vals) const = 0;
  /// Largest variable index referenced, -1 for an empty block.
  virtual int max_variable() const = 0;
  virtual void dump_row(std::ostream& os, std::size_t r) const = 0;

 protected:
  explicit ConstraintBlock(std::string name) : name_(std::move(name)) {}
  void add_range(double lo, double hi) {
    lower_.push_back(lo);
    upper_.push_back(hi);
  }

 private:
  std::string name_;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

using BlockPtr = std::shared_ptr<const ConstraintBlock>;

/// Rows of sum(coef * x). Kind is LinearEq or LinearIneq.
class LinearBlock final : public ConstraintBlock {
 public:
  LinearBlock(std::string name, BlockKind kind);
  void add_row(std::vector<LinearTerm> terms, double lower, double upper);

  BlockKind kind() const override { return kind_; }
  const std::vector<LinearTerm>& row(std::size_t r) const { return rows_[r]; }
  void eval(std::span<const double> x, std::span<double> body) const override;
  std::vector<Entry> jacobian_structure() const override;
  void jacobian_values(std::span<const double> x, std::span<double> vals) const override;
  std::vector<Entry> hessian_structure() const override { return {}; }
  void hessian_values(std::span<const double>, std::span<const double>,
                      std::span<double>) const override {}
  int max_variable() const override;
  void dump_row(std::ostream& os, std::size_t r) const override;

 private:
  BlockKind kind_;
  std::vector<std::vector<LinearTerm>> rows_;
};

/// Rows of sum(linear) + sum(quadratic).
class QuadraticBlock final : public ConstraintBlock {
 public:
  explicit QuadraticBlock(std::string name) : ConstraintBlock(std::move(name)) {}
  void add_row(std::vector<LinearTerm> linear, std::vector<QuadTerm> quadratic, double lower,
               double upper);

  BlockKind kind() const override { return BlockKind::QuadraticIneq; }
  void eval(std::span<const double> x, std::span<double> body) const override;
  std::vector<Entry> jacobian_structure() const override;
  void jacobian_values(std::span<const double> x, std::span<double> vals) const override;
  std::vector<Entry> hessian_structure() const override;
  void hessian_values(std::span<const double> x, std::span<const double> duals,
                      std::span<double> vals) const override;
  int max_variable() const override;
  void dump_row(std::ostream& os, std::size_t r) const override;

 private:
  struct Row {
    std::vector<LinearTerm> linear;
    std::vector<QuadTerm> quadratic;
  };
  std::vector<Row> rows_;
};

/// Rotated cone rows: re^2 + im^2 - wii * wjj <= 0.
class SocConeBlock final : public ConstraintBlock {
 public:
  explicit SocConeBlock(std::string name) : ConstraintBlock(std::move(name)) {}
  void add_row(int re, int im, int wii, int wjj);

  BlockKind kind() const override { return BlockKind::SocCone; }
  void eval(std::span<const double> x, std::span<double> body) const override;
  std::vector<Entry> jacobian_structure() const override;
  void jacobian_values(std::span<const double> x, std::span<double> vals) const override;
  std::vector<Entry> hessian_structure() const override;
  void hessian_values(std::span<const double> x, std::span<const double> duals,
                      std::span<double> vals) const override;
  int max_variable() const override;
  void dump_row(std::ostream& os, std::size_t r) const override;

 private:
  struct Row {
    int re, im, wii, wjj;
  };
  std::vector<Row> rows_;
};

/// Polar branch-flow rows:
///   a*vi^2 + vi*vj*(b*cos(ti - tj) + c*sin(ti - tj)) - flow = 0.
class AcFlowBlock final : public ConstraintBlock {
 public:
  struct Row {
    int flow, vi, vj, ti, tj;
    double a, b, c;
  };
  explicit AcFlowBlock(std::string name) : ConstraintBlock(std::move(name)) {}
  void add_row(const Row& row);
  const Row& row(std::size_t r) const { return rows_[r]; }

  BlockKind kind() const override { return BlockKind::AcFlowPolar; }
  void eval(std::span<const double> x, std::span<double> body) const override;
  std::vector<Entry> jacobian_structure() const override;
  void jacobian_values(std::span<const double> x, std::span<double> vals) const override;
  std::vector<Entry> hessian_structure() const override;
  void hessian_values(std::span<const double> x, std::span<const double> duals,
                      std::span<double> vals) const override;
  int max_variable() const override;
  void dump_row(std::ostream& os, std::size_t r) const override;

 private:
  std::vector<Row> rows_;
};

/// Smooth thermal limit rows: p^2 + q^2 <= limit^2.
class ApparentPowerBlock final : public ConstraintBlock {
 public:
  explicit ApparentPowerBlock(std::string name) : ConstraintBlock(std::move(name)) {}
  void add_row(int p, int q, double limit);

  BlockKind kind() const override { return BlockKind::ApparentPowerLimit; }
  void eval(std::span<const double> x, std::span<double> body) const override;
  std::vector<Entry> jacobian_structure() const override;
  void jacobian_values(std::span<const double> x, std::span<double> vals) const override;
  std::vector<Entry> hessian_structure() const override;
  void hessian_values(std::span<const double> x, std::span<const double> duals,
                      std::span<double> vals) const override;
  int max_variable() const override;
  void dump_row(std::ostream& os, std::size_t r) const override;

 private:
  struct Row {
    int p, q;
  };
  std::vector<Row> rows_;
};

/// Variables, constraint blocks, and a linear objective c'x + offset.
class ModelIR {
 public:
  /// Adds a variable; the initial value is clamped into its bounds.
  int add_variable(Variable v);
  /// Row offsets are fixed here; the block must not grow afterwards.
  void add_block(BlockPtr block);
  void add_objective_term(int var, double coef);
  void add_objective_constant(double c) { objective_offset_ += c; }

  std::span<const Variable> variables() const { return variables_; }
  const Variable& variable(int i) const { return variables_[static_cast<std::size_t>(i)]; }
  std::span<const BlockPtr> blocks() const { return blocks_; }
  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_rows() const { return num_rows_; }
  /// Offset of each block's first row in the stacked row vector.
  std::vector<std::size_t> row_offsets() const;

  /// Dense objective coefficients, one per variable.
  std::vector<double> objective_coefficients() const;
  double objective_offset() const { return objective_offset_; }
  double objective(std::span<const double> x) const;

  std::vector<double> initial_point() const;
  std::vector<double> row_lower() const;
  std::vector<double> row_upper() const;

  /// Checks every variable index in blocks and objective; throws on failure.
  void check() const;

 private:
  std::vector<Variable> variables_;
  std::vector<BlockPtr> blocks_;
  std::vector<LinearTerm> objective_;
  double objective_offset_ = 0.0;
  std::size_t num_rows_ = 0;
};

/// Stacked constraint bodies g(x) in block order.
std::vector<double> eval_constraints(const ModelIR& m, std::span<const double> x);

/// Per-row residuals: g(x) - rhs for equality rows; for range rows the signed
/// distance outside [lower, upper] (0 when inside).
std::vector<double> eval_residuals(const ModelIR& m, std::span<const double> x);

/// Constraint Jacobian, rows x variables. Structural zeros are kept, so the
/// pattern does not depend on x.
Eigen::SparseMatrix<double> eval_jacobian(const ModelIR& m, std::span<const double> x);

/// obj_scale * hess(f) + sum_i duals[i] * hess(g_i), both triangles stored.
/// The objective is linear, so obj_scale only matters for the signature.
Eigen::SparseMatrix<double> eval_lagrangian_hessian(const ModelIR& m,
                                                    std::span<const double> x,
                                                    std::span<const double> duals,
                                                    double obj_scale = 1.0);

/// Stacked derivative structures with global row indices, for solvers that
/// refill values in place.
struct DerivativeStructure {
  std::vector<Entry> jacobian;
  std::vector<Entry> hessian;  ///< lower triangle
  std::vector<std::size_t> jacobian_block_nnz;
  std::vector<std::size_t> hessian_block_nnz;
};
DerivativeStructure derivative_structure(const ModelIR& m);
void jacobian_values(const ModelIR& m, const DerivativeStructure& s,
                     std::span<const double> x, std::span<double> vals);
void hessian_values(const ModelIR& m, const DerivativeStructure& s, std::span<const double> x,
                    std::span<const double> duals, std::span<double> vals);

/// Human-readable listing of variables, objective and rows.
void dump(const ModelIR& m, std::ostream& os);
std::string dump(const ModelIR& m);

}  // namespace opf
