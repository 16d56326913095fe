#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace opf {

/// One breakpoint of a piecewise-linear cost: power in p.u., cost in $/h.
struct CostPoint {
  double power = 0.0;
  double cost = 0.0;
  bool operator==(const CostPoint&) const = default;
};

struct SlopesIntercepts {
  std::vector<double> slopes;
  std::vector<double> intercepts;
};

/// Slope and intercept of each segment between consecutive points.
/// Requires at least two points with strictly increasing power.
SlopesIntercepts derive_slopes_intercepts(std::span<const CostPoint> points);

/// Convex piecewise-linear cost given as an ordered list of breakpoints.
///
/// Segment l (0-based) joins points l and l+1 and has slope `slopes()[l]` and
/// intercept `intercepts()[l]`, so a curve with p points has p-1 segments.
/// The `validated` flag is set only by `preprocess`, or by `mark_validated`
/// after `check_assumptions` came back empty.
class PwlCurve {
 public:
  PwlCurve() = default;
  explicit PwlCurve(std::vector<CostPoint> points);

  std::span<const CostPoint> points() const { return points_; }
  std::span<const double> slopes() const { return derived_.slopes; }
  std::span<const double> intercepts() const { return derived_.intercepts; }
  std::size_t num_points() const { return points_.size(); }
  std::size_t num_segments() const { return derived_.slopes.size(); }

  double min_power() const { return points_.front().power; }
  double max_power() const { return points_.back().power; }

  bool validated() const { return validated_; }
  void mark_validated() { validated_ = true; }

  bool operator==(const PwlCurve& o) const { return points_ == o.points_; }

 private:
  std::vector<CostPoint> points_;
  SlopesIntercepts derived_;
  bool validated_ = false;
};

/// Quadratic cost c*x^2 + b*x + a. Coefficients are kept as read from the
/// case file, i.e. over MW, not p.u.
struct PolynomialCost {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  bool operator==(const PolynomialCost&) const = default;
};

using CostSpec = std::variant<PolynomialCost, PwlCurve>;

enum class AssumptionKind {
  LowerBoundInFirstSegment,
  UpperBoundInLastSegment,
  StrictlyIncreasingSlopes,
};

struct AssumptionViolation {
  AssumptionKind kind;
  /// Segment index for slope violations, -1 otherwise.
  int segment = -1;
  std::string message;
};

/// Reports every violated modeling assumption: pmin must lie in the first
/// segment, pmax in the last, and slopes must be strictly increasing.
std::vector<AssumptionViolation> check_assumptions(const PwlCurve& curve, double pmin,
                                                   double pmax);

/// Default merge tolerance for adjacent slopes.
inline constexpr double kDefaultSlopeTol = 1e-7;

/// Cleans a raw curve against generator bounds [pmin, pmax]:
///   1. the first/last segment is extended along its own slope to reach a
///      bound that lies beyond the curve (the end point moves);
///   2. leading/trailing segments lying entirely outside the bounds are
///      dropped, keeping one breakpoint on each side;
///   3. adjacent segments whose slopes differ by at most slope_tol are merged.
/// Throws ConvexityError when slopes decrease by more than slope_tol.
PwlCurve preprocess(const PwlCurve& curve, double pmin, double pmax,
                    double slope_tol = kDefaultSlopeTol);

/// Max-of-segments evaluation. Throws DomainError outside the curve's power
/// range.
double evaluate(const PwlCurve& curve, double x);

double evaluate_polynomial(double a, double b, double c, double x);
inline double evaluate_polynomial(const PolynomialCost& p, double x) {
  return evaluate_polynomial(p.a, p.b, p.c, x);
}

}  // namespace opf
