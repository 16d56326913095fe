#include "opf/pwlcost.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "opf/errors.hpp"

namespace opf {

SlopesIntercepts derive_slopes_intercepts(std::span<const CostPoint> points) {
  if (points.size() < 2) {
    throw DegenerateSegment("piecewise-linear cost needs at least two points");
  }
  SlopesIntercepts out;
  out.slopes.reserve(points.size() - 1);
  out.intercepts.reserve(points.size() - 1);
  for (std::size_t l = 1; l < points.size(); ++l) {
    const double dp = points[l].power - points[l - 1].power;
    if (!(dp > 0.0)) {
      std::ostringstream msg;
      msg << "cost points " << l - 1 << " and " << l
          << " do not have strictly increasing power (" << points[l - 1].power << ", "
          << points[l].power << ")";
      throw DegenerateSegment(msg.str());
    }
    const double slope = (points[l].cost - points[l - 1].cost) / dp;
    out.slopes.push_back(slope);
    out.intercepts.push_back(points[l].cost - slope * points[l].power);
  }
  return out;
}

PwlCurve::PwlCurve(std::vector<CostPoint> points)
    : points_(std::move(points)), derived_(derive_slopes_intercepts(points_)) {}

std::vector<AssumptionViolation> check_assumptions(const PwlCurve& curve, double pmin,
                                                   double pmax) {
  std::vector<AssumptionViolation> out;
  const auto pts = curve.points();
  const std::size_t p = pts.size();
  const bool fixed = pmin == pmax;

  // A fixed generator sits on a single segment; both ends may touch it.
  const bool lower_ok = fixed ? (pts[0].power <= pmin && pmin <= pts[1].power)
                              : (pts[0].power <= pmin && pmin < pts[1].power);
  if (!lower_ok) {
    std::ostringstream msg;
    msg << "pmin=" << pmin << " is not in the first segment [" << pts[0].power << ", "
        << pts[1].power << ")";
    out.push_back({AssumptionKind::LowerBoundInFirstSegment, -1, msg.str()});
  }
  const bool upper_ok = fixed ? (pts[p - 2].power <= pmax && pmax <= pts[p - 1].power)
                              : (pts[p - 2].power < pmax && pmax <= pts[p - 1].power);
  if (!upper_ok) {
    std::ostringstream msg;
    msg << "pmax=" << pmax << " is not in the last segment (" << pts[p - 2].power << ", "
        << pts[p - 1].power << "]";
    out.push_back({AssumptionKind::UpperBoundInLastSegment, -1, msg.str()});
  }
  const auto slopes = curve.slopes();
  for (std::size_t l = 1; l < slopes.size(); ++l) {
    if (!(slopes[l - 1] < slopes[l])) {
      std::ostringstream msg;
      msg << "slope of segment " << l << " (" << slopes[l]
          << ") is not strictly greater than segment " << l - 1 << " (" << slopes[l - 1]
          << ")";
      out.push_back({AssumptionKind::StrictlyIncreasingSlopes, static_cast<int>(l),
                     msg.str()});
    }
  }
  return out;
}

PwlCurve preprocess(const PwlCurve& curve, double pmin, double pmax, double slope_tol) {
  if (pmin > pmax) {
    throw DomainError("preprocess: pmin exceeds pmax");
  }
  const auto slopes = curve.slopes();
  for (std::size_t l = 1; l < slopes.size(); ++l) {
    if (slopes[l] < slopes[l - 1] - slope_tol) {
      std::ostringstream msg;
      msg << "cost curve is not convex at breakpoint " << l << " (power "
          << curve.points()[l].power << "): slope drops from " << slopes[l - 1] << " to "
          << slopes[l];
      throw ConvexityError(static_cast<int>(l), msg.str());
    }
  }

  std::vector<CostPoint> pts(curve.points().begin(), curve.points().end());

  // Rule 1: extend the end segments along their own slope.
  if (pmin < pts.front().power) {
    const double s = slopes.front();
    pts.front().cost -= s * (pts.front().power - pmin);
    pts.front().power = pmin;
  }
  if (pts.back().power < pmax) {
    const double s = slopes.back();
    pts.back().cost += s * (pmax - pts.back().power);
    pts.back().power = pmax;
  }

  // Rule 2: drop segments entirely outside [pmin, pmax].
  std::size_t first = 0;
  while (pts.size() - first > 2 && pts[first + 1].power <= pmin) {
    ++first;
  }
  std::size_t last = pts.size();
  while (last - first > 2 && pts[last - 2].power >= pmax) {
    --last;
  }
  pts = std::vector<CostPoint>(pts.begin() + static_cast<std::ptrdiff_t>(first),
                               pts.begin() + static_cast<std::ptrdiff_t>(last));

  // Rule 3: merge nearly collinear neighbours, one interior point at a time.
  bool merged = true;
  while (merged && pts.size() > 2) {
    merged = false;
    const auto d = derive_slopes_intercepts(pts);
    for (std::size_t l = 1; l < d.slopes.size(); ++l) {
      if (std::abs(d.slopes[l] - d.slopes[l - 1]) <= slope_tol) {
        pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(l));
        merged = true;
        break;
      }
    }
  }

  PwlCurve out(std::move(pts));
  out.mark_validated();
  return out;
}

double evaluate(const PwlCurve& curve, double x) {
  if (!(x >= curve.min_power() && x <= curve.max_power())) {
    std::ostringstream msg;
    msg << "evaluate: x=" << x << " outside [" << curve.min_power() << ", "
        << curve.max_power() << "]";
    throw DomainError(msg.str());
  }
  const auto slopes = curve.slopes();
  const auto intercepts = curve.intercepts();
  double best = slopes[0] * x + intercepts[0];
  for (std::size_t l = 1; l < slopes.size(); ++l) {
    best = std::max(best, slopes[l] * x + intercepts[l]);
  }
  return best;
}

double evaluate_polynomial(double a, double b, double c, double x) {
  return c * x * x + b * x + a;
}

}  // namespace opf
