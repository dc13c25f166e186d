#include "gw/second_order.hpp"

#include <algorithm>
#include <cmath>

namespace gw {

double qfunc(double t) { return 0.5 * std::erfc(t / std::sqrt(2.0)); }

double qinv(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("qinv: eps must lie in (0,1)");
  // Q is decreasing; bisect until the bracket stops shrinking
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (qfunc(mid) > eps)
      lo = mid;
    else
      hi = mid;
  }
  double t = 0.5 * (lo + hi);
  const double dens = std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI);
  if (dens > 0.0) {
    const double next = t + (qfunc(t) - eps) / dens;
    if (std::abs(qfunc(next) - eps) < std::abs(qfunc(t) - eps)) t = next;
  }
  return t;
}

Slopes slopes(const JointDist& source, double r1, double r2, double h, const SolverConfig& config) {
  if (!(h > 0.0)) throw ValidationError("slopes: step must be > 0");
  if (r1 - h < 0.0 || r2 - h < 0.0) throw PreconditionError("slopes: r_star - h leaves the quadrant");
  Slopes s;
  s.at_star = rate_function(source, r1, r2, config);
  if (s.at_star.value <= 1e-9)
    throw PreconditionError("slopes: R is not strictly positive at r_star");
  s.dual = s.at_star.lambdas;
  const std::vector<CondChannel> hint{s.at_star.solution.channel};
  auto R = [&](double a, double b) { return rate_function(source, a, b, config, hint).value; };
  const double l1 = -(R(r1 + h, r2) - R(r1 - h, r2)) / (2 * h);
  const double l2 = -(R(r1, r2 + h) - R(r1, r2 - h)) / (2 * h);
  const double l1h = -(R(r1 + h / 2, r2) - R(r1 - h / 2, r2)) / h;
  const double l2h = -(R(r1, r2 + h / 2) - R(r1, r2 - h / 2)) / h;
  s.lambda1 = l1;
  s.lambda2 = l2;
  s.slope_error = std::max({std::abs(l1 - l1h), std::abs(l2 - l2h), kSlopeErrorFloor});
  const double off = std::max(std::abs(l1 - s.dual.lambda1), std::abs(l2 - s.dual.lambda2));
  if (off > 10.0 * s.slope_error)
    throw NonSmoothPointError("slopes: finite differences (" + std::to_string(l1) + ", " +
                              std::to_string(l2) + ") disagree with dual multipliers (" +
                              std::to_string(s.dual.lambda1) + ", " + std::to_string(s.dual.lambda2) +
                              ")");
  return s;
}

SecondOrderPlane second_order_region(const JointDist& source, const RatePoint& r_star, double eps,
                                     const SolverConfig& config, double h) {
  const double q = qinv(eps);
  const Slopes s = slopes(source, r_star.r1, r_star.r2, h, config);
  if (std::abs(r_star.r0 - s.at_star.value) > 1e-4)
    throw PreconditionError("second_order_region: r0 is off the boundary, R = " +
                            std::to_string(s.at_star.value));
  const RateTargets r{r_star.r1, r_star.r2};
  const TiltedTable t = tilted_from_channel(source, s.at_star.solution, s.dual, r);
  SecondOrderPlane p;
  p.lambda1 = s.lambda1;
  p.lambda2 = s.lambda2;
  p.variance = t.variance;
  p.epsilon = eps;
  p.threshold = std::sqrt(t.variance) * q;
  p.slope_error = s.slope_error;
  p.r_star = r_star;
  return p;
}

bool membership(const std::array<double, 3>& L, const SecondOrderPlane& plane) {
  const double lhs = L[0] + plane.lambda1 * L[1] + plane.lambda2 * L[2];
  return lhs >= plane.threshold - 1e-12 * std::max(1.0, std::abs(plane.threshold));
}

std::array<double, 3> finite_n_rates(const SecondOrderPlane& plane, const RatePoint& r_star, long n,
                                     const std::array<double, 3>& split) {
  if (n < 1) throw ValidationError("finite_n_rates: n must be >= 1");
  const double on = split[0] + plane.lambda1 * split[1] + plane.lambda2 * split[2];
  if (std::abs(on - plane.threshold) > 1e-9)
    throw ValidationError("finite_n_rates: split is off the plane");
  const double sn = std::sqrt(static_cast<double>(n)), dn = static_cast<double>(n);
  return {dn * r_star.r0 + sn * split[0], dn * r_star.r1 + sn * split[1], dn * r_star.r2 + sn * split[2]};
}

std::string to_string(PanglossStatus s) {
  switch (s) {
    case PanglossStatus::CertifiedInside: return "certified-inside";
    case PanglossStatus::InsideTriangle: return "inside-triangle";
    case PanglossStatus::Outside: return "outside";
    case PanglossStatus::Unknown: return "unknown";
  }
  return "unknown";
}

namespace {

// barycentric weights of p in triangle (a,b,c) on the (r1,r2) projection; empty if degenerate
std::optional<std::array<double, 3>> barycentric(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                                                 const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  Eigen::Matrix2d m;
  m.col(0) = b - a;
  m.col(1) = c - a;
  if (std::abs(m.determinant()) < 1e-12) return std::nullopt;
  const Eigen::Vector2d uv = m.partialPivLu().solve(p - a);
  return std::array<double, 3>{1.0 - uv(0) - uv(1), uv(0), uv(1)};
}

double min_of(const std::array<double, 3>& w) { return std::min({w[0], w[1], w[2]}); }

}  // namespace

PanglossCheck pangloss_membership(const JointDist& source, const RatePoint& r, const SolverConfig& config) {
  PanglossCheck out;
  const double h = entropy(source);
  if (r.r0 < 0 || r.r1 < 0 || r.r2 < 0 || std::abs(r.r0 + r.r1 + r.r2 - h) > 1e-9) {
    out.status = PanglossStatus::Outside;
    return out;
  }
  const double hx_y = conditional_entropy(source, Axis::X), hy_x = conditional_entropy(source, Axis::Y);
  const Eigen::Vector2d p(r.r1, r.r2), A(0, 0), B(hx_y, 0), C(0, hy_x);
  if (auto w = barycentric(p, A, B, C)) {
    if (min_of(*w) >= kPanglossMargin) {
      out.status = PanglossStatus::CertifiedInside;
      return out;
    }
    if (min_of(*w) >= -1e-12) {
      out.status = PanglossStatus::InsideTriangle;
      return out;
    }
  } else if ((p - A).norm() <= 1e-12) {
    out.status = PanglossStatus::InsideTriangle;
    return out;
  }
  const WynerResult cw = wyner_ci(source, config);
  out.wyner_value = cw.value;
  out.wyner_certified = cw.certified;
  if (r.r0 < cw.value - 1e-4) {
    out.status = PanglossStatus::Outside;
    return out;
  }
  if (cw.certified) {
    // hull of the triangle and the Markov point found for C_W
    const Eigen::Vector2d D(cw.solution.rates.r1, cw.solution.rates.r2);
    const std::array<Eigen::Vector2d, 4> v{A, B, C, D};
    for (int skip = 0; skip < 4; ++skip) {
      std::array<Eigen::Vector2d, 3> t;
      int k = 0;
      for (int i = 0; i < 4; ++i)
        if (i != skip) t[k++] = v[i];
      if (auto w = barycentric(p, t[0], t[1], t[2]); w && min_of(*w) >= kPanglossMargin) {
        out.status = PanglossStatus::CertifiedInside;
        return out;
      }
    }
  }
  out.status = PanglossStatus::Unknown;
  return out;
}

SecondOrderPlane pangloss_plane(const JointDist& source, const RatePoint& r_star, double eps,
                                const SolverConfig& config) {
  const double q = qinv(eps);
  const double h = entropy(source);
  if (std::abs(r_star.r0 + r_star.r1 + r_star.r2 - h) > 1e-9)
    throw PreconditionError("pangloss_plane: r0 + r1 + r2 differs from H(X,Y)");
  const PanglossCheck m = pangloss_membership(source, r_star, config);
  if (m.status == PanglossStatus::Outside)
    throw PreconditionError("pangloss_plane: point is outside the Pangloss face");
  double mean = 0.0, var = 0.0;
  for (Index c = 0; c < source.cells(); ++c)
    if (source.cell(c) > 0.0) mean -= source.cell(c) * std::log2(source.cell(c));
  for (Index c = 0; c < source.cells(); ++c)
    if (source.cell(c) > 0.0) {
      const double d = -std::log2(source.cell(c)) - mean;
      var += source.cell(c) * d * d;
    }
  SecondOrderPlane plane;
  plane.lambda1 = 1.0;
  plane.lambda2 = 1.0;
  plane.variance = var;
  plane.epsilon = eps;
  plane.threshold = std::sqrt(plane.variance) * q;
  plane.r_star = r_star;
  return plane;
}

}  // namespace gw
