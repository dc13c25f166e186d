#include "gw/tilted_density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gw {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void finish(TiltedTable& t, const JointDist& source) {
  t.mean = 0.0;
  for (Index c = 0; c < source.cells(); ++c)
    if (source.cell(c) > 0.0) t.mean += source.cell(c) * t.values(c / source.y_size(), c % source.y_size());
  t.variance = dispersion(t, source);
  t.max_spread = 0.0;
  for (Index c = 0; c < source.cells(); ++c)
    if (source.cell(c) > 0.0)
      t.max_spread = std::max(t.max_spread, t.spread(c / source.y_size(), c % source.y_size()));
  t.non_optimal = t.max_spread > kSpreadFlag;
}

}  // namespace

TiltedTable tilted_from_channel(const JointDist& source, const TestChannelSolution& sol,
                                const LagrangePair& l, const RateTargets& r) {
  if (sol.channel.in_size() != source.cells())
    throw ValidationError("tilted_from_channel: channel does not match the source");
  TiltedTable t;
  t.r_targets = r;
  t.lambdas = l;
  t.values = Matrix::Constant(source.x_size(), source.y_size(), kNaN);
  t.spread = Matrix::Constant(source.x_size(), source.y_size(), kNaN);
  const Index W = sol.channel.out_size();
  std::vector<std::pair<double, double>> terms;  // (value, weight)
  for (Index c = 0; c < source.cells(); ++c) {
    if (source.cell(c) <= 0.0) continue;
    const Index x = c / source.y_size(), y = c % source.y_size();
    terms.clear();
    for (Index w = 0; w < W; ++w) {
      const double v = sol.channel(c, w);
      if (v <= 0.0) continue;
      const double e = std::log2(v / sol.marginal_w(w)) +
                       l.lambda1 * (-std::log2(sol.x_given_w(w, x)) - r.r1) +
                       l.lambda2 * (-std::log2(sol.y_given_w(w, y)) - r.r2);
      terms.emplace_back(e, v);
    }
    if (terms.empty()) throw DomainError("tilted_from_channel: empty channel row on the support");
    // sorted so that relabelling W atoms gives bit-identical sums
    std::sort(terms.begin(), terms.end());
    double s = 0.0, z = 0.0;
    for (const auto& [e, v] : terms) {
      s += v * e;
      z += v;
    }
    t.values(x, y) = s / z;
    t.spread(x, y) = terms.back().first - terms.front().first;
  }
  finish(t, source);
  return t;
}

TiltedTable tilted_via_expectation(const JointDist& source, const Marginals& q, const LagrangePair& l,
                                   const RateTargets& r) {
  TiltedTable t;
  t.r_targets = r;
  t.lambdas = l;
  t.values = Matrix::Constant(source.x_size(), source.y_size(), kNaN);
  t.spread = Matrix::Constant(source.x_size(), source.y_size(), kNaN);
  for (Index c = 0; c < source.cells(); ++c) {
    if (source.cell(c) <= 0.0) continue;
    const Index x = c / source.y_size(), y = c % source.y_size();
    t.values(x, y) = lambda_fn(x, y, q, l, r);
    t.spread(x, y) = 0.0;
  }
  finish(t, source);
  return t;
}

double check_well_defined(const JointDist& source, const TestChannelSolution& a,
                          const TestChannelSolution& b, const LagrangePair& l, const RateTargets& r) {
  const TiltedTable ta = tilted_via_expectation(source, a.marginals(), l, r);
  const TiltedTable tb = tilted_via_expectation(source, b.marginals(), l, r);
  double d = 0.0;
  for (Index c = 0; c < source.cells(); ++c) {
    if (source.cell(c) <= 0.0) continue;
    const Index x = c / source.y_size(), y = c % source.y_size();
    d = std::max(d, std::abs(ta.values(x, y) - tb.values(x, y)));
  }
  return d;
}

double dispersion(const TiltedTable& table, const JointDist& source) {
  if (table.values.rows() != source.x_size() || table.values.cols() != source.y_size())
    throw ValidationError("dispersion: table does not match the source");
  double m = 0.0;
  for (Index c = 0; c < source.cells(); ++c)
    if (source.cell(c) > 0.0) m += source.cell(c) * table.values(c / source.y_size(), c % source.y_size());
  double v = 0.0;
  for (Index c = 0; c < source.cells(); ++c)
    if (source.cell(c) > 0.0) {
      const double d = table.values(c / source.y_size(), c % source.y_size()) - m;
      v += source.cell(c) * d * d;
    }
  return v;
}

DerivativeCheck derivative_check(const JointDist& source, const RateTargets& r, Index coord, double h,
                                 const SolverConfig& config) {
  const SimplexParam base = theta_embed(source, source);
  if (coord < 0 || coord >= base.m() - 1)
    throw ValidationError("derivative_check: coordinate out of range");
  if (!(h > 0.0)) throw ValidationError("derivative_check: step must be > 0");
  const Index last = base.support_order.back();
  const double pi = base.theta(coord), pm = source.cell(last);
  if (pi - h <= 0.0 || pm - h <= 0.0)
    throw DomainError("derivative_check: perturbation leaves the support");

  const RateResult centre = rate_function(source, r.r1, r.r2, config);
  const std::vector<CondChannel> hint{centre.solution.channel};
  auto rate_at = [&](double step) {
    SimplexParam s = base;
    s.theta(coord) += step;
    return rate_function(theta_restore(s), r.r1, r.r2, config, hint).value;
  };
  DerivativeCheck out;
  out.lhs = (rate_at(h) - rate_at(-h)) / (2.0 * h);
  out.lhs_half = (rate_at(h / 2) - rate_at(-h / 2)) / h;
  const TiltedTable t = tilted_from_channel(source, centre.solution, centre.lambdas, r);
  const Index ci = base.support_order[coord];
  out.rhs = t.values(ci / source.y_size(), ci % source.y_size()) -
            t.values(last / source.y_size(), last % source.y_size());
  out.abs_error = std::abs(out.lhs - out.rhs);
  out.smooth = std::abs(out.lhs - out.lhs_half) <= 10.0 * kFdTolerance;
  return out;
}

}  // namespace gw
