#include "gw/region_solver.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>
#include <string>

#include "solver_detail.hpp"

namespace gw {

namespace detail {

SupportView::SupportView(const JointDist& src) : x_size(src.x_size()), y_size(src.y_size()) {
  for (Index c = 0; c < src.cells(); ++c) {
    if (src.cell(c) <= 0.0) continue;
    cell.push_back(c);
    x.push_back(c / y_size);
    y.push_back(c % y_size);
    p.push_back(src.cell(c));
  }
}

void induce(const SupportView& s, const Matrix& ch, Induced& out) {
  const Index W = ch.cols();
  out.qw.setZero(W);
  out.ax.setZero(W, s.x_size);
  out.ay.setZero(W, s.y_size);
  for (Index i = 0; i < s.size(); ++i) {
    const double p = s.p[i];
    for (Index w = 0; w < W; ++w) {
      const double m = p * ch(s.cell[i], w);
      out.qw(w) += m;
      out.ax(w, s.x[i]) += m;
      out.ay(w, s.y[i]) += m;
    }
  }
}

RateTriple rates(const SupportView& s, const Matrix& ch, const Induced& ind) {
  const Index W = ch.cols();
  RateTriple t;
  double i_wxy = 0.0;
  for (Index i = 0; i < s.size(); ++i)
    for (Index w = 0; w < W; ++w) {
      const double v = ch(s.cell[i], w);
      if (v > 0.0) i_wxy += s.p[i] * v * std::log2(v / ind.qw(w));
    }
  double hx = 0.0, hy = 0.0;
  for (Index w = 0; w < W; ++w) {
    const double q = ind.qw(w);
    if (q <= 0.0) continue;
    for (Index x = 0; x < s.x_size; ++x) {
      const double a = ind.ax(w, x);
      if (a > 0.0) hx -= a * std::log2(a / q);
    }
    for (Index y = 0; y < s.y_size; ++y) {
      const double a = ind.ay(w, y);
      if (a > 0.0) hy -= a * std::log2(a / q);
    }
  }
  t.r0 = std::max(i_wxy, 0.0);
  t.r1 = std::max(hx, 0.0);
  t.r2 = std::max(hy, 0.0);
  return t;
}

void inner_update(const SupportView& s, const Induced& ind, const LagrangePair& l, Matrix& ch,
                  std::vector<double>& scratch) {
  const Index W = ch.cols();
  const double ninf = -kInf;
  // scratch layout: lq[W] | lx[W*X] | ly[W*Y]
  scratch.resize(W * (1 + s.x_size + s.y_size));
  double* lq = scratch.data();
  double* lx = lq + W;
  double* ly = lx + W * s.x_size;
  for (Index w = 0; w < W; ++w) {
    const double q = ind.qw(w);
    lq[w] = q > 0.0 ? std::log2(q) : ninf;
    for (Index x = 0; x < s.x_size; ++x) {
      const double a = ind.ax(w, x);
      lx[w * s.x_size + x] = a > 0.0 ? std::log2(a) - lq[w] : ninf;
    }
    for (Index y = 0; y < s.y_size; ++y) {
      const double a = ind.ay(w, y);
      ly[w * s.y_size + y] = a > 0.0 ? std::log2(a) - lq[w] : ninf;
    }
  }
  for (Index i = 0; i < s.size(); ++i) {
    const Index c = s.cell[i];
    double top = ninf;
    for (Index w = 0; w < W; ++w) {
      const double a = lx[w * s.x_size + s.x[i]], b = ly[w * s.y_size + s.y[i]];
      const double t = (a == ninf || b == ninf) ? ninf : lq[w] + l.lambda1 * a + l.lambda2 * b;
      ch(c, w) = t;
      top = std::max(top, t);
    }
    if (top == ninf) throw DomainError("inner_channel_update: zero normalizer on a support cell");
    double z = 0.0;
    for (Index w = 0; w < W; ++w) {
      const double t = ch(c, w);
      const double e = t == ninf ? 0.0 : std::exp2(t - top);
      ch(c, w) = e;
      z += e;
    }
    ch.row(c) /= z;
  }
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

using detail::Induced;
using detail::SupportView;

LagrangePair::LagrangePair(double l1, double l2) : lambda1(l1), lambda2(l2) {
  if (!(l1 > 0.0) || !(l2 > 0.0) || !std::isfinite(l1) || !std::isfinite(l2))
    throw ValidationError("LagrangePair: multipliers must be finite and strictly positive");
}

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw ValidationError("SolverConfig: tol must be > 0");
  if (max_iter < 1) throw ValidationError("SolverConfig: max_iter must be >= 1");
  if (restarts < 1) throw ValidationError("SolverConfig: restarts must be >= 1");
  if (search_restarts < 0) throw ValidationError("SolverConfig: search_restarts must be >= 0");
  if (grid_lo > grid_hi) throw ValidationError("SolverConfig: empty lambda grid");
  if (w_size_override && *w_size_override < 1)
    throw ValidationError("SolverConfig: w_size_override must be >= 1");
}

Index SolverConfig::w_size(const JointDist& src) const {
  return w_size_override ? *w_size_override : src.cells() + 2;
}

double lagrangian(const RateTriple& t, const LagrangePair& l) {
  return t.r0 + l.lambda1 * t.r1 + l.lambda2 * t.r2;
}

namespace {

void check_channel(const CondChannel& ch, const JointDist& src) {
  if (ch.in_size() != src.cells())
    throw ValidationError("channel rows must match the source cell count");
}

void check_marginals(const Marginals& q, const JointDist& src, Index W) {
  if (q.w.size() != W || q.x_given_w.in_size() != W || q.y_given_w.in_size() != W ||
      q.x_given_w.out_size() != src.x_size() || q.y_given_w.out_size() != src.y_size())
    throw ValidationError("q-arguments: dimension mismatch");
}

}  // namespace

Marginals outer_marginal_update(const CondChannel& channel, const JointDist& source) {
  check_channel(channel, source);
  const SupportView s(source);
  Induced ind;
  detail::induce(s, channel.rows(), ind);
  const Index W = channel.out_size();
  Matrix qx(W, source.x_size()), qy(W, source.y_size());
  for (Index w = 0; w < W; ++w) {
    if (ind.qw(w) > 0.0) {
      qx.row(w) = ind.ax.row(w) / ind.qw(w);
      qy.row(w) = ind.ay.row(w) / ind.qw(w);
    } else {
      qx.row(w).setConstant(1.0 / source.x_size());
      qy.row(w).setConstant(1.0 / source.y_size());
    }
  }
  Vector qw = ind.qw / ind.qw.sum();
  return {qw, CondChannel::trusted(std::move(qx)), CondChannel::trusted(std::move(qy))};
}

RateTriple channel_rates(const CondChannel& channel, const JointDist& source) {
  check_channel(channel, source);
  const SupportView s(source);
  Induced ind;
  detail::induce(s, channel.rows(), ind);
  return detail::rates(s, channel.rows(), ind);
}

TestChannelSolution make_solution(const CondChannel& channel, const JointDist& source,
                                  const LagrangePair& l) {
  Marginals q = outer_marginal_update(channel, source);
  TestChannelSolution sol{channel, q.w, q.x_given_w, q.y_given_w, channel_rates(channel, source),
                          0.0, 0};
  sol.objective = lagrangian(sol.rates, l);
  return sol;
}

double f_functional(const CondChannel& channel, const Marginals& q, const LagrangePair& l,
                    const RateTargets& r, const JointDist& source) {
  check_channel(channel, source);
  const Index W = channel.out_size();
  check_marginals(q, source, W);
  double f = 0.0;
  for (Index c = 0; c < source.cells(); ++c) {
    const double p = source.cell(c);
    if (p <= 0.0) continue;
    const Index x = c / source.y_size(), y = c % source.y_size();
    for (Index w = 0; w < W; ++w) {
      const double v = channel(c, w);
      if (v <= 0.0) continue;
      const double qw = q.w(w), qx = q.x_given_w(w, x), qy = q.y_given_w(w, y);
      if (qw <= 0.0 || qx <= 0.0 || qy <= 0.0) return kInf;
      f += p * v *
           (std::log2(v / qw) + l.lambda1 * (-std::log2(qx) - r.r1) +
            l.lambda2 * (-std::log2(qy) - r.r2));
    }
  }
#ifndef NDEBUG
  const double g = f_functional_decomposed(channel, q, l, r, source);
  assert(std::abs(f - g) <= 1e-9 * std::max(1.0, std::abs(f)));
#endif
  return f;
}

double f_functional_decomposed(const CondChannel& channel, const Marginals& q,
                               const LagrangePair& l, const RateTargets& r,
                               const JointDist& source) {
  check_channel(channel, source);
  check_marginals(q, source, channel.out_size());
  const Marginals own = outer_marginal_update(channel, source);
  const RateTriple t = channel_rates(channel, source);
  const double dw = kl_divergence(own.w, q.w);
  const double dx = conditional_kl(own.x_given_w, q.x_given_w, own.w);
  const double dy = conditional_kl(own.y_given_w, q.y_given_w, own.w);
  if (!std::isfinite(dw) || !std::isfinite(dx) || !std::isfinite(dy)) return kInf;
  return t.r0 + dw + l.lambda1 * (t.r1 + dx - r.r1) + l.lambda2 * (t.r2 + dy - r.r2);
}

double lambda_fn(Index x, Index y, const Marginals& q, const LagrangePair& l, const RateTargets& r) {
  const Index W = q.w.size();
  if (x < 0 || x >= q.x_given_w.out_size() || y < 0 || y >= q.y_given_w.out_size())
    throw ValidationError("lambda_fn: symbol out of range");
  std::vector<double> t;
  for (Index w = 0; w < W; ++w) {
    const double qw = q.w(w), qx = q.x_given_w(w, x), qy = q.y_given_w(w, y);
    if (qw <= 0.0 || qx <= 0.0 || qy <= 0.0) continue;
    t.push_back(std::log2(qw) + l.lambda1 * std::log2(qx) + l.lambda2 * std::log2(qy));
  }
  if (t.empty()) throw DomainError("lambda_fn: expectation is zero for this (x,y)");
  std::sort(t.begin(), t.end());
  const double top = t.back();
  double z = 0.0;
  for (double v : t) z += std::exp2(v - top);
  return -(top + std::log2(z)) - l.lambda1 * r.r1 - l.lambda2 * r.r2;
}

CondChannel inner_channel_update(const Marginals& q, const LagrangePair& l, const RateTargets&,
                                 const JointDist& source) {
  const Index W = q.w.size();
  check_marginals(q, source, W);
  Matrix ch(source.cells(), W);
  for (Index c = 0; c < source.cells(); ++c) {
    const Index x = c / source.y_size(), y = c % source.y_size();
    std::vector<double> t(W, -kInf);
    double top = -kInf;
    for (Index w = 0; w < W; ++w) {
      const double qw = q.w(w), qx = q.x_given_w(w, x), qy = q.y_given_w(w, y);
      if (qw <= 0.0 || qx <= 0.0 || qy <= 0.0) continue;
      t[w] = std::log2(qw) + l.lambda1 * std::log2(qx) + l.lambda2 * std::log2(qy);
      top = std::max(top, t[w]);
    }
    if (top == -kInf) {
      if (source.cell(c) > 0.0)
        throw DomainError("inner_channel_update: zero normalizer on a support cell");
      ch.row(c).setConstant(1.0 / W);
      continue;
    }
    for (Index w = 0; w < W; ++w) ch(c, w) = t[w] == -kInf ? 0.0 : std::exp2(t[w] - top);
    ch.row(c) /= ch.row(c).sum();
  }
  return CondChannel::trusted(std::move(ch));
}

AlternationRun run_alternation(const JointDist& source, const LagrangePair& l,
                               const CondChannel& start, double tol, int max_iter,
                               bool keep_trace) {
  check_channel(start, source);
  const SupportView s(source);
  Matrix ch = start.rows();
  Induced ind;
  std::vector<double> scratch;
  detail::induce(s, ch, ind);
  double obj = lagrangian(detail::rates(s, ch, ind), l);
  std::vector<double> trace;
  if (keep_trace) trace.push_back(obj);
  int it = 0;
  while (it < max_iter) {
    ++it;
    detail::inner_update(s, ind, l, ch, scratch);
    detail::induce(s, ch, ind);
    const double next = lagrangian(detail::rates(s, ch, ind), l);
    if (keep_trace) trace.push_back(next);
    if (!std::isfinite(next)) {
      if (!keep_trace) trace.push_back(next);
      throw NumericalError("solve_lagrangian: non-finite objective at iteration " +
                               std::to_string(it),
                           trace);
    }
    const double dec = obj - next;
    obj = next;
    if (dec < tol) break;
  }
  // off-support rows follow the same closed form when it is defined
  const Marginals q = outer_marginal_update(CondChannel::trusted(ch), source);
  for (Index c = 0; c < source.cells(); ++c) {
    if (source.cell(c) > 0.0) continue;
    const Index x = c / source.y_size(), y = c % source.y_size();
    double top = -kInf;
    Vector t = Vector::Constant(ch.cols(), -kInf);
    for (Index w = 0; w < ch.cols(); ++w) {
      if (q.w(w) <= 0.0 || q.x_given_w(w, x) <= 0.0 || q.y_given_w(w, y) <= 0.0) continue;
      t(w) = std::log2(q.w(w)) + l.lambda1 * std::log2(q.x_given_w(w, x)) +
             l.lambda2 * std::log2(q.y_given_w(w, y));
      top = std::max(top, t(w));
    }
    if (top == -kInf) {
      ch.row(c).setConstant(1.0 / ch.cols());
      continue;
    }
    for (Index w = 0; w < ch.cols(); ++w) ch(c, w) = t(w) == -kInf ? 0.0 : std::exp2(t(w) - top);
    ch.row(c) /= ch.row(c).sum();
  }
  return {CondChannel::trusted(std::move(ch)), obj, it, std::move(trace)};
}

CondChannel random_channel(Index cells, Index w_size, std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix ch(cells, w_size);
  for (Index c = 0; c < cells; ++c) {
    // flat Dirichlet row via normalized exponentials
    for (Index w = 0; w < w_size; ++w) ch(c, w) = -std::log1p(-u(rng));
    ch.row(c) /= ch.row(c).sum();
  }
  return CondChannel::trusted(std::move(ch));
}

namespace {

CondChannel deterministic_channel(const JointDist& src, Index w_size, auto&& atom_of) {
  Matrix ch = Matrix::Zero(src.cells(), w_size);
  for (Index c = 0; c < src.cells(); ++c) ch(c, atom_of(c / src.y_size(), c % src.y_size()) % w_size) = 1.0;
  return CondChannel::trusted(std::move(ch));
}

}  // namespace

CondChannel reveal_channel(const JointDist& src, Index w_size) {
  return deterministic_channel(src, w_size, [&](Index x, Index y) { return x * src.y_size() + y; });
}

CondChannel constant_channel(const JointDist& src, Index w_size) {
  return deterministic_channel(src, w_size, [](Index, Index) { return Index{0}; });
}

CondChannel x_channel(const JointDist& src, Index w_size) {
  return deterministic_channel(src, w_size, [](Index x, Index) { return x; });
}

CondChannel y_channel(const JointDist& src, Index w_size) {
  return deterministic_channel(src, w_size, [](Index, Index y) { return y; });
}

TestChannelSolution solve_lagrangian(const JointDist& source, const LagrangePair& l,
                                     const SolverConfig& config,
                                     const std::vector<CondChannel>& warm) {
  config.validate();
  const Index W = config.w_size(source);
  std::vector<CondChannel> starts;
  for (const auto& c : warm)
    if (c.in_size() == source.cells() && c.out_size() == W) starts.push_back(c);
  starts.push_back(reveal_channel(source, W));
  starts.push_back(constant_channel(source, W));
  for (int r = 0; r < config.restarts; ++r)
    starts.push_back(random_channel(source.cells(), W, config.seed, static_cast<std::uint64_t>(r)));

  std::optional<AlternationRun> best;
  for (const auto& st : starts) {
    AlternationRun run = run_alternation(source, l, st, config.tol, config.max_iter);
    if (!best || run.objective < best->objective) best = std::move(run);
  }
  TestChannelSolution sol = make_solution(best->channel, source, l);
  sol.iterations = best->iterations;
  return sol;
}

std::vector<RegionPoint> trace_region(const JointDist& source, const std::vector<LagrangePair>& grid,
                                      const SolverConfig& config) {
  if (grid.empty()) throw ValidationError("trace_region: empty lambda grid");
  std::vector<RegionPoint> out;
  std::vector<CondChannel> warm;
  for (const auto& l : grid) {
    RegionPoint pt;
    pt.lambdas = l;
    try {
      TestChannelSolution sol = solve_lagrangian(source, l, config, warm);
      pt.rates = sol.rates;
      warm = {sol.channel};
      pt.solution = std::move(sol);
      pt.ok = true;
    } catch (const Error& e) {
      pt.error = e.what();
    }
    out.push_back(std::move(pt));
  }
  return out;
}

constexpr int kWynerTop = 26;

WynerResult wyner_ci(const JointDist& source, const SolverConfig& config) {
  config.validate();
  SolverConfig cfg = config;
  cfg.w_size_override = source.cells();
  const double h = entropy(source);
  std::vector<CondChannel> warm;
  std::optional<TestChannelSolution> last;
  for (int e = 0; e <= kWynerTop; ++e) {
    const double mu = std::ldexp(1.0, e);
    const LagrangePair l(mu / (1.0 + mu), mu / (1.0 + mu));
    SolverConfig stage = cfg;
    if (e > 0) stage.restarts = std::max(1, cfg.search_restarts);
    TestChannelSolution sol = solve_lagrangian(source, l, stage, warm);
    warm = {sol.channel};
    last = std::move(sol);
  }
  // polish at the last multiplier without restarts
  const double mu = std::ldexp(1.0, kWynerTop);
  const LagrangePair l(mu / (1.0 + mu), mu / (1.0 + mu));
  AlternationRun run = run_alternation(source, l, last->channel, 1e-15, 20 * cfg.max_iter);
  TestChannelSolution sol = make_solution(run.channel, source, l);
  if (lagrangian(sol.rates, l) > last->objective) sol = *last;
  WynerResult res;
  res.residual = std::max(0.0, sol.rates.r0 + sol.rates.r1 + sol.rates.r2 - h);
  res.value = sol.rates.r0;
  res.certified = res.residual <= 1e-6;
  res.solution = std::move(sol);
  return res;
}

}  // namespace gw
