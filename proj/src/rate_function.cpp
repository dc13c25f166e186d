#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "gw/region_solver.hpp"
#include "solver_detail.hpp"

namespace gw {

namespace {

constexpr double kFeasTol = 1e-12;

struct LpVertex {
  SharedPoint point;
  double lambda1 = 0.0, lambda2 = 0.0;  // LP dual prices on the two rate caps
};

LpVertex lp_vertices(const std::vector<RateTriple>& t, double r1, double r2) {
  LpVertex best;
  const Index n = static_cast<Index>(t.size());
  auto take = [&](double v, std::vector<std::pair<double, Index>> mix, double l1, double l2) {
    if (v < best.point.r0 - 1e-15) {
      best.point.r0 = v;
      best.point.mix = std::move(mix);
      best.lambda1 = l1;
      best.lambda2 = l2;
    }
  };
  for (Index i = 0; i < n; ++i)
    if (t[i].r1 <= r1 + kFeasTol && t[i].r2 <= r2 + kFeasTol) take(t[i].r0, {{1.0, i}}, 0.0, 0.0);

  // pairs: one cap tight, the mixing weight lives on a segment
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      for (int cap = 0; cap < 2; ++cap) {
        const double ci = cap == 0 ? t[i].r1 : t[i].r2, cj = cap == 0 ? t[j].r1 : t[j].r2;
        const double target = cap == 0 ? r1 : r2;
        if (std::abs(ci - cj) < 1e-14) continue;
        const double a = (target - cj) / (ci - cj);  // weight on i
        if (a < 0.0 || a > 1.0) continue;
        const double o1 = a * t[i].r1 + (1 - a) * t[j].r1;
        const double o2 = a * t[i].r2 + (1 - a) * t[j].r2;
        if (o1 > r1 + kFeasTol || o2 > r2 + kFeasTol) continue;
        const double v = a * t[i].r0 + (1 - a) * t[j].r0;
        const double price = -(t[i].r0 - t[j].r0) / (ci - cj);
        take(v, {{a, i}, {1 - a, j}}, cap == 0 ? price : 0.0, cap == 1 ? price : 0.0);
      }
    }

  // triples: both caps tight
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j)
      for (Index k = j + 1; k < n; ++k) {
        Eigen::Matrix3d m;
        m << 1, 1, 1, t[i].r1, t[j].r1, t[k].r1, t[i].r2, t[j].r2, t[k].r2;
        const double det = m.determinant();
        if (std::abs(det) < 1e-14) continue;
        const Eigen::Vector3d a = m.partialPivLu().solve(Eigen::Vector3d(1.0, r1, r2));
        if (a.minCoeff() < -1e-13) continue;
        const Eigen::Vector3d c(t[i].r0, t[j].r0, t[k].r0);
        // prices from r0_t + l1 r1_t + l2 r2_t = nu on all three
        const Eigen::Vector3d dual = m.transpose().partialPivLu().solve(c);
        take(a.dot(c), {{std::max(a(0), 0.0), i}, {std::max(a(1), 0.0), j}, {std::max(a(2), 0.0), k}},
             -dual(1), -dual(2));
      }
  return best;
}

struct Candidate {
  CondChannel channel;
  RateTriple rates;
};

}  // namespace

SharedPoint time_share_lp(const std::vector<RateTriple>& triples, double r1, double r2) {
  return lp_vertices(triples, r1, r2).point;
}

CondChannel mix_channels(const JointDist& source, const std::vector<CondChannel>& channels,
                         const SharedPoint& mix, Index w_size) {
  const detail::SupportView s(source);
  const Index S = s.size();
  std::vector<double> a;
  std::vector<Vector> post;
  for (const auto& [alpha, idx] : mix.mix) {
    if (alpha <= 0.0) continue;
    const CondChannel& ch = channels.at(idx);
    for (Index w = 0; w < ch.out_size(); ++w) {
      Vector pc(S);
      for (Index i = 0; i < S; ++i) pc(i) = alpha * s.p[i] * ch(s.cell[i], w);
      const double m = pc.sum();
      if (m <= 0.0) continue;
      a.push_back(m);
      post.push_back(pc / m);
    }
  }
  auto cond_h = [&](const Vector& pc, bool on_x) {
    Vector marg = Vector::Zero(on_x ? s.x_size : s.y_size);
    for (Index i = 0; i < S; ++i) marg(on_x ? s.x[i] : s.y[i]) += pc(i);
    double h = 0.0;
    for (Index i = 0; i < marg.size(); ++i) h += plogp(marg(i));
    return h;
  };
  // Caratheodory pruning: keep the cell marginal and both conditional entropies,
  // never lower the conditional joint entropy (so I(W;XY) never rises)
  while (true) {
    const Index n = static_cast<Index>(a.size());
    if (n <= 1) break;
    Matrix m(S + 2, n);
    Vector cost(n);
    for (Index j = 0; j < n; ++j) {
      m.col(j).head(S) = post[j];
      m(S, j) = cond_h(post[j], true);
      m(S + 1, j) = cond_h(post[j], false);
      double h = 0.0;
      for (Index i = 0; i < S; ++i) h += plogp(post[j](i));
      cost(j) = h;
    }
    Eigen::FullPivLU<Matrix> lu(m);
    if (lu.rank() >= n) break;
    Vector d = lu.kernel().col(0);
    if (cost.dot(d) < 0.0) d = -d;
    double step = kInf;
    Index hit = -1;
    for (Index j = 0; j < n; ++j)
      if (d(j) < -1e-14 && a[j] / -d(j) < step) {
        step = a[j] / -d(j);
        hit = j;
      }
    if (hit < 0) break;
    for (Index j = 0; j < n; ++j) a[j] += step * d(j);
    a[hit] = 0.0;
    std::vector<double> a2;
    std::vector<Vector> p2;
    for (Index j = 0; j < n; ++j)
      if (a[j] > 1e-15) {
        a2.push_back(a[j]);
        p2.push_back(post[j]);
      }
    a.swap(a2);
    post.swap(p2);
  }
  if (static_cast<Index>(a.size()) > w_size)
    throw NumericalError("mix_channels: could not prune mixture to the atom budget");
  Matrix ch = Matrix::Zero(source.cells(), w_size);
  for (Index c = 0; c < source.cells(); ++c) ch.row(c).setConstant(1.0 / w_size);
  for (Index i = 0; i < S; ++i) {
    const Index c = s.cell[i];
    ch.row(c).setZero();
    for (std::size_t j = 0; j < a.size(); ++j) ch(c, j) = a[j] * post[j](i);
    const double z = ch.row(c).sum();
    if (z <= 0.0) throw NumericalError("mix_channels: lost a support cell");
    ch.row(c) /= z;
  }
  return CondChannel::trusted(std::move(ch));
}

double outer_lower_bound(const JointDist& source, double r1, double r2) {
  const double h = entropy(source);
  const double hx = entropy(source.px()), hy = entropy(source.py());
  return std::max({0.0, h - r1 - r2, hx - r1, hy - r2});
}

RateResult rate_function(const JointDist& source, double r1, double r2, const SolverConfig& config,
                         const std::vector<CondChannel>& hints) {
  config.validate();
  if (!std::isfinite(r1) || !std::isfinite(r2) || r1 < 0.0 || r2 < 0.0)
    throw ValidationError("rate_function: r1, r2 must be finite and >= 0");
  const Index W = config.w_size(source);
  std::vector<Candidate> cands;
  auto add = [&](const CondChannel& ch) {
    cands.push_back({ch, channel_rates(ch, source)});
    return cands.size() - 1;
  };
  add(reveal_channel(source, W));
  add(constant_channel(source, W));
  add(x_channel(source, W));
  add(y_channel(source, W));
  for (const auto& h : hints)
    if (h.in_size() == source.cells() && h.out_size() == W) add(h);

  SolverConfig quick = config;
  quick.restarts = std::max(1, config.search_restarts);
  quick.tol = config.search_tol;
  std::uint64_t evals = 0;
  std::vector<std::pair<double, double>> probes;

  struct Best {
    double phi = -kInf;
    double e1 = 0, e2 = 0;
    std::size_t cand = 0;
    double g = kInf;
  } best;

  auto phi_at = [&](double e1, double e2, const std::vector<CondChannel>& warm,
                    const SolverConfig& base) {
    SolverConfig c = base;
    c.seed = detail::mix_seed(config.seed, evals++);
    const LagrangePair l(std::exp2(e1), std::exp2(e2));
    TestChannelSolution sol = solve_lagrangian(source, l, c, warm);
    const double g = sol.objective;
    const double phi = g - l.lambda1 * r1 - l.lambda2 * r2;
    const std::size_t id = add(sol.channel);
    probes.emplace_back(e1, e2);
    if (phi > best.phi) best = {phi, e1, e2, id, g};
    return std::pair{phi, id};
  };

  // G(l) is at most the Lagrangian of every explicit channel found so far; using that
  // minimum keeps the dual value below the time-sharing value of the same channels
  auto tighten = [&]() {
    best.phi = -kInf;
    for (const auto& [e1, e2] : probes) {
      const LagrangePair l(std::exp2(e1), std::exp2(e2));
      std::size_t arg = 0;
      double g = kInf;
      for (std::size_t i = 0; i < cands.size(); ++i) {
        const double v = lagrangian(cands[i].rates, l);
        if (v < g) {
          g = v;
          arg = i;
        }
      }
      const double phi = g - l.lambda1 * r1 - l.lambda2 * r2;
      if (phi > best.phi) best = {phi, e1, e2, arg, g};
    }
  };

  // coarse scan of the log2 grid, warm-started along rows and columns
  const int G = config.grid_hi - config.grid_lo + 1;
  std::vector<std::size_t> grid_id(static_cast<std::size_t>(G * G));
  for (int i = 0; i < G; ++i)
    for (int j = 0; j < G; ++j) {
      std::vector<CondChannel> warm;
      if (j > 0) warm.push_back(cands[grid_id[i * G + j - 1]].channel);
      if (i > 0) warm.push_back(cands[grid_id[(i - 1) * G + j]].channel);
      grid_id[i * G + j] = phi_at(config.grid_lo + i, config.grid_lo + j, warm, quick).second;
    }

  // golden-section refinement per coordinate
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  auto line = [&](int coord) {
    const double centre = coord == 0 ? best.e1 : best.e2;
    const double fixed = coord == 0 ? best.e2 : best.e1;
    double lo = std::max<double>(centre - 1.0, config.grid_lo);
    double hi = std::min<double>(centre + 1.0, config.grid_hi);
    if (centre <= config.grid_lo) lo = config.grid_lo - 12.0;
    auto f = [&](double e) {
      const std::vector<CondChannel> warm{cands[best.cand].channel};
      return coord == 0 ? phi_at(e, fixed, warm, quick).first : phi_at(fixed, e, warm, quick).first;
    };
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > config.golden_tol) {
      if (fc >= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - gr * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + gr * (b - a);
        fd = f(d);
      }
    }
  };
  for (int pass = 0; pass < config.dual_passes; ++pass) {
    line(0);
    line(1);
  }

  // full multistart at the incumbent multiplier
  tighten();
  phi_at(best.e1, best.e2, {cands[best.cand].channel}, config);
  tighten();

  // primal recovery by time-sharing explicit channels; LP prices feed new columns
  std::vector<std::size_t> generated;
  auto select = [&]() {
    const LagrangePair l(std::exp2(best.e1), std::exp2(best.e2));
    std::vector<std::size_t> idx(cands.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin() + 4, idx.end(), [&](std::size_t p, std::size_t q) {
      return lagrangian(cands[p].rates, l) < lagrangian(cands[q].rates, l);
    });
    if (idx.size() > 32) idx.resize(32);
    for (auto g : generated)
      if (std::find(idx.begin(), idx.end(), g) == idx.end()) idx.push_back(g);
    return idx;
  };
  std::vector<std::size_t> pool;
  LpVertex lp;
  auto solve_lp = [&]() {
    pool = select();
    std::vector<RateTriple> t;
    for (auto i : pool) t.push_back(cands[i].rates);
    lp = lp_vertices(t, r1, r2);
  };
  solve_lp();
  const double emin = config.grid_lo - 12.0, emax = config.grid_hi + 4.0;
  for (int round = 0; round < 25 && lp.point.r0 - std::max(best.phi, 0.0) > 1e-7; ++round) {
    const double e1 = std::clamp(std::log2(std::max(lp.lambda1, 1e-300)), emin, emax);
    const double e2 = std::clamp(std::log2(std::max(lp.lambda2, 1e-300)), emin, emax);
    std::vector<CondChannel> warm;
    for (const auto& [w, i] : lp.point.mix) warm.push_back(cands[pool[i]].channel);
    warm.push_back(cands[best.cand].channel);
    const double before = lp.point.r0, dual_before = best.phi;
    const std::size_t nid = phi_at(e1, e2, warm, quick).second;
    generated.push_back(nid);
    tighten();
    solve_lp();
    if (lp.point.r0 >= before - 1e-12 && best.phi <= dual_before + 1e-12 && round > 2) break;
  }

  RateResult res;
  res.lambdas = LagrangePair(std::exp2(best.e1), std::exp2(best.e2));
  res.dual_value = best.phi;
  res.value = std::max(best.phi, 0.0);
  if (!std::isfinite(res.value)) throw NumericalError("rate_function: dual search failed");

  CondChannel chosen = cands[best.cand].channel;
  if (std::isfinite(lp.point.r0)) {
    std::vector<CondChannel> chans;
    SharedPoint sp = lp.point;
    for (auto& [w, i] : sp.mix) {
      chans.push_back(cands[pool[i]].channel);
      i = static_cast<Index>(chans.size()) - 1;
    }
    chosen = mix_channels(source, chans, sp, W);
    res.time_shared = sp.mix.size() > 1;
  }
  res.solution = make_solution(chosen, source, res.lambdas);
  const RateTriple& t = res.solution.rates;
  res.primal_gap = t.r0 - res.value;
  res.rate_violation = std::max({t.r1 - r1, t.r2 - r2, 0.0});
  const double mean_gap =
      std::abs(res.solution.objective - res.lambdas.lambda1 * r1 - res.lambdas.lambda2 * r2 -
               res.value);
  res.certified = res.rate_violation <= 1e-4 && std::abs(res.primal_gap) <= 1e-4 && mean_gap <= 1e-6;
  return res;
}

}  // namespace gw
