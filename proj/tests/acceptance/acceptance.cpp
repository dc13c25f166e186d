// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance            run all
//   acceptance --only 9   run one

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/helpers.hpp"
#include "../unit/oracles.hpp"
#include "gw/errors.hpp"
#include "gw/second_order.hpp"
#include "gw/type_method.hpp"

using namespace gw;
using testing::Gen;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string f(double v, int p = 6) {
  char b[64];
  std::snprintf(b, sizeof b, "%.*g", p, v);
  return b;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SolverConfig base_config() {
  SolverConfig c;
  c.restarts = 8;
  return c;
}

const JointDist& dsbs() {
  static const JointDist d = testing::dsbs();
  return d;
}

double H_dsbs() { return testing::h_list({0.4, 0.1, 0.1, 0.4}); }

// ten (r1, r2) in [0.3, 0.8]^2 certified inside the Pangloss face, spread over the admissible set
std::vector<std::array<double, 2>> pangloss_points() {
  static std::vector<std::array<double, 2>> pts;
  if (!pts.empty()) return pts;
  std::vector<std::array<double, 2>> all;
  for (int i = 0; i <= 10; ++i)
    for (int k = 0; k <= 10; ++k) {
      const double r1 = 0.3 + 0.05 * i, r2 = 0.3 + 0.05 * k;
      const RatePoint r{H_dsbs() - r1 - r2, r1, r2};
      if (pangloss_membership(dsbs(), r, base_config()).status == PanglossStatus::CertifiedInside)
        all.push_back({r1, r2});
    }
  for (int j = 0; j < 10 && !all.empty(); ++j) pts.push_back(all[(j * all.size()) / 10]);
  return pts;
}

// ---- criteria

Outcome c1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto pts = pangloss_points();
  double worst = 0;
  for (const auto& p : pts) {
    const double want = H_dsbs() - p[0] - p[1];
    worst = std::max(worst, std::abs(rate_function(dsbs(), p[0], p[1], base_config()).value - want));
  }
  const double t = seconds_since(t0);
  return {pts.size() == 10 && worst <= 1e-3 && t <= 120.0,
          "points=" + std::to_string(pts.size()) + " max|R-(H-r1-r2)|=" + f(worst) + " (tol 1e-3) time=" + f(t, 3) +
              "s (limit 120)"};
}

Outcome c2() {
  double fd = 0, dual = 0;
  for (const auto& p : pangloss_points()) {
    const Slopes s = slopes(dsbs(), p[0], p[1], 1e-3, base_config());
    fd = std::max({fd, std::abs(s.lambda1 - 1), std::abs(s.lambda2 - 1)});
    dual = std::max({dual, std::abs(s.dual.lambda1 - 1), std::abs(s.dual.lambda2 - 1)});
  }
  return {fd <= 2e-2 && dual <= 2e-2, "max|fd slope-1|=" + f(fd) + " max|dual-1|=" + f(dual) + " (tol 2e-2)"};
}

Outcome c3() {
  double jerr = 0, verr = 0;
  for (const auto& p : pangloss_points()) {
    const RateResult r = rate_function(dsbs(), p[0], p[1], base_config());
    const TiltedTable t = tilted_from_channel(dsbs(), r.solution, r.lambdas, {p[0], p[1]});
    for (Index x = 0; x < 2; ++x)
      for (Index y = 0; y < 2; ++y)
        jerr = std::max(jerr, std::abs(t.values(x, y) - (-std::log2(dsbs()(x, y)) - p[0] - p[1])));
    verr = std::max(verr, std::abs(t.variance - 0.64));
  }
  return {jerr <= 1e-3 && verr <= 1e-3, "max|j-(log 1/P-r1-r2)|=" + f(jerr) + " max|V-0.64|=" + f(verr) + " (tol 1e-3)"};
}

Outcome c4() {
  // corpus: the Pangloss points, interior DSBS points and random sources
  std::vector<std::pair<JointDist, std::array<double, 2>>> corpus;
  for (const auto& p : pangloss_points()) corpus.push_back({dsbs(), p});
  for (const auto& p : std::vector<std::array<double, 2>>{{0.8, 0.5}, {0.2, 0.9}, {0.1, 0.1}, {0.3, 1.2}})
    corpus.push_back({dsbs(), p});
  Gen g(404);
  for (int k = 0; k < 12; ++k) {
    const JointDist s(testing::random_pmf(g, 2, 2, 0.05));
    corpus.push_back({s, {g.uniform() * entropy(s.px()), g.uniform() * entropy(s.py())}});
  }
  Matrix m3(2, 3);
  m3 << 0.2, 0.1, 0.15, 0.05, 0.3, 0.2;
  corpus.push_back({JointDist(m3), {0.4, 0.7}});
  int certified = 0;
  double worst = 0;
  for (const auto& [src, r] : corpus) {
    const RateResult res = rate_function(src, r[0], r[1], base_config());
    if (!res.certified) continue;
    ++certified;
    const TiltedTable t = tilted_from_channel(src, res.solution, res.lambdas, {r[0], r[1]});
    worst = std::max(worst, std::abs(t.mean - res.value));
  }
  return {certified > 0 && worst <= 1e-6, "certified=" + std::to_string(certified) + "/" +
                                              std::to_string(corpus.size()) + " max|E[j]-R|=" + f(worst) + " (tol 1e-6)"};
}

Outcome c5() {
  double worst = 0;
  std::string parts;
  for (Index i = 0; i < 3; ++i) {
    const DerivativeCheck c = derivative_check(dsbs(), {0.5, 0.5}, i, 1e-3, base_config());
    worst = std::max(worst, c.abs_error);
    parts += " theta" + std::to_string(i) + ":" + f(c.lhs) + " vs " + f(c.rhs);
  }
  return {worst <= 5e-3, "max abs error=" + f(worst) + " (tol 5e-3)" + parts};
}

Outcome c6() {
  const RateTargets r{0.5, 0.5};
  SolverConfig a = base_config(), b = base_config();
  a.seed = 1;
  b.seed = 0xdeadbeef;
  const RateResult ra = rate_function(dsbs(), r.r1, r.r2, a), rb = rate_function(dsbs(), r.r1, r.r2, b);
  const double seeds = check_well_defined(dsbs(), ra.solution, rb.solution, ra.lambdas, r);
  const Matrix& ch = ra.solution.channel.rows();
  Matrix perm(ch.rows(), ch.cols());
  for (Index w = 0; w < ch.cols(); ++w) perm.col(ch.cols() - 1 - w) = ch.col(w);
  const auto ps = make_solution(CondChannel::trusted(perm), dsbs(), ra.lambdas);
  const double permd = (tilted_from_channel(dsbs(), ra.solution, ra.lambdas, r).values -
                        tilted_from_channel(dsbs(), ps, ra.lambdas, r).values)
                           .cwiseAbs()
                           .maxCoeff();
  return {seeds <= 1e-4 && permd == 0.0, "seed discrepancy=" + f(seeds) + " (tol 1e-4) permutation discrepancy=" + f(permd)};
}

Outcome c7() {
  Gen g(707);
  long logged = 0;
  double worst = 0;
  int seedno = 0;
  while (logged < 10000) {
    const JointDist src(testing::random_pmf(g, 2 + g.below(2), 2));
    const LagrangePair l(0.1 + 3 * g.uniform(), 0.1 + 3 * g.uniform());
    const auto run = run_alternation(src, l, random_channel(src.cells(), src.cells() + 2, 77, seedno++), 0.0, 1000, true);
    for (std::size_t i = 1; i < run.trace.size(); ++i) worst = std::max(worst, run.trace[i] - run.trace[i - 1]);
    logged += static_cast<long>(run.trace.size()) - 1;
  }
  int beaten = 0;
  for (int inst = 0; inst < 50; ++inst) {
    const JointDist src(testing::random_pmf(g, 2, 2 + g.below(2)));
    const Index W = 2 + g.below(5);
    const CondChannel seed_ch = random_channel(src.cells(), W, 1234, inst);
    const Marginals q = outer_marginal_update(seed_ch, src);
    const LagrangePair l(0.1 + 3 * g.uniform(), 0.1 + 3 * g.uniform());
    const RateTargets r{g.uniform(), g.uniform()};
    const double best = f_functional(inner_channel_update(q, l, r, src), q, l, r, src);
    bool all = true;
    for (int k = 0; k < 100; ++k)
      if (f_functional(random_channel(src.cells(), W, 999 + inst, k), q, l, r, src) < best - 1e-12) all = false;
    beaten += all;
  }
  return {worst <= 1e-12 && beaten == 50,
          "logged iterations=" + std::to_string(logged) + " max increase=" + f(worst) + " (tol 1e-12); inner update best on " +
              std::to_string(beaten) + "/50 instances"};
}

Outcome c8() {
  Gen g(808);
  double conv = 0, mono = 0;
  for (int k = 0; k < 200; ++k) {
    const JointDist src(testing::random_pmf(g, 2, 2, 0.03));
    const double hx = entropy(src.px()), hy = entropy(src.py());
    const double a1 = g.uniform() * hx, a2 = g.uniform() * hy;
    double b1, b2;
    if (k % 2 == 0) {  // b dominates a: checks monotonicity too
      b1 = a1 + g.uniform() * (hx - a1);
      b2 = a2 + g.uniform() * (hy - a2);
    } else {
      b1 = g.uniform() * hx;
      b2 = g.uniform() * hy;
    }
    const SolverConfig c = base_config();
    const double ra = rate_function(src, a1, a2, c).value, rb = rate_function(src, b1, b2, c).value;
    const double rm = rate_function(src, 0.5 * (a1 + b1), 0.5 * (a2 + b2), c).value;
    conv = std::max(conv, rm - 0.5 * (ra + rb));
    if (k % 2 == 0) mono = std::max(mono, rb - ra);
  }
  return {conv <= 1e-4 && mono <= 1e-4,
          "200 midpoints: max convexity violation=" + f(conv) + " max monotonicity violation=" + f(mono) + " (tol 1e-4)"};
}

struct McRow {
  double eps;
  long n;
  McEstimate ach, conv;
  double clt;
};

const std::vector<McRow>& mc_rows() {
  static std::vector<McRow> rows;
  if (!rows.empty()) return rows;
  const RatePoint rs{H_dsbs() - 1.0, 0.5, 0.5};
  for (double eps : {0.1, 0.5})
    for (long n : {100L, 200L}) {
      const SecondOrderPlane plane = pangloss_plane(dsbs(), rs, eps, base_config());
      const std::array<double, 3> split{plane.threshold, 0.0, 0.0};
      const auto lm = finite_n_rates(plane, rs, n, split);
      McConfig mc;
      mc.seed = 9000 + n;
      McRow r{eps, n, {}, {}, clt_approx(plane, split)};
      r.ach = error_bound_mc(dsbs(), Direction::Achievability, n, {lm[0], lm[1], lm[2]}, 20000, mc);
      r.conv = error_bound_mc(dsbs(), Direction::Converse, n, {lm[0], lm[1], lm[2]}, 20000, mc);
      rows.push_back(r);
    }
  return rows;
}

Outcome c9() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::ostringstream d;
  for (const auto& r : mc_rows()) {
    for (const auto* e : {&r.ach, &r.conv}) {
      const double gap = std::abs(e->probability - r.clt), tol = 3 * e->stderr_ + 0.03;
      ok = ok && gap <= tol && e->failures == 0;
      d << " [eps=" << r.eps << " n=" << r.n << (e == &r.ach ? " ach" : " conv") << " mc=" << f(e->probability)
        << " clt=" << f(r.clt) << " gap=" << f(gap) << " tol=" << f(tol) << "]";
    }
  }
  const double t = seconds_since(t0);
  ok = ok && t <= 600.0;
  return {ok, "time=" + f(t, 3) + "s" + d.str()};
}

Outcome c10() {
  bool ok = true;
  std::ostringstream d;
  for (const auto& r : mc_rows()) {
    const double joint = std::sqrt(r.ach.stderr_ * r.ach.stderr_ + r.conv.stderr_ * r.conv.stderr_);
    const bool good = r.conv.probability <= r.ach.probability + 3 * joint;
    ok = ok && good;
    d << " [eps=" << r.eps << " n=" << r.n << " conv=" << f(r.conv.probability) << " ach=" << f(r.ach.probability)
      << "]";
  }
  return {ok, "converse (after 1/n) <= achievability + 3 joint se:" + d.str()};
}

Outcome c11() {
  const JointDist type = JointDist::from_counts((Counts(2, 2) << 2, 2, 2, 2).finished());
  Matrix m(4, 2);
  m << 1, 0, 0.5, 0.5, 0.5, 0.5, 0, 1;
  const CondChannel cond(m);
  const double budget = covering_budget_log(type, cond, 8);
  int ok = 0;
  std::size_t largest = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    try {
      const Codebook b = covering_build(type, cond, 8, budget, {seed, 200000});
      // independent exhaustive check over all 4^8 cell sequences
      std::size_t total = 0, missed = 0;
      for (int code = 0; code < (1 << 16); ++code) {
        int seq[8], cnt[4] = {0, 0, 0, 0};
        for (int i = 0; i < 8; ++i) ++cnt[seq[i] = (code >> (2 * i)) & 3];
        if (cnt[0] != 2 || cnt[1] != 2 || cnt[2] != 2 || cnt[3] != 2) continue;
        ++total;
        bool hit = false;
        for (const auto& w : b.words) {
          int j[4][2] = {};
          for (int i = 0; i < 8; ++i) ++j[seq[i]][w[i]];
          if (j[0][0] == 2 && j[1][0] == 1 && j[2][0] == 1 && j[3][1] == 2) {
            hit = true;
            break;
          }
        }
        missed += !hit;
      }
      if (total == 2520 && missed == 0 && std::log2(static_cast<double>(b.words.size())) <= budget) ++ok;
      largest = std::max(largest, b.words.size());
    } catch (const CoveringFailure&) {
    }
  }
  return {ok >= 8, std::to_string(ok) + "/10 seeds covered all 2520 pairs (need 8); largest codebook=" +
                       std::to_string(largest) + " words, budget 2^" + f(budget, 5)};
}

Outcome c12() {
  Gen g(1212);
  int inside = 0;
  for (int k = 0; k < 50; ++k) {
    const long n = 1 + g.below(16);
    std::vector<long> cnt(4, 0);
    for (long i = 0; i < n; ++i) ++cnt[g.below(4)];
    const auto s = type_class_log_size(JointDist::from_counts((Counts(2, 2) << cnt[0], cnt[1], cnt[2], cnt[3]).finished()), n);
    const double exact = testing::log2_multinomial(cnt);
    if (s.exact && std::abs(*s.exact - exact) <= 1e-9 && exact >= s.lower - 1e-12 && exact <= s.upper + 1e-12) ++inside;
  }
  bool tail_ok = true;
  std::ostringstream d;
  for (long n : {50L, 100L}) {
    const McEstimate e = kn_tail_mc(dsbs(), n, 20000, 4242);
    const double bound = kn_tail_bound(dsbs(), n);
    tail_ok = tail_ok && e.probability <= bound + 3 * e.stderr_;
    d << " [n=" << n << " outside=" << f(e.probability) << " bound=" << f(bound) << " se=" << f(e.stderr_) << "]";
  }
  return {inside == 50 && tail_ok, std::to_string(inside) + "/50 exact sizes within bounds; K_n tail:" + d.str()};
}

Outcome c13() {
  Matrix eq = Matrix::Zero(2, 2);
  eq(0, 0) = eq(1, 1) = 0.5;
  Matrix ind(2, 2);
  ind << 0.12, 0.28, 0.18, 0.42;
  const double a = wyner_ci(JointDist(eq), base_config()).value;
  const double b = wyner_ci(JointDist(ind), base_config()).value;
  const double c = wyner_ci(dsbs(), base_config()).value;
  const double grid = testing::wyner_grid(dsbs(), 1000);
  return {std::abs(a - 1.0) <= 1e-4 && b <= 1e-6 && std::abs(c - grid) <= 1e-3,
          "X=Y: " + f(a, 9) + " independent: " + f(b) + " DSBS: " + f(c, 9) + " grid oracle: " + f(grid, 9)};
}

std::string capture(const std::string& cmd) {
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return "";
  char buf[4096];
  std::size_t k;
  while ((k = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, k);
  const int st = pclose(p);
  if (st != 0) out += "\n<exit " + std::to_string(st) + ">";
  return out;
}

Outcome c14() {
  const std::string in = std::string(DATA_DIR) + "/dsbs.json";
  bool ok = true;
  std::ostringstream d;
  for (const char* dir : {"achievability", "converse"}) {
    const std::string args = std::string(" simulate ") + in + " --pangloss --r1 0.5 --r2 0.5 --eps 0.1 --n 100 --samples 20000 --seed 31 --direction " + dir;
    const std::string a = capture("GW_WORKERS=1 " + std::string(GWTOOL_PATH) + args);
    const std::string b = capture("GW_WORKERS=1 " + std::string(GWTOOL_PATH) + args);
    const std::string c = capture("GW_WORKERS=4 " + std::string(GWTOOL_PATH) + args);
    const bool same = !a.empty() && a.find("<exit") == std::string::npos && a == b && a == c;
    ok = ok && same;
    d << ' ' << dir << (same ? ": identical" : ": DIFFERENT") << " (" << a.size() << " bytes)";
  }
  const std::string mid = std::string(" simulate ") + in + " --r1 0.8 --r2 0.5 --eps 0.3 --n 40 --samples 200 --seed 5";
  const std::string a = capture("GW_WORKERS=1 " + std::string(GWTOOL_PATH) + mid);
  const std::string c = capture("GW_WORKERS=4 " + std::string(GWTOOL_PATH) + mid);
  const bool same = !a.empty() && a.find("<exit") == std::string::npos && a == c;
  ok = ok && same;
  d << " interior point: " << (same ? "identical" : "DIFFERENT");
  return {ok, "workers {1,4}, two runs each:" + d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--only N]\n";
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> crit{
      {"Pangloss rate closed form", c1},
      {"slopes on the Pangloss face", c2},
      {"tilted density and dispersion", c3},
      {"mean identity", c4},
      {"derivative identity", c5},
      {"tilted density invariance", c6},
      {"descent and inner-update optimality", c7},
      {"convexity and monotonicity of R", c8},
      {"CLT consistency", c9},
      {"bound sandwich", c10},
      {"type covering", c11},
      {"type-class bounds and K_n tail", c12},
      {"Wyner common information", c13},
      {"determinism", c14},
  };
  if (only < 0 || only > static_cast<int>(crit.size())) {
    std::cerr << "no criterion " << only << '\n';
    return 2;
  }
  int failed = 0;
  for (std::size_t i = 0; i < crit.size(); ++i) {
    if (only && static_cast<int>(i + 1) != only) continue;
    Outcome o;
    try {
      o = crit[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << crit[i].first << ": " << o.detail << std::endl;
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
