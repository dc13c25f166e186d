#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gw/prob_core.hpp"

namespace gw {

struct LagrangePair {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  LagrangePair() = default;
  LagrangePair(double l1, double l2);
};

struct RateTargets {
  double r1 = 0.0;
  double r2 = 0.0;
};

struct SolverConfig {
  double tol = 1e-10;
  int max_iter = 5000;
  int restarts = 16;
  std::uint64_t seed = 20240917;
  std::optional<Index> w_size_override;

  // dual search over log2(lambda)
  int grid_lo = -8;
  int grid_hi = 4;
  int dual_passes = 2;
  int search_restarts = 1;
  double search_tol = 1e-9;
  double golden_tol = 1e-3;

  void validate() const;
  Index w_size(const JointDist& src) const;
};

// (I(W;XY), H(X|W), H(Y|W))
struct RateTriple {
  double r0 = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
};

// q-arguments of F: P_W-bar, P_{X-hat|W-hat}, P_{Y-hat|W-hat}
struct Marginals {
  Vector w;
  CondChannel x_given_w;
  CondChannel y_given_w;
};

struct TestChannelSolution {
  CondChannel channel;  // rows: cells x*y_size+y, cols: w
  Vector marginal_w;
  CondChannel x_given_w;
  CondChannel y_given_w;
  RateTriple rates;
  double objective = 0.0;
  int iterations = 0;

  Marginals marginals() const { return {marginal_w, x_given_w, y_given_w}; }
};

double lagrangian(const RateTriple& t, const LagrangePair& l);

Marginals outer_marginal_update(const CondChannel& channel, const JointDist& source);
RateTriple channel_rates(const CondChannel& channel, const JointDist& source);
TestChannelSolution make_solution(const CondChannel& channel, const JointDist& source,
                                  const LagrangePair& l);

double f_functional(const CondChannel& channel, const Marginals& q, const LagrangePair& l,
                    const RateTargets& r, const JointDist& source);
// I + D(P_W||qw) + l1{H(X|W) + D(P_X|W||qxw|P_W) - r1} + l2{...}
double f_functional_decomposed(const CondChannel& channel, const Marginals& q,
                               const LagrangePair& l, const RateTargets& r,
                               const JointDist& source);

double lambda_fn(Index x, Index y, const Marginals& q, const LagrangePair& l, const RateTargets& r);
CondChannel inner_channel_update(const Marginals& q, const LagrangePair& l, const RateTargets& r,
                                 const JointDist& source);

struct AlternationRun {
  CondChannel channel;
  double objective = 0.0;
  int iterations = 0;
  std::vector<double> trace;  // objective after each (inner, outer) pair, trace[0] is the start
};

AlternationRun run_alternation(const JointDist& source, const LagrangePair& l,
                               const CondChannel& start, double tol, int max_iter,
                               bool keep_trace = false);

CondChannel random_channel(Index cells, Index w_size, std::uint64_t seed, std::uint64_t stream);
// W = (X,Y), W = const, W = X, W = Y; columns padded to w_size
CondChannel reveal_channel(const JointDist& source, Index w_size);
CondChannel constant_channel(const JointDist& source, Index w_size);
CondChannel x_channel(const JointDist& source, Index w_size);
CondChannel y_channel(const JointDist& source, Index w_size);

TestChannelSolution solve_lagrangian(const JointDist& source, const LagrangePair& l,
                                     const SolverConfig& config,
                                     const std::vector<CondChannel>& warm = {});

struct RateResult {
  double value = 0.0;  // R, clipped at 0
  TestChannelSolution solution;
  LagrangePair lambdas;
  double dual_value = 0.0;      // G(l*) - l*.r before clipping
  double primal_gap = 0.0;      // I(returned channel) - R
  double rate_violation = 0.0;  // max(H(X|W)-r1, H(Y|W)-r2, 0)
  bool time_shared = false;
  bool certified = false;
};

RateResult rate_function(const JointDist& source, double r1, double r2, const SolverConfig& config,
                         const std::vector<CondChannel>& hints = {});

// cheapest r0 reachable by time-sharing the given channels under the rate caps
struct SharedPoint {
  double r0 = kInf;
  std::vector<std::pair<double, Index>> mix;  // (weight, channel index)
};
SharedPoint time_share_lp(const std::vector<RateTriple>& triples, double r1, double r2);

// merge a time-sharing mixture into one channel and prune to |X||Y|+2 atoms
CondChannel mix_channels(const JointDist& source, const std::vector<CondChannel>& channels,
                         const SharedPoint& mix, Index w_size);

double outer_lower_bound(const JointDist& source, double r1, double r2);

struct RegionPoint {
  LagrangePair lambdas;
  RateTriple rates;
  std::optional<TestChannelSolution> solution;
  bool ok = false;
  std::string error;
};

std::vector<RegionPoint> trace_region(const JointDist& source, const std::vector<LagrangePair>& grid,
                                      const SolverConfig& config);

struct WynerResult {
  double value = 0.0;
  TestChannelSolution solution;
  double residual = 0.0;  // I(X;Y|W)
  bool certified = false;
};

WynerResult wyner_ci(const JointDist& source, const SolverConfig& config);

}  // namespace gw
