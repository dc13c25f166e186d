#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "gw/second_order.hpp"

namespace gw {

enum class Direction { Achievability, Converse };
std::string to_string(Direction d);

struct RateOffsets {
  Direction direction = Direction::Achievability;
  long n = 0;
  Index w_size = 0;
  double r0n = 0.0, r1n = 0.0, r2n = 0.0;
  double alpha_n = 0.0, beta_n = 0.0;
};

using LogSizes = std::array<double, 3>;  // log2 M0, log2 M1, log2 M2

RateOffsets achievability_offsets(long n, const LogSizes& log_sizes, Index x_size, Index y_size,
                                  Index w_size);
RateOffsets converse_offsets(long n, const LogSizes& log_sizes, Index x_size, Index y_size);

// deviation radius sqrt(ln n / n) on every theta coordinate of the source chart
bool kn_membership(const JointDist& type, const JointDist& source, long n);
double kn_tail_bound(const JointDist& source, long n);

struct McEstimate {
  double probability = 0.0;
  double stderr_ = 0.0;
  long samples = 0;
  std::uint64_t seed = 0;
  long cache_hits = 0;
  long cache_misses = 0;
  long distinct_types = 0;
  long solver_calls = 0;
  long failures = 0;
  double raw_probability = 0.0;  // before the converse 1/n subtraction
  double spot_check_max = 0.0;   // max |cached R - fresh R| over the spot checks
};

// memo of rate-function bounds per (joint counts, r1, r2); safe to share across calls and threads
class RateCache {
 public:
  struct Entry {
    double lower = 0.0;
    double upper = kInf;
    std::optional<double> exact;
  };
  using Key = std::pair<std::vector<long>, std::array<double, 2>>;

  std::optional<Entry> find(const Key& k) const;
  void store(const Key& k, const Entry& e);
  std::size_t size() const;
  std::vector<Key> keys() const;

 private:
  mutable std::mutex mu_;
  std::map<Key, Entry> map_;
};

struct McConfig {
  SolverConfig solver = [] {
    SolverConfig c;
    c.restarts = 4;
    return c;
  }();
  std::uint64_t seed = 1;
  int workers = 1;
  int spot_checks = 20;
  std::shared_ptr<RateCache> cache;  // created per call when empty
};

inline constexpr Index kMcMaxAlphabet = 3;
inline constexpr long kMcMaxN = 500;

// Pr(r0 < R(r1, r2 | joint type of n i.i.d. pairs)); r1 or r2 < 0 counts as R = +inf
McEstimate inner_probability_mc(const JointDist& source, long n, const RatePoint& rates, long samples,
                                const McConfig& config);
McEstimate error_bound_mc(const JointDist& source, Direction direction, long n, const LogSizes& log_sizes,
                          long samples, const McConfig& config);

// fraction of sampled joint types outside K_n
McEstimate kn_tail_mc(const JointDist& source, long n, long samples, std::uint64_t seed);

double clt_approx(const SecondOrderPlane& plane, const std::array<double, 3>& L);

struct TiltedSums {
  std::vector<double> sums;  // (1/sqrt n)(sum_i j(X_i,Y_i) - n mean)
  double max_identity_error = 0.0;  // |n sum_xy t j - sum_i j(X_i,Y_i)| / (1 + |.|)
};
TiltedSums iid_tilted_sum_mc(const JointDist& source, const TiltedTable& table, long n, long samples,
                             std::uint64_t seed);

// counter-based uniform in [0,1): depends only on (seed, stream, index)
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);
Counts sample_counts(const JointDist& source, long n, std::uint64_t seed, std::uint64_t stream);

CondChannel conditional_type_truncate(const CondChannel& target, const JointDist& type, long n);

struct TypeClassSize {
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> exact;  // n <= 16
};
TypeClassSize type_class_log_size(const JointDist& type, long n);

// integer counts of a type with denominator n; throws when entries are not multiples of 1/n
Counts type_counts(const JointDist& type, long n);

struct Codebook {
  long n = 0;
  std::vector<long> w_type;
  std::vector<std::vector<int>> words;
  CondChannel joint_cond_type;
  std::uint64_t pairs_total = 0;
  std::uint64_t pairs_covered = 0;
  std::uint64_t draws = 0;
  double budget_log = 0.0;
};

struct CoverConfig {
  std::uint64_t seed = 1;
  std::uint64_t max_draws = 200000;
};

inline constexpr long kCoverMaxN = 16;
inline constexpr Index kCoverMaxAlphabet = 2;
inline constexpr Index kCoverMaxW = 3;
inline constexpr std::uint64_t kCoverMaxPairs = 2'000'000;

// n I(W;XY) + (|X||Y||W| + 4) log2(n+1) evaluated at the target joint type
double covering_budget_log(const JointDist& type, const CondChannel& cond_type, long n);

Codebook covering_build(const JointDist& type, const CondChannel& cond_type, long n, double budget_log,
                        const CoverConfig& config);

}  // namespace gw
