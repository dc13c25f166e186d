#include "gw/type_method.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "solver_detail.hpp"

namespace gw {

std::string to_string(Direction d) {
  return d == Direction::Achievability ? "achievability" : "converse";
}

RateOffsets achievability_offsets(long n, const LogSizes& ls, Index x_size, Index y_size, Index w_size) {
  if (n < 2) throw ValidationError("achievability_offsets: n must be >= 2");
  const double dn = static_cast<double>(n);
  const double k = static_cast<double>(x_size * y_size * w_size);
  RateOffsets o;
  o.direction = Direction::Achievability;
  o.n = n;
  o.w_size = w_size;
  o.r0n = ls[0] / dn - (4.0 * k + 4.0) * std::log2(dn + 1.0) / dn;
  o.r1n = ls[1] / dn - 2.0 * k * std::log2(dn) / dn;
  o.r2n = ls[2] / dn - 2.0 * k * std::log2(dn) / dn;
  return o;
}

RateOffsets converse_offsets(long n, const LogSizes& ls, Index x_size, Index y_size) {
  if (n < 2) throw ValidationError("converse_offsets: n must be >= 2");
  const double dn = static_cast<double>(n);
  RateOffsets o;
  o.direction = Direction::Converse;
  o.n = n;
  o.alpha_n = o.beta_n = std::log2(dn) / dn;
  // 2^{-n beta_n} = 1/n
  const double tail = std::exp2(-dn * o.beta_n);
  o.r0n = ls[0] / dn + static_cast<double>(x_size * y_size) * std::log2(dn + 1.0) / dn + o.alpha_n + o.beta_n;
  o.r1n = ls[1] / dn + 1.0 / dn + tail * std::log2(static_cast<double>(x_size));
  o.r2n = ls[2] / dn + 1.0 / dn + tail * std::log2(static_cast<double>(y_size));
  return o;
}

bool kn_membership(const JointDist& type, const JointDist& source, long n) {
  if (n < 2) throw ValidationError("kn_membership: n must be >= 2");
  if (type.x_size() != source.x_size() || type.y_size() != source.y_size())
    throw ValidationError("kn_membership: dimension mismatch");
  for (Index c = 0; c < type.cells(); ++c)
    if (type.cell(c) > 0.0 && source.cell(c) <= 0.0) return false;
  const SimplexParam t = theta_embed(type, source), s = theta_embed(source, source);
  const double dn = static_cast<double>(n);
  const double radius = std::sqrt(std::log(dn) / dn);
  for (Index i = 0; i < s.theta.size(); ++i)
    if (std::abs(t.theta(i) - s.theta(i)) > radius) return false;
  return true;
}

double kn_tail_bound(const JointDist& source, long n) {
  if (n < 1) throw ValidationError("kn_tail_bound: n must be >= 1");
  const double m = static_cast<double>(source.support().size());
  return 2.0 * (m - 1.0) / (static_cast<double>(n) * static_cast<double>(n));
}

std::optional<RateCache::Entry> RateCache::find(const Key& k) const {
  std::lock_guard<std::mutex> g(mu_);
  auto it = map_.find(k);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

void RateCache::store(const Key& k, const Entry& e) {
  std::lock_guard<std::mutex> g(mu_);
  map_[k] = e;
}

std::size_t RateCache::size() const {
  std::lock_guard<std::mutex> g(mu_);
  return map_.size();
}

std::vector<RateCache::Key> RateCache::keys() const {
  std::lock_guard<std::mutex> g(mu_);
  std::vector<Key> out;
  for (const auto& [k, v] : map_) out.push_back(k);
  return out;
}

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t z = detail::mix_seed(detail::mix_seed(seed, stream), index);
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

Counts sample_counts(const JointDist& source, long n, std::uint64_t seed, std::uint64_t stream) {
  const Vector p = source.flat();
  Vector cdf(p.size());
  std::partial_sum(p.begin(), p.end(), cdf.begin());
  Counts c = Counts::Zero(source.x_size(), source.y_size());
  for (long i = 0; i < n; ++i) {
    const double u = counter_uniform(seed, stream, static_cast<std::uint64_t>(i)) * cdf(cdf.size() - 1);
    Index k = static_cast<Index>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    k = std::min(k, p.size() - 1);
    while (p(k) <= 0.0) --k;  // never land on a zero cell through rounding
    ++c(k / source.y_size(), k % source.y_size());
  }
  return c;
}

namespace {

std::vector<long> flat_counts(const Counts& c) {
  std::vector<long> v;
  for (Index x = 0; x < c.rows(); ++x)
    for (Index y = 0; y < c.cols(); ++y) v.push_back(c(x, y));
  return v;
}

JointDist dist_of(const std::vector<long>& v, Index x_size, Index y_size) {
  Counts c(x_size, y_size);
  for (Index i = 0; i < x_size * y_size; ++i) c(i / y_size, i % y_size) = v[i];
  return JointDist::from_counts(c);
}

// bounds and, when they cannot decide against r0, an actual solve
RateCache::Entry resolve(const JointDist& t, double r0, double r1, double r2, const SolverConfig& cfg,
                         std::optional<RateCache::Entry> have, long& solver_calls) {
  RateCache::Entry e;
  if (have) e = *have;
  if (!have) {
    e.lower = outer_lower_bound(t, r1, r2);
    const Index W = cfg.w_size(t);
    const std::vector<CondChannel> structured{reveal_channel(t, W), constant_channel(t, W), x_channel(t, W),
                                              y_channel(t, W)};
    std::vector<RateTriple> trip;
    for (const auto& ch : structured) trip.push_back(channel_rates(ch, t));
    e.upper = time_share_lp(trip, r1, r2).r0;
    if (e.lower > e.upper) e.upper = e.lower;
  }
  const bool decided = e.exact || r0 < e.lower || r0 >= e.upper;
  if (decided) return e;
  if (!have || e.upper == kInf || !e.exact) {
    // the type's own Markov point usually closes the Pangloss face
    SolverConfig wc = cfg;
    const WynerResult w = wyner_ci(t, wc);
    const Index W = cfg.w_size(t);
    std::vector<RateTriple> trip{channel_rates(reveal_channel(t, W), t), channel_rates(constant_channel(t, W), t),
                                 channel_rates(x_channel(t, W), t), channel_rates(y_channel(t, W), t),
                                 w.solution.rates};
    e.upper = std::min(e.upper, time_share_lp(trip, r1, r2).r0);
    if (r0 < e.lower || r0 >= e.upper) return e;
  }
  ++solver_calls;
  const RateResult r = rate_function(t, r1, r2, cfg);
  e.exact = r.value;
  return e;
}

}  // namespace

McEstimate inner_probability_mc(const JointDist& source, long n, const RatePoint& rates, long samples,
                                const McConfig& config) {
  if (source.x_size() > kMcMaxAlphabet || source.y_size() > kMcMaxAlphabet)
    throw ResourceError("error_bound_mc: alphabet larger than 3x3");
  if (n > kMcMaxN) throw ResourceError("error_bound_mc: n above the limit of 500");
  if (n < 1) throw ValidationError("error_bound_mc: n must be >= 1");
  if (samples < 1) throw ValidationError("error_bound_mc: samples must be >= 1");
  if (config.workers < 1) throw ValidationError("error_bound_mc: workers must be >= 1");
  McEstimate est;
  est.samples = samples;
  est.seed = config.seed;
  if (rates.r1 < 0.0 || rates.r2 < 0.0) {
    // negative private rates: no channel meets them, R = +inf and every sample violates
    est.probability = est.raw_probability = 1.0;
    return est;
  }
  auto cache = config.cache ? config.cache : std::make_shared<RateCache>();
  const std::array<double, 2> rr{rates.r1, rates.r2};

  std::vector<std::vector<long>> keys(static_cast<std::size_t>(samples));
  for (long i = 0; i < samples; ++i)
    keys[i] = flat_counts(sample_counts(source, n, config.seed, static_cast<std::uint64_t>(i)));

  std::map<std::vector<long>, long> distinct;
  for (const auto& k : keys) ++distinct[k];
  est.distinct_types = static_cast<long>(distinct.size());

  std::vector<std::vector<long>> todo;
  for (const auto& [k, cnt] : distinct) {
    const auto hit = cache->find({k, rr});
    const bool decided = hit && (hit->exact || rates.r0 < hit->lower || rates.r0 >= hit->upper);
    if (decided)
      est.cache_hits += cnt;
    else {
      est.cache_misses += cnt;
      todo.push_back(k);
    }
  }

  // distinct types are solved in parallel; each gets a seed derived from its counts only
  std::vector<RateCache::Entry> out(todo.size());
  std::vector<char> failed(todo.size(), 0);
  std::vector<long> calls(todo.size(), 0);
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t j = begin; j < todo.size(); j += stride) {
      SolverConfig c = config.solver;
      std::uint64_t h = config.solver.seed;
      for (long v : todo[j]) h = detail::mix_seed(h, static_cast<std::uint64_t>(v));
      c.seed = h;
      try {
        const JointDist t = dist_of(todo[j], source.x_size(), source.y_size());
        out[j] = resolve(t, rates.r0, rates.r1, rates.r2, c, cache->find({todo[j], rr}), calls[j]);
      } catch (const Error&) {
        failed[j] = 1;
      }
    }
  };
  const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(config.workers), std::max<std::size_t>(todo.size(), 1));
  if (nw <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < nw; ++w) pool.emplace_back(work, w, nw);
    for (auto& t : pool) t.join();
  }
  for (std::size_t j = 0; j < todo.size(); ++j) {
    est.solver_calls += calls[j];
    if (!failed[j]) cache->store({todo[j], rr}, out[j]);
  }

  long viol = 0, ok = 0;
  for (const auto& [k, cnt] : distinct) {
    const auto e = cache->find({k, rr});
    if (!e) {
      est.failures += cnt;
      continue;
    }
    ok += cnt;
    const bool v = e->exact ? rates.r0 < *e->exact : rates.r0 < e->lower;
    if (v) viol += cnt;
  }

  // spot checks: re-solve a few exact entries from scratch with the same per-type seed
  std::vector<std::vector<long>> exact_keys;
  for (const auto& [k, cnt] : distinct)
    if (auto e = cache->find({k, rr}); e && e->exact) exact_keys.push_back(k);
  for (int s = 0; s < config.spot_checks && !exact_keys.empty(); ++s) {
    const std::size_t pick = static_cast<std::size_t>(
        counter_uniform(config.seed, 0xC0FFEEULL, static_cast<std::uint64_t>(s)) * exact_keys.size());
    const auto& k = exact_keys[std::min(pick, exact_keys.size() - 1)];
    SolverConfig c = config.solver;
    std::uint64_t h = config.solver.seed;
    for (long v : k) h = detail::mix_seed(h, static_cast<std::uint64_t>(v));
    c.seed = h;
    const double fresh = rate_function(dist_of(k, source.x_size(), source.y_size()), rates.r1, rates.r2, c).value;
    est.spot_check_max = std::max(est.spot_check_max, std::abs(fresh - *cache->find({k, rr})->exact));
  }

  if (ok > 0) est.raw_probability = static_cast<double>(viol) / static_cast<double>(ok);
  est.probability = est.raw_probability;
  est.stderr_ = ok > 0 ? std::sqrt(est.raw_probability * (1.0 - est.raw_probability) / static_cast<double>(ok)) : 0.0;
  return est;
}

McEstimate error_bound_mc(const JointDist& source, Direction direction, long n, const LogSizes& log_sizes,
                          long samples, const McConfig& config) {
  const RateOffsets o = direction == Direction::Achievability
                            ? achievability_offsets(n, log_sizes, source.x_size(), source.y_size(),
                                                    config.solver.w_size(source))
                            : converse_offsets(n, log_sizes, source.x_size(), source.y_size());
  McEstimate est = inner_probability_mc(source, n, {o.r0n, o.r1n, o.r2n}, samples, config);
  if (direction == Direction::Converse)
    est.probability = std::max(0.0, est.raw_probability - 1.0 / static_cast<double>(n));
  return est;
}

McEstimate kn_tail_mc(const JointDist& source, long n, long samples, std::uint64_t seed) {
  if (samples < 1) throw ValidationError("kn_tail_mc: samples must be >= 1");
  McEstimate est;
  est.samples = samples;
  est.seed = seed;
  long out = 0;
  for (long i = 0; i < samples; ++i)
    if (!kn_membership(JointDist::from_counts(sample_counts(source, n, seed, static_cast<std::uint64_t>(i))),
                       source, n))
      ++out;
  est.probability = est.raw_probability = static_cast<double>(out) / static_cast<double>(samples);
  est.stderr_ = std::sqrt(est.probability * (1.0 - est.probability) / static_cast<double>(samples));
  return est;
}

double clt_approx(const SecondOrderPlane& plane, const std::array<double, 3>& L) {
  const double lhs = L[0] + plane.lambda1 * L[1] + plane.lambda2 * L[2];
  if (plane.variance <= 0.0) return lhs >= 0.0 ? 0.0 : 1.0;
  return qfunc(lhs / std::sqrt(plane.variance));
}

TiltedSums iid_tilted_sum_mc(const JointDist& source, const TiltedTable& table, long n, long samples,
                             std::uint64_t seed) {
  if (n < 1 || samples < 1) throw ValidationError("iid_tilted_sum_mc: n and samples must be >= 1");
  if (table.values.rows() != source.x_size() || table.values.cols() != source.y_size())
    throw ValidationError("iid_tilted_sum_mc: table does not match the source");
  const Vector p = source.flat();
  Vector cdf(p.size());
  std::partial_sum(p.begin(), p.end(), cdf.begin());
  TiltedSums out;
  out.sums.reserve(static_cast<std::size_t>(samples));
  const double sn = std::sqrt(static_cast<double>(n));
  for (long s = 0; s < samples; ++s) {
    Counts c = Counts::Zero(source.x_size(), source.y_size());
    double direct = 0.0;
    for (long i = 0; i < n; ++i) {
      const double u = counter_uniform(seed, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(i)) *
                       cdf(cdf.size() - 1);
      Index k = std::min<Index>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin(), p.size() - 1);
      while (p(k) <= 0.0) --k;
      const Index x = k / source.y_size(), y = k % source.y_size();
      ++c(x, y);
      direct += table.values(x, y);
    }
    // n * sum_xy t(x,y) j(x,y), with t = c/n
    double via_type = 0.0;
    for (Index x = 0; x < c.rows(); ++x)
      for (Index y = 0; y < c.cols(); ++y)
        if (c(x, y) > 0) via_type += static_cast<double>(c(x, y)) * table.values(x, y);
    out.max_identity_error =
        std::max(out.max_identity_error, std::abs(via_type - direct) / (1.0 + std::abs(direct)));
    out.sums.push_back((direct - static_cast<double>(n) * table.mean) / sn);
  }
  return out;
}

Counts type_counts(const JointDist& type, long n) {
  if (n < 1) throw ValidationError("type_counts: n must be >= 1");
  Counts c(type.x_size(), type.y_size());
  for (Index x = 0; x < type.x_size(); ++x)
    for (Index y = 0; y < type.y_size(); ++y) {
      const double v = type(x, y) * static_cast<double>(n);
      const double r = std::round(v);
      if (std::abs(v - r) > 1e-9) throw ValidationError("type does not have denominator n");
      c(x, y) = static_cast<long>(r);
    }
  if (c.sum() != n) throw ValidationError("type counts do not sum to n");
  return c;
}

CondChannel conditional_type_truncate(const CondChannel& target, const JointDist& type, long n) {
  if (target.in_size() != type.cells()) throw ValidationError("conditional_type_truncate: dimension mismatch");
  const Counts c = type_counts(type, n);
  const Index W = target.out_size();
  Matrix out = target.rows();
  for (Index cell = 0; cell < type.cells(); ++cell) {
    const long N = c(cell / type.y_size(), cell % type.y_size());
    if (N == 0) continue;
    // largest-remainder rounding of N * target row
    std::vector<long> k(static_cast<std::size_t>(W));
    std::vector<std::pair<double, Index>> rem;
    long used = 0;
    for (Index w = 0; w < W; ++w) {
      const double v = target(cell, w) * static_cast<double>(N);
      k[w] = static_cast<long>(std::floor(v));
      used += k[w];
      rem.emplace_back(v - static_cast<double>(k[w]), w);
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (long j = 0; j < N - used; ++j) ++k[rem[static_cast<std::size_t>(j)].second];
    for (Index w = 0; w < W; ++w) out(cell, w) = static_cast<double>(k[w]) / static_cast<double>(N);
  }
  return CondChannel::trusted(std::move(out));
}

TypeClassSize type_class_log_size(const JointDist& type, long n) {
  const Counts c = type_counts(type, n);
  TypeClassSize s;
  const double dn = static_cast<double>(n);
  s.upper = dn * entropy(type);
  s.lower = s.upper - static_cast<double>(type.cells()) * std::log2(dn + 1.0);
  if (n <= 16) {
    // n!/prod c! as an exact integer, built with running binomials
    unsigned __int128 m = 1;
    long placed = 0;
    for (Index i = 0; i < c.size(); ++i) {
      const long k = c(i / c.cols(), i % c.cols());
      for (long j = 1; j <= k; ++j) m = m * static_cast<unsigned __int128>(placed + j) / static_cast<unsigned __int128>(j);
      placed += k;
    }
    s.exact = std::log2(static_cast<double>(static_cast<std::uint64_t>(m)));
  }
  return s;
}

}  // namespace gw
