#include "gw/prob_core.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace gw {

JointDist::JointDist(Matrix p) : p_(std::move(p)) {
  validate_pmf(p_, "JointDist");
  if (p_.maxCoeff() <= 0.0) throw ValidationError("JointDist: empty support");
}

JointDist JointDist::from_counts(const Counts& counts) {
  if (counts.size() == 0 || counts.minCoeff() < 0) throw ValidationError("from_counts: bad counts");
  const long n = counts.sum();
  if (n <= 0) throw ValidationError("from_counts: zero total");
  return JointDist(counts.cast<double>() / static_cast<double>(n));
}

Vector JointDist::flat() const {
  Vector v(cells());
  for (Index x = 0; x < x_size(); ++x)
    for (Index y = 0; y < y_size(); ++y) v(x * y_size() + y) = p_(x, y);
  return v;
}

std::vector<Index> JointDist::support() const {
  std::vector<Index> s;
  for (Index c = 0; c < cells(); ++c)
    if (cell(c) > 0.0) s.push_back(c);
  return s;
}

CondChannel::CondChannel(Matrix rows) : rows_(std::move(rows)) {
  if (rows_.rows() == 0 || rows_.cols() == 0) throw ValidationError("CondChannel: empty");
  for (Index i = 0; i < rows_.rows(); ++i) validate_pmf(rows_.row(i), "CondChannel row");
}

CondChannel CondChannel::trusted(Matrix rows) {
  CondChannel c;
  c.rows_ = std::move(rows);
  return c;
}

double entropy(const JointDist& p) {
  double h = 0.0;
  for (Index c = 0; c < p.cells(); ++c) h += plogp(p.cell(c));
  return h;
}

double conditional_entropy(const JointDist& p, Axis target) {
  const double h = entropy(p);
  const Vector given = target == Axis::X ? p.py() : p.px();
  double hg = 0.0;
  for (Index i = 0; i < given.size(); ++i) hg += plogp(given(i));
  return std::max(h - hg, 0.0);
}

double mutual_information(const JointDist& p) {
  double i = 0.0;
  const Vector px = p.px(), py = p.py();
  for (Index x = 0; x < p.x_size(); ++x)
    for (Index y = 0; y < p.y_size(); ++y) {
      const double v = p(x, y);
      if (v > 0.0) i += v * std::log2(v / (px(x) * py(y)));
    }
  return std::max(i, 0.0);
}

double conditional_kl(const CondChannel& chan_p, const Vector& q, const Vector& weights) {
  if (q.size() != chan_p.out_size() || weights.size() != chan_p.in_size())
    throw ValidationError("conditional_kl: dimension mismatch");
  validate_pmf(weights, "conditional_kl weights");
  double d = 0.0;
  for (Index i = 0; i < chan_p.in_size(); ++i) {
    if (weights(i) <= 0.0) continue;
    const double k = kl_divergence(chan_p.rows().row(i), q.transpose());
    if (!std::isfinite(k)) return kInf;
    d += weights(i) * k;
  }
  return d;
}

double conditional_kl(const CondChannel& chan_p, const CondChannel& q, const Vector& weights) {
  if (q.out_size() != chan_p.out_size() || q.in_size() != chan_p.in_size() ||
      weights.size() != chan_p.in_size())
    throw ValidationError("conditional_kl: dimension mismatch");
  validate_pmf(weights, "conditional_kl weights");
  double d = 0.0;
  for (Index i = 0; i < chan_p.in_size(); ++i) {
    if (weights(i) <= 0.0) continue;
    const double k = kl_divergence(chan_p.rows().row(i), q.rows().row(i));
    if (!std::isfinite(k)) return kInf;
    d += weights(i) * k;
  }
  return d;
}

SimplexParam theta_embed(const JointDist& p, const JointDist& ref) {
  if (p.x_size() != ref.x_size() || p.y_size() != ref.y_size())
    throw ValidationError("theta_embed: dimension mismatch");
  SimplexParam s;
  s.x_size = ref.x_size();
  s.y_size = ref.y_size();
  s.support_order = ref.support();
  for (Index c = 0; c < p.cells(); ++c)
    if (p.cell(c) > 0.0 && ref.cell(c) <= 0.0)
      throw DomainError("theta_embed: support(P) not inside support(ref)");
  s.theta.resize(s.m() - 1);
  for (Index i = 0; i + 1 < s.m(); ++i) s.theta(i) = p.cell(s.support_order[i]);
  return s;
}

JointDist theta_restore(const SimplexParam& s) {
  if (s.m() < 1 || s.theta.size() != s.m() - 1) throw ValidationError("theta_restore: bad parameter");
  Matrix p = Matrix::Zero(s.x_size, s.y_size);
  double rest = 1.0;
  for (Index i = 0; i + 1 < s.m(); ++i) {
    const double t = s.theta(i);
    if (t < 0.0) throw DomainError("theta_restore: negative coordinate");
    const Index c = s.support_order[i];
    p(c / s.y_size, c % s.y_size) = t;
    rest -= t;
  }
  if (rest < -kPmfTol) throw DomainError("theta_restore: coordinates exceed unit mass");
  const Index last = s.support_order.back();
  p(last / s.y_size, last % s.y_size) = std::max(rest, 0.0);
  return JointDist(std::move(p));
}

Counts joint_counts(std::span<const int> xs, std::span<const int> ys, Index x_size, Index y_size) {
  if (xs.size() != ys.size()) throw ValidationError("joint_counts: length mismatch");
  if (xs.empty()) throw ValidationError("joint_counts: empty sequence");
  Counts c = Counts::Zero(x_size, y_size);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < 0 || xs[i] >= x_size || ys[i] < 0 || ys[i] >= y_size)
      throw ValidationError("joint_counts: symbol out of alphabet");
    ++c(xs[i], ys[i]);
  }
  return c;
}

JointDist joint_type(std::span<const int> xs, std::span<const int> ys, Index x_size, Index y_size) {
  return JointDist::from_counts(joint_counts(xs, ys, x_size, y_size));
}

std::uint64_t composition_count(long n, Index k) {
  if (n < 0 || k < 1) return 0;
  // C(n+k-1, k-1) built incrementally; each partial product is itself a binomial
  unsigned __int128 r = 1;
  for (Index i = 1; i < k; ++i) {
    r = r * static_cast<unsigned __int128>(n + i) / static_cast<unsigned __int128>(i);
    if (r > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(r);
}

void for_each_type(long n, Index x_size, Index y_size, const std::function<void(const Counts&)>& fn,
                   std::uint64_t limit) {
  if (n < 1) throw ValidationError("type_enumerate: n must be >= 1");
  if (x_size < 1 || y_size < 1) throw ValidationError("type_enumerate: empty alphabet");
  const Index k = x_size * y_size;
  const std::uint64_t count = composition_count(n, k);
  if (count > limit)
    throw ResourceError("type_enumerate: " + std::to_string(count) + " types exceeds limit " +
                        std::to_string(limit));
  std::vector<long> parts(k, 0);
  parts[k - 1] = n;
  Counts c(x_size, y_size);
  // lexicographic walk over compositions, last part absorbs the remainder
  while (true) {
    for (Index i = 0; i < k; ++i) c(i / y_size, i % y_size) = parts[i];
    fn(c);
    Index j = k - 2;
    while (j >= 0 && parts[k - 1] == 0) {
      // carry: find the rightmost movable position
      parts[k - 1] += parts[j];
      parts[j] = 0;
      --j;
    }
    if (j < 0) break;
    ++parts[j];
    --parts[k - 1];
  }
}

std::vector<JointDist> type_enumerate(long n, Index x_size, Index y_size, std::uint64_t limit) {
  std::vector<JointDist> out;
  for_each_type(
      n, x_size, y_size, [&](const Counts& c) { out.push_back(JointDist::from_counts(c)); }, limit);
  return out;
}

}  // namespace gw
