#include <algorithm>
#include <cmath>
#include <random>

#include "gw/errors.hpp"
#include "gw/type_method.hpp"

namespace gw {

namespace {

void guard(const JointDist& type, const CondChannel& cond, long n) {
  if (n < 1 || n > kCoverMaxN) throw PreconditionError("covering: n must be in [1, 16]");
  if (type.x_size() > kCoverMaxAlphabet || type.y_size() > kCoverMaxAlphabet)
    throw PreconditionError("covering: alphabets larger than 2x2");
  if (cond.out_size() > kCoverMaxW) throw PreconditionError("covering: |W| above 3");
  if (cond.in_size() != type.cells()) throw ValidationError("covering: cond_type does not match the type");
}

// N(c, w) = n type(c) cond(w|c), integer after truncation
std::vector<std::vector<long>> joint_counts_wc(const Counts& c, const CondChannel& cond) {
  std::vector<std::vector<long>> out(static_cast<std::size_t>(cond.in_size()),
                                     std::vector<long>(static_cast<std::size_t>(cond.out_size()), 0));
  for (Index cell = 0; cell < cond.in_size(); ++cell) {
    const long N = c(cell / c.cols(), cell % c.cols());
    for (Index w = 0; w < cond.out_size(); ++w)
      out[cell][w] = std::lround(cond(cell, w) * static_cast<double>(N));
  }
  return out;
}

}  // namespace

double covering_budget_log(const JointDist& type, const CondChannel& cond_type, long n) {
  if (cond_type.in_size() != type.cells()) throw ValidationError("covering: cond_type does not match the type");
  const Vector p = type.flat();
  Vector pw = Vector::Zero(cond_type.out_size());
  double hw_given = 0.0;
  for (Index c = 0; c < type.cells(); ++c) {
    pw += p(c) * cond_type.rows().row(c).transpose();
    hw_given += p(c) * entropy(cond_type.rows().row(c));
  }
  const double info = std::max(0.0, entropy(pw) - hw_given);
  const double dn = static_cast<double>(n);
  return dn * info + static_cast<double>(type.cells() * cond_type.out_size() + 4) * std::log2(dn + 1.0);
}

Codebook covering_build(const JointDist& type, const CondChannel& cond_type, long n, double budget_log,
                        const CoverConfig& config) {
  guard(type, cond_type, n);
  const Counts counts = type_counts(type, n);
  const CondChannel cond = conditional_type_truncate(cond_type, type, n);
  const auto target = joint_counts_wc(counts, cond);
  const Index cells = type.cells(), W = cond.out_size();

  Codebook book;
  book.n = n;
  book.joint_cond_type = cond;
  book.budget_log = budget_log;
  book.w_type.assign(static_cast<std::size_t>(W), 0);
  for (Index c = 0; c < cells; ++c)
    for (Index w = 0; w < W; ++w) book.w_type[w] += target[c][w];

  // T_XY^n: all distinct arrangements of the cell composition
  std::vector<int> seq;
  for (Index c = 0; c < cells; ++c)
    for (long k = 0; k < counts(c / type.y_size(), c % type.y_size()); ++k) seq.push_back(static_cast<int>(c));
  std::vector<std::vector<int>> pairs;
  do {
    pairs.push_back(seq);
    if (pairs.size() > kCoverMaxPairs) throw PreconditionError("covering: type class above 2e6 pairs");
  } while (std::next_permutation(seq.begin(), seq.end()));
  book.pairs_total = pairs.size();

  std::vector<int> base;
  for (Index w = 0; w < W; ++w)
    for (long k = 0; k < book.w_type[w]; ++k) base.push_back(static_cast<int>(w));

  const double max_words = std::exp2(std::min(budget_log, 62.0));
  std::vector<char> covered(pairs.size(), 0);
  std::uint64_t left = pairs.size();
  std::mt19937_64 rng(config.seed);
  std::vector<long> tally(static_cast<std::size_t>(cells * W));

  auto covers = [&](const std::vector<int>& pair, const std::vector<int>& word) {
    std::fill(tally.begin(), tally.end(), 0);
    for (long i = 0; i < n; ++i) ++tally[pair[i] * W + word[i]];
    for (Index c = 0; c < cells; ++c)
      for (Index w = 0; w < W; ++w)
        if (tally[c * W + w] != target[c][w]) return false;
    return true;
  };

  while (left > 0) {
    if (book.draws >= config.max_draws || static_cast<double>(book.words.size()) >= max_words)
      throw CoveringFailure("covering: " + std::to_string(left) + " of " + std::to_string(book.pairs_total) +
                            " pairs uncovered after " + std::to_string(book.draws) + " draws (seed " +
                            std::to_string(config.seed) + ")");
    std::vector<int> word = base;
    std::shuffle(word.begin(), word.end(), rng);
    ++book.draws;
    if (std::find(book.words.begin(), book.words.end(), word) != book.words.end()) continue;
    std::uint64_t fresh = 0;
    for (std::size_t j = 0; j < pairs.size(); ++j)
      if (!covered[j] && covers(pairs[j], word)) {
        covered[j] = 1;
        ++fresh;
      }
    if (fresh > 0) {
      book.words.push_back(std::move(word));
      left -= fresh;
    }
  }

  // independent re-check of the postcondition over every pair
  for (const auto& pr : pairs) {
    bool ok = false;
    for (const auto& w : book.words)
      if (covers(pr, w)) {
        ok = true;
        break;
      }
    if (!ok) throw NumericalError("covering: verification found an uncovered pair", {});
  }
  book.pairs_covered = book.pairs_total;
  return book;
}

}  // namespace gw
