#include <doctest.h>

#include <set>

#include "gw/errors.hpp"
#include "gw/type_method.hpp"
#include "helpers.hpp"

using namespace gw;

namespace {

JointDist type2222() { return JointDist::from_counts((Counts(2, 2) << 2, 2, 2, 2).finished()); }

// 00 -> w=0, 01 and 10 -> fair split, 11 -> w=1
CondChannel split_cond() {
  Matrix m(4, 2);
  m << 1, 0, 0.5, 0.5, 0.5, 0.5, 0, 1;
  return CondChannel(m);
}

// oracle: brute force over all 4^8 cell sequences, keep the (2,2,2,2) arrangements,
// and test each against the codebook with a separate counting routine
std::size_t uncovered_pairs(const Codebook& book, const CondChannel& cond) {
  std::size_t bad = 0, total = 0;
  for (int code = 0; code < (1 << 16); ++code) {
    int seq[8], cnt[4] = {0, 0, 0, 0};
    for (int i = 0; i < 8; ++i) {
      seq[i] = (code >> (2 * i)) & 3;
      ++cnt[seq[i]];
    }
    if (cnt[0] != 2 || cnt[1] != 2 || cnt[2] != 2 || cnt[3] != 2) continue;
    ++total;
    bool hit = false;
    for (const auto& w : book.words) {
      int joint[4][3] = {};
      for (int i = 0; i < 8; ++i) ++joint[seq[i]][w[i]];
      bool ok = true;
      for (int c = 0; c < 4 && ok; ++c)
        for (Index k = 0; k < cond.out_size(); ++k)
          if (std::abs(joint[c][k] - 2.0 * cond(c, k)) > 1e-9) ok = false;
      if (ok) {
        hit = true;
        break;
      }
    }
    if (!hit) ++bad;
  }
  CHECK(total == 2520);
  return bad;
}

}  // namespace

TEST_CASE("budget formula") {
  // I(W;XY) = H(W) - H(W|XY) = 1 - 1/2
  const double b = covering_budget_log(type2222(), split_cond(), 8);
  CHECK(b == doctest::Approx(8 * 0.5 + (4 * 2 + 4) * std::log2(9.0)).epsilon(1e-12));
}

TEST_CASE("binary W covering over the full type class") {
  const CondChannel cond = split_cond();
  const double budget = covering_budget_log(type2222(), cond, 8);
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    try {
      const Codebook book = covering_build(type2222(), cond, 8, budget, {seed, 200000});
      CHECK(book.pairs_total == 2520);
      CHECK(book.pairs_covered == 2520);
      CHECK(std::log2(static_cast<double>(book.words.size())) <= budget);
      CHECK(uncovered_pairs(book, cond) == 0);
      std::set<std::vector<int>> uniq(book.words.begin(), book.words.end());
      CHECK(uniq.size() == book.words.size());
      for (const auto& w : book.words) {
        long ones = 0;
        for (int s : w) ones += s;
        CHECK(ones == book.w_type[1]);
      }
      ++ok;
    } catch (const CoveringFailure&) {
    }
  }
  CHECK(ok >= 8);
}

TEST_CASE("constant W needs one word") {
  const Codebook book = covering_build(type2222(), CondChannel(Matrix::Ones(4, 1)), 8, 10.0, {});
  CHECK(book.words.size() == 1);
  CHECK(book.pairs_covered == 2520);
}

TEST_CASE("deterministic W = X") {
  Matrix m(4, 2);
  m << 1, 0, 1, 0, 0, 1, 0, 1;
  const CondChannel cond(m);
  const Codebook book = covering_build(type2222(), cond, 8, 40.0, {3, 200000});
  // one word per arrangement of the X sequence: C(8,4)
  CHECK(book.words.size() == 70);
  CHECK(uncovered_pairs(book, cond) == 0);
}

TEST_CASE("covering failure and guards") {
  CHECK_THROWS_AS(covering_build(type2222(), split_cond(), 8, 2.0, {1, 200000}), CoveringFailure);
  CHECK_THROWS_AS(covering_build(type2222(), split_cond(), 8, 40.0, {1, 5}), CoveringFailure);
  const JointDist big = JointDist::from_counts((Counts(2, 2) << 5, 4, 4, 4).finished());
  CHECK_THROWS_AS(covering_build(big, split_cond(), 17, 40.0, {}), PreconditionError);
  CHECK_THROWS_AS(covering_build(type2222(), CondChannel(Matrix::Constant(4, 4, 0.25)), 8, 40.0, {}),
                  PreconditionError);
  CHECK_THROWS_AS(covering_build(JointDist(Matrix::Constant(3, 2, 1.0 / 6)), CondChannel(Matrix::Ones(6, 1)), 6,
                                 40.0, {}),
                  PreconditionError);
}
