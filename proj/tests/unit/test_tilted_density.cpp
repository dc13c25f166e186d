#include <doctest.h>

#include "gw/errors.hpp"
#include "gw/tilted_density.hpp"
#include "helpers.hpp"

using namespace gw;
using testing::Gen;

namespace {

SolverConfig quick(std::uint64_t seed = 20240917) {
  SolverConfig c;
  c.restarts = 6;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("Pangloss tilted density is -log P - r1 - r2") {
  const JointDist d = testing::dsbs();
  const RateTargets r{0.45, 0.55};
  const auto res = rate_function(d, r.r1, r.r2, quick());
  const TiltedTable t = tilted_from_channel(d, res.solution, res.lambdas, r);
  for (Index x = 0; x < 2; ++x)
    for (Index y = 0; y < 2; ++y) CHECK(std::abs(t.values(x, y) - (-std::log2(d(x, y)) - 1.0)) <= 1e-3);
  // Var of -log2 P: outcomes log2(1/0.4), log2(1/0.1) with mass 0.8, 0.2 -> 0.8*0.2*2^2
  CHECK(std::abs(t.variance - 0.64) <= 1e-3);
  CHECK(std::abs(t.mean - res.value) <= 1e-6);
  CHECK_FALSE(t.non_optimal);
}

TEST_CASE("expectation form agrees with the channel form at the optimum") {
  Gen g(41);
  for (int k = 0; k < 3; ++k) {
    const JointDist src(testing::random_pmf(g, 2, 2, 0.05));
    const RateTargets r{0.3 * entropy(src.px()), 0.4 * entropy(src.py())};
    const auto res = rate_function(src, r.r1, r.r2, quick());
    const TiltedTable a = tilted_from_channel(src, res.solution, res.lambdas, r);
    const TiltedTable b = tilted_via_expectation(src, res.solution.marginals(), res.lambdas, r);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() <= 1e-4);
    CHECK(a.max_spread <= 1e-3);
  }
}

TEST_CASE("two seeds give the same table; relabelled W gives exactly the same table") {
  const JointDist d = testing::dsbs();
  const RateTargets r{0.8, 0.5};
  const auto a = rate_function(d, r.r1, r.r2, quick(1));
  const auto b = rate_function(d, r.r1, r.r2, quick(987654321));
  CHECK(check_well_defined(d, a.solution, b.solution, a.lambdas, r) <= 1e-4);

  const Matrix& ch = a.solution.channel.rows();
  Matrix perm(ch.rows(), ch.cols());
  for (Index w = 0; w < ch.cols(); ++w) perm.col((w + 2) % ch.cols()) = ch.col(w);
  const auto s2 = make_solution(CondChannel::trusted(perm), d, a.lambdas);
  const TiltedTable t1 = tilted_from_channel(d, a.solution, a.lambdas, r);
  const TiltedTable t2 = tilted_from_channel(d, s2, a.lambdas, r);
  CHECK((t1.values - t2.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a random channel is flagged as non-optimal") {
  const JointDist d = testing::dsbs();
  const auto s = make_solution(random_channel(4, 6, 3, 0), d, LagrangePair(1.0, 1.0));
  const TiltedTable t = tilted_from_channel(d, s, LagrangePair(1.0, 1.0), {0.5, 0.5});
  CHECK(t.non_optimal);
}

TEST_CASE("zero dispersion for a uniform source on the Pangloss face") {
  const JointDist u(Matrix::Constant(2, 2, 0.25));
  const RateTargets r{0.3, 0.3};
  const auto res = rate_function(u, r.r1, r.r2, quick());
  const TiltedTable t = tilted_from_channel(u, res.solution, res.lambdas, r);
  CHECK(t.variance <= 1e-8);
  CHECK(dispersion(t, u) == t.variance);
}

TEST_CASE("off-support cells are NaN") {
  Matrix m(2, 2);
  m << 0.5, 0.0, 0.25, 0.25;
  const JointDist d(m);
  const auto res = rate_function(d, 0.2, 0.2, quick());
  const TiltedTable t = tilted_from_channel(d, res.solution, res.lambdas, {0.2, 0.2});
  CHECK(std::isnan(t.values(0, 1)));
  CHECK(std::isfinite(t.values(1, 1)));
}

TEST_CASE("derivative identity on the DSBS Pangloss point") {
  const JointDist d = testing::dsbs();
  for (Index i = 0; i < 3; ++i) {
    const DerivativeCheck c = derivative_check(d, {0.5, 0.5}, i, 1e-3, quick());
    CHECK(c.abs_error <= 5e-3);
    CHECK(c.smooth);
  }
  CHECK_THROWS_AS(derivative_check(d, {0.5, 0.5}, 3, 1e-3, quick()), ValidationError);
  CHECK_THROWS_AS(derivative_check(d, {0.5, 0.5}, 0, 0.5, quick()), DomainError);
}
