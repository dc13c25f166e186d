#pragma once

#include "gw/region_solver.hpp"

namespace gw {

struct TiltedTable {
  Matrix values;  // j(x,y) in bits; NaN off the source support
  Matrix spread;  // max - min of the per-w expressions (0 for the expectation form)
  RateTargets r_targets;
  LagrangePair lambdas;
  double mean = 0.0;
  double variance = 0.0;
  double max_spread = 0.0;
  bool non_optimal = false;  // max_spread above 1e-2
};

inline constexpr double kSpreadFlag = 1e-2;

TiltedTable tilted_from_channel(const JointDist& source, const TestChannelSolution& sol,
                                const LagrangePair& l, const RateTargets& r);
TiltedTable tilted_via_expectation(const JointDist& source, const Marginals& q, const LagrangePair& l,
                                   const RateTargets& r);

// max over the support of |j_A - j_B|
double check_well_defined(const JointDist& source, const TestChannelSolution& a,
                          const TestChannelSolution& b, const LagrangePair& l, const RateTargets& r);

double dispersion(const TiltedTable& table, const JointDist& source);

struct DerivativeCheck {
  double lhs = 0.0;       // central difference of R along theta_i, step h
  double lhs_half = 0.0;  // same with h/2
  double rhs = 0.0;       // j(i) - j(m)
  double abs_error = 0.0;
  bool smooth = true;  // |lhs - lhs_half| within 10x the finite-difference tolerance
};

inline constexpr double kFdTolerance = 5e-4;

// coord indexes theta, i.e. the source support in row-major order without its last cell
DerivativeCheck derivative_check(const JointDist& source, const RateTargets& r, Index coord, double h,
                                 const SolverConfig& config);

}  // namespace gw
