#pragma once

#include <array>
#include <string>

#include "gw/tilted_density.hpp"

namespace gw {

struct RatePoint {
  double r0 = 0.0;
  double r1 = 0.0;
  double r2 = 0.0;
};

struct SecondOrderPlane {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double variance = 0.0;
  double epsilon = 0.5;
  double threshold = 0.0;  // sqrt(V) * Qinv(eps)
  double slope_error = 0.0;
  RatePoint r_star;
};

double qfunc(double t);
double qinv(double eps);

struct Slopes {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double slope_error = 0.0;
  LagrangePair dual;  // multipliers returned by rate_function at r_star
  RateResult at_star;
};

inline constexpr double kSlopeErrorFloor = 2e-3;

Slopes slopes(const JointDist& source, double r1, double r2, double h, const SolverConfig& config);

SecondOrderPlane second_order_region(const JointDist& source, const RatePoint& r_star, double eps,
                                     const SolverConfig& config, double h = 1e-3);

bool membership(const std::array<double, 3>& L, const SecondOrderPlane& plane);

// log M_i = n r_i + sqrt(n) a_i, not rounded
std::array<double, 3> finite_n_rates(const SecondOrderPlane& plane, const RatePoint& r_star, long n,
                                     const std::array<double, 3>& split);

enum class PanglossStatus { CertifiedInside, InsideTriangle, Outside, Unknown };
std::string to_string(PanglossStatus s);

struct PanglossCheck {
  PanglossStatus status = PanglossStatus::Unknown;
  double wyner_value = 0.0;  // C_W upper bound used for the outside test
  bool wyner_certified = false;
};

// margin for certified-inside, in barycentric weight
inline constexpr double kPanglossMargin = 1e-6;

PanglossCheck pangloss_membership(const JointDist& source, const RatePoint& r, const SolverConfig& config);

SecondOrderPlane pangloss_plane(const JointDist& source, const RatePoint& r_star, double eps,
                                const SolverConfig& config);

}  // namespace gw
