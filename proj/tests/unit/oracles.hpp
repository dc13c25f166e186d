#pragma once

#include <cmath>
#include <limits>

#include "helpers.hpp"

namespace testing {

// Wyner CI of a binary pair by brute force over binary W with X, Y independent given W.
// Grid over (pi, a0) at the given resolution; a1, b1 follow from the marginals and b0 from P(0,0).
inline double wyner_grid(const gw::JointDist& p, int steps = 1000) {
  const double px0 = p(0, 0) + p(0, 1), py0 = p(0, 0) + p(1, 0), p00 = p(0, 0);
  const double hxy = h_list({p(0, 0), p(0, 1), p(1, 0), p(1, 1)});
  double best = std::numeric_limits<double>::infinity();
  for (int i = 1; i < steps; ++i) {
    const double pi = static_cast<double>(i) / steps;
    for (int k = 0; k <= steps; ++k) {
      const double a0 = static_cast<double>(k) / steps;
      const double a1 = (px0 - pi * a0) / (1 - pi);
      if (a1 < 0 || a1 > 1 || std::abs(a0 - a1) < 1e-12) continue;
      const double b0 = (p00 - a1 * py0) / (pi * (a0 - a1));
      const double b1 = (py0 - pi * b0) / (1 - pi);
      if (b0 < 0 || b0 > 1 || b1 < 0 || b1 > 1) continue;
      const double cond = pi * (hb(a0) + hb(b0)) + (1 - pi) * (hb(a1) + hb(b1));
      best = std::min(best, hxy - cond);
    }
  }
  return best;
}

// Wyner's closed form for the doubly symmetric binary source with crossover p
inline double wyner_dsbs(double p) {
  const double a = (1 - std::sqrt(1 - 2 * p)) / 2;
  return 1 + hb(p) - 2 * hb(a);
}

// log2 of n! / prod k_i! by summing logs of factors, no shared code with the library
inline double log2_multinomial(const std::vector<long>& ks) {
  long n = 0;
  double v = 0;
  for (long k : ks) {
    for (long j = 1; j <= k; ++j) v += std::log2(static_cast<double>(n + j)) - std::log2(static_cast<double>(j));
    n += k;
  }
  return v;
}

}  // namespace testing
