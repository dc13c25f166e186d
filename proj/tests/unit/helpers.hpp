#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gw/prob_core.hpp"

namespace testing {

// xorshift64*, kept separate from the library RNG so oracles share no code with it
struct Gen {
  std::uint64_t s;
  explicit Gen(std::uint64_t seed) : s(seed * 2654435761ULL + 88172645463325252ULL) {}
  std::uint64_t next() {
    s ^= s >> 12;
    s ^= s << 25;
    s ^= s >> 27;
    return s * 2685821657736338717ULL;
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  long below(long n) { return static_cast<long>(uniform() * static_cast<double>(n)); }
};

inline gw::Matrix random_pmf(Gen& g, gw::Index rows, gw::Index cols, double floor = 0.02) {
  gw::Matrix p(rows, cols);
  for (gw::Index i = 0; i < p.size(); ++i) p(i / cols, i % cols) = floor + g.uniform();
  p /= p.sum();
  // exact unit sum so validation to 1e-12 never trips
  p(rows - 1, cols - 1) = 0.0;
  p(rows - 1, cols - 1) = 1.0 - p.sum();
  return p;
}

inline gw::JointDist dsbs(double p = 0.2) {
  gw::Matrix m(2, 2);
  m << (1 - p) / 2, p / 2, p / 2, (1 - p) / 2;
  return gw::JointDist(m);
}

// plain-loop entropy, independent of the library templates
inline double h_list(std::initializer_list<double> ps) {
  double h = 0;
  for (double p : ps)
    if (p > 0) h -= p * std::log(p) / std::log(2.0);
  return h;
}

inline double hb(double p) { return h_list({p, 1 - p}); }

}  // namespace testing
