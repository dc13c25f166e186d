#pragma once

// Support-restricted kernels shared by the solver translation units.

#include <cstdint>
#include <vector>

#include "gw/region_solver.hpp"

namespace gw::detail {

struct SupportView {
  Index x_size = 0, y_size = 0;
  std::vector<Index> cell, x, y;
  std::vector<double> p;
  explicit SupportView(const JointDist& src);
  Index size() const { return static_cast<Index>(cell.size()); }
};

// joint masses under a channel: qw(w), ax(w,x) = P(W=w,X=x), ay(w,y)
struct Induced {
  Vector qw;
  Matrix ax, ay;
};

void induce(const SupportView& s, const Matrix& ch, Induced& out);
RateTriple rates(const SupportView& s, const Matrix& ch, const Induced& ind);
// one inner update from the induced q; rows of ch for support cells are overwritten
void inner_update(const SupportView& s, const Induced& ind, const LagrangePair& l, Matrix& ch,
                  std::vector<double>& scratch);

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace gw::detail
