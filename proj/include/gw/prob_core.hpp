#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "gw/errors.hpp"

namespace gw {

using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Counts = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kPmfTol = 1e-12;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Unit { Bits, Nats };

inline double to_unit(double bits, Unit u) {
  return u == Unit::Bits ? bits : bits * std::log(2.0);
}

// -p log2 p with 0 log 0 = 0
inline double plogp(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

template <typename Derived>
void validate_pmf(const Eigen::DenseBase<Derived>& p, const char* what = "pmf") {
  if (p.size() == 0) throw ValidationError(std::string(what) + ": empty");
  double s = 0.0;
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = 0; j < p.cols(); ++j) {
      const double v = p(i, j);
      if (!std::isfinite(v) || v < 0.0)
        throw ValidationError(std::string(what) + ": negative or non-finite entry");
      s += v;
    }
  if (std::abs(s - 1.0) > kPmfTol)
    throw ValidationError(std::string(what) + ": entries sum to " + std::to_string(s));
}

template <typename Derived>
double entropy(const Eigen::DenseBase<Derived>& p) {
  validate_pmf(p);
  double h = 0.0;
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = 0; j < p.cols(); ++j) h += plogp(p(i, j));
  return h;
}

// +inf when supp(p) is not inside supp(q)
template <typename A, typename B>
double kl_divergence(const Eigen::DenseBase<A>& p, const Eigen::DenseBase<B>& q) {
  if (p.rows() != q.rows() || p.cols() != q.cols())
    throw ValidationError("kl_divergence: dimension mismatch");
  validate_pmf(p, "kl_divergence p");
  validate_pmf(q, "kl_divergence q");
  double d = 0.0;
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = 0; j < p.cols(); ++j) {
      const double a = p(i, j), b = q(i, j);
      if (a <= 0.0) continue;
      if (b <= 0.0) return kInf;
      d += a * std::log2(a / b);
    }
  return std::max(d, 0.0);
}

class JointDist {
 public:
  explicit JointDist(Matrix p);
  static JointDist from_counts(const Counts& counts);

  Index x_size() const { return p_.rows(); }
  Index y_size() const { return p_.cols(); }
  Index cells() const { return p_.size(); }
  const Matrix& pmf() const { return p_; }
  double operator()(Index x, Index y) const { return p_(x, y); }
  // cell c = x * y_size + y
  double cell(Index c) const { return p_(c / y_size(), c % y_size()); }
  Vector flat() const;
  Vector px() const { return p_.rowwise().sum(); }
  Vector py() const { return p_.colwise().sum().transpose(); }
  std::vector<Index> support() const;

 private:
  Matrix p_;
};

class CondChannel {
 public:
  CondChannel() = default;
  explicit CondChannel(Matrix rows);
  // no row check; for internal builders that already normalized
  static CondChannel trusted(Matrix rows);

  Index in_size() const { return rows_.rows(); }
  Index out_size() const { return rows_.cols(); }
  const Matrix& rows() const { return rows_; }
  double operator()(Index i, Index j) const { return rows_(i, j); }

 private:
  Matrix rows_;
};

enum class Axis { X, Y };

double entropy(const JointDist& p);
// Axis::X gives H(X|Y), Axis::Y gives H(Y|X)
double conditional_entropy(const JointDist& p, Axis target);
double mutual_information(const JointDist& p);

// D(chan_p || q | weights): q a single pmf shared by all rows, or one row per input
double conditional_kl(const CondChannel& chan_p, const Vector& q, const Vector& weights);
double conditional_kl(const CondChannel& chan_p, const CondChannel& q, const Vector& weights);

struct SimplexParam {
  Index x_size = 0;
  Index y_size = 0;
  Vector theta;
  std::vector<Index> support_order;
  Index m() const { return static_cast<Index>(support_order.size()); }
};

SimplexParam theta_embed(const JointDist& p, const JointDist& ref);
JointDist theta_restore(const SimplexParam& s);

Counts joint_counts(std::span<const int> xs, std::span<const int> ys, Index x_size, Index y_size);
JointDist joint_type(std::span<const int> xs, std::span<const int> ys, Index x_size, Index y_size);

// C(n+k-1, k-1); saturates at UINT64_MAX
std::uint64_t composition_count(long n, Index k);

inline constexpr std::uint64_t kTypeEnumerateLimit = 5'000'000;

void for_each_type(long n, Index x_size, Index y_size, const std::function<void(const Counts&)>& fn,
                   std::uint64_t limit = kTypeEnumerateLimit);
std::vector<JointDist> type_enumerate(long n, Index x_size, Index y_size,
                                      std::uint64_t limit = kTypeEnumerateLimit);

}  // namespace gw
