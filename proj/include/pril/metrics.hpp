#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "pril/error.hpp"

namespace pril {

enum class NormKind { L1, L2, Linf };

template <typename Derived>
typename Derived::Scalar vector_norm(const Eigen::MatrixBase<Derived>& v, NormKind kind) {
  switch (kind) {
    case NormKind::L1: return v.template lpNorm<1>();
    case NormKind::L2: return v.norm();
    case NormKind::Linf: return v.template lpNorm<Eigen::Infinity>();
  }
  return v.norm();
}

/// Each vector is scaled to unit `kind`-norm, then the same norm of the
/// difference is taken. Throws ZeroVector when either side has zero norm.
template <typename DerivedA, typename DerivedB>
double normalized_distance(const Eigen::MatrixBase<DerivedA>& r, const Eigen::MatrixBase<DerivedB>& r_hat,
                           NormKind kind) {
  if (r.size() != r_hat.size()) throw Error(ErrorKind::InvalidArgument, "reward vectors differ in length");
  const double na = static_cast<double>(vector_norm(r, kind));
  const double nb = static_cast<double>(vector_norm(r_hat, kind));
  if (!(na > 0.0) || !(nb > 0.0)) throw Error(ErrorKind::ZeroVector, "cannot normalize a zero reward vector");
  const Eigen::VectorXd diff = r.template cast<double>() / na - r_hat.template cast<double>() / nb;
  return vector_norm(diff, kind);
}

/// States whose entries carry strictly opposite signs.
template <typename DerivedA, typename DerivedB>
int sign_change_count(const Eigen::MatrixBase<DerivedA>& r, const Eigen::MatrixBase<DerivedB>& r_hat) {
  if (r.size() != r_hat.size()) throw Error(ErrorKind::InvalidArgument, "reward vectors differ in length");
  int count = 0;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if ((r(i) > 0 && r_hat(i) < 0) || (r(i) < 0 && r_hat(i) > 0)) ++count;
  }
  return count;
}

struct DistanceReport {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  int sign_changes = 0;
};

template <typename DerivedA, typename DerivedB>
DistanceReport distance_report(const Eigen::MatrixBase<DerivedA>& r, const Eigen::MatrixBase<DerivedB>& r_hat) {
  return {normalized_distance(r, r_hat, NormKind::L1), normalized_distance(r, r_hat, NormKind::L2),
          normalized_distance(r, r_hat, NormKind::Linf), sign_change_count(r, r_hat)};
}

/// Average ranks (1-based), ties sharing the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

/// Spearman rank correlation: Pearson correlation of average ranks.
/// NaN when either side is constant.
inline double spearman_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error(ErrorKind::InvalidArgument, "samples differ in length");
  if (x.size() < 2) throw Error(ErrorKind::TooFewRuns, "correlation needs at least two points");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const Eigen::Map<const Eigen::VectorXd> a(rx.data(), static_cast<Eigen::Index>(rx.size()));
  const Eigen::Map<const Eigen::VectorXd> b(ry.data(), static_cast<Eigen::Index>(ry.size()));
  const Eigen::VectorXd da = a.array() - a.mean();
  const Eigen::VectorXd db = b.array() - b.mean();
  const double denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
  if (denom == 0.0) return std::nan("");
  return da.dot(db) / denom;
}

}  // namespace pril
