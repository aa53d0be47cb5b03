#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <vector>

#include "blade/core.hpp"

namespace blade {

// One-class SVM with an RBF kernel (Eq. 15), solved in the nu-parameterized
// dual by sequential minimal optimization:
//   min 1/2 a' Q a   s.t.  0 <= a_i <= 1/(nu n),  sum a = 1
// Decision f(x) = sum_i a_i K(x_i, x) - rho; anomalous iff f(x) < 0.
struct OneClassBoundary {
  double nu = 0.05;
  double gamma = 0.0;
  Matrix support_vectors;  // m x d
  Vector coefficients;     // m
  double rho = 0.0;

  bool fitted() const { return support_vectors.rows() > 0; }

  double decision(const Vector& x) const {
    if (!fitted()) throw ModelError("one-class boundary is not fitted");
    if (x.size() != support_vectors.cols()) throw ModelError("boundary decision: dimension mismatch");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < support_vectors.rows(); ++i)
      sum += coefficients(i) * std::exp(-gamma * (support_vectors.row(i).transpose() - x).squaredNorm());
    return sum - rho;
  }

  bool anomalous(const Vector& x) const { return decision(x) < 0.0; }
};

// gamma <= 0 selects the default 1/d.
inline OneClassBoundary fit_boundary(const Matrix& x, double nu = 0.05, double gamma = 0.0) {
  const Eigen::Index n = x.rows(), d = x.cols();
  if (n < 2) throw DataError("one-class boundary needs at least 2 representations");
  if (!(nu > 0.0 && nu <= 1.0)) throw ModelError("nu must be in (0, 1]");
  if (gamma <= 0.0) gamma = 1.0 / static_cast<double>(d);

  Matrix q(n, n);
  double max_sqdist = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    q(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double sq = (x.row(i) - x.row(j)).squaredNorm();
      max_sqdist = std::max(max_sqdist, sq);
      q(i, j) = q(j, i) = std::exp(-gamma * sq);
    }
  }
  if (max_sqdist < 1e-24)
    std::cerr << "warning: one-class boundary fitted on identical inputs; decision surface is trivial\n";

  const double c = 1.0 / (nu * static_cast<double>(n));
  Vector alpha = Vector::Zero(n);
  Eigen::Index filled = static_cast<Eigen::Index>(std::floor(nu * static_cast<double>(n)));
  for (Eigen::Index i = 0; i < filled; ++i) alpha(i) = c;
  if (filled < n) alpha(filled) = 1.0 - c * static_cast<double>(filled);
  Vector g = q * alpha;

  constexpr double kEdge = 1e-12;
  constexpr double kTol = 1e-9;
  const long max_iter = 200000 + 200 * static_cast<long>(n);
  for (long iter = 0; iter < max_iter; ++iter) {
    Eigen::Index i = -1, j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (alpha(t) < c - kEdge && (i < 0 || g(t) < g(i))) i = t;
      if (alpha(t) > kEdge && (j < 0 || g(t) > g(j))) j = t;
    }
    if (i < 0 || j < 0 || g(j) - g(i) < kTol) break;
    double denom = std::max(q(i, i) + q(j, j) - 2.0 * q(i, j), 1e-12);
    double step = std::min({(g(j) - g(i)) / denom, c - alpha(i), alpha(j)});
    alpha(i) += step;
    alpha(j) -= step;
    g += step * (q.col(i) - q.col(j));
  }

  // rho from free support vectors; midpoint of the KKT interval otherwise.
  double rho = 0.0;
  int free_count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (alpha(i) > kEdge && alpha(i) < c - kEdge) {
      rho += g(i);
      ++free_count;
    }
  }
  if (free_count > 0) {
    rho /= free_count;
  } else {
    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (alpha(i) >= c - kEdge) lo = std::max(lo, g(i));
      if (alpha(i) <= kEdge) hi = std::min(hi, g(i));
    }
    if (std::isfinite(lo) && std::isfinite(hi))
      rho = 0.5 * (lo + hi);
    else if (std::isfinite(lo))
      rho = lo;
    else if (std::isfinite(hi))
      rho = hi;
  }

  OneClassBoundary b;
  b.nu = nu;
  b.gamma = gamma;
  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < n; ++i)
    if (alpha(i) > kEdge) sv.push_back(i);
  b.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), d);
  b.coefficients.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t i = 0; i < sv.size(); ++i) {
    b.support_vectors.row(static_cast<Eigen::Index>(i)) = x.row(sv[i]);
    b.coefficients(static_cast<Eigen::Index>(i)) = alpha(sv[i]);
  }
  b.rho = rho;
  return b;
}

}  // namespace blade
