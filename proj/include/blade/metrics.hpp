#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "blade/core.hpp"

namespace blade {

struct ConfusionCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;

  long total() const { return tp + fp + fn + tn; }
  double precision() const { return tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0; }
  double recall() const { return tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0; }
  double f1() const {
    double p = precision(), r = recall();
    return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
  }
};

inline ConfusionCounts confusion(const std::vector<bool>& predicted, const std::vector<bool>& truth) {
  if (predicted.size() != truth.size()) throw DataError("confusion: prediction/truth size mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (truth[i])
      (predicted[i] ? c.tp : c.fn)++;
    else
      (predicted[i] ? c.fp : c.tn)++;
  }
  return c;
}

// Mean silhouette coefficient over points with a non-noise label; noise
// points (label < 0) are excluded. Singleton-cluster points score 0.
inline double silhouette_score(const Matrix& x, const std::vector<int>& labels) {
  if (static_cast<std::size_t>(x.rows()) != labels.size())
    throw DataError("silhouette: point/label count mismatch");
  std::map<int, long> sizes;
  for (int l : labels)
    if (l >= 0) sizes[l]++;
  if (sizes.size() < 2) throw DataError("silhouette needs at least 2 clusters");
  const int kmax = sizes.rbegin()->first + 1;
  std::vector<long> count(kmax, 0);
  for (int l : labels)
    if (l >= 0) count[l]++;

  const Eigen::Index n = x.rows();
  std::vector<double> s(n, 0.0);
  std::vector<char> keep(n, 0);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    int li = labels[i];
    if (li < 0) return;
    std::vector<double> dsum(kmax, 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (labels[j] < 0 || static_cast<Eigen::Index>(i) == j) continue;
      dsum[labels[j]] += (x.row(i) - x.row(j)).norm();
    }
    keep[i] = 1;
    if (count[li] <= 1) {
      s[i] = 0.0;
      return;
    }
    double a = dsum[li] / static_cast<double>(count[li] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < kmax; ++c) {
      if (c == li || count[c] == 0) continue;
      b = std::min(b, dsum[c] / static_cast<double>(count[c]));
    }
    s[i] = (b - a) / std::max(a, b);
  });
  double total = 0.0;
  long m = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (keep[i]) {
      total += s[i];
      ++m;
    }
  return total / static_cast<double>(m);
}

// Ratio of between- to within-cluster dispersion, scaled by (n-k)/(k-1).
inline double calinski_harabasz_score(const Matrix& x, const std::vector<int>& labels) {
  std::map<int, long> sizes;
  for (int l : labels)
    if (l >= 0) sizes[l]++;
  const long k = static_cast<long>(sizes.size());
  if (k < 2) throw DataError("calinski-harabasz needs at least 2 clusters");
  long n = 0;
  RowVector overall = RowVector::Zero(x.cols());
  std::map<int, RowVector> centroids;
  for (auto& [c, cnt] : sizes) centroids[c] = RowVector::Zero(x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (labels[i] < 0) continue;
    overall += x.row(i);
    centroids[labels[i]] += x.row(i);
    ++n;
  }
  overall /= static_cast<double>(n);
  double between = 0.0, within = 0.0;
  for (auto& [c, v] : centroids) {
    v /= static_cast<double>(sizes[c]);
    between += static_cast<double>(sizes[c]) * (v - overall).squaredNorm();
  }
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (labels[i] < 0) continue;
    within += (x.row(i) - centroids[labels[i]]).squaredNorm();
  }
  if (within <= 0.0) return std::numeric_limits<double>::infinity();
  return (between / static_cast<double>(k - 1)) / (within / static_cast<double>(n - k));
}

// Mean over clusters of the worst (s_i + s_j) / d(c_i, c_j) ratio.
inline double davies_bouldin_score(const Matrix& x, const std::vector<int>& labels) {
  std::map<int, long> sizes;
  for (int l : labels)
    if (l >= 0) sizes[l]++;
  if (sizes.size() < 2) throw DataError("davies-bouldin needs at least 2 clusters");
  std::vector<int> ids;
  for (auto& [c, cnt] : sizes) ids.push_back(c);
  const std::size_t k = ids.size();
  std::vector<RowVector> centroids(k, RowVector::Zero(x.cols()));
  std::map<int, std::size_t> index;
  for (std::size_t i = 0; i < k; ++i) index[ids[i]] = i;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if (labels[i] >= 0) centroids[index[labels[i]]] += x.row(i);
  for (std::size_t i = 0; i < k; ++i) centroids[i] /= static_cast<double>(sizes[ids[i]]);
  std::vector<double> scatter(k, 0.0);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    if (labels[i] >= 0) scatter[index[labels[i]]] += (x.row(i) - centroids[index[labels[i]]]).norm();
  for (std::size_t i = 0; i < k; ++i) scatter[i] /= static_cast<double>(sizes[ids[i]]);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      double d = (centroids[i] - centroids[j]).norm();
      if (d > 0.0) worst = std::max(worst, (scatter[i] + scatter[j]) / d);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

// Adjusted Rand index between two labelings; every distinct value (including
// -1) counts as its own class.
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw DataError("adjusted rand: size mismatch");
  const double n = static_cast<double>(a.size());
  if (a.size() < 2) return 1.0;
  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cells[{a[i], b[i]}] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  auto comb2 = [](double m) { return m * (m - 1.0) / 2.0; };
  double sum_cells = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (auto& [key, v] : cells) sum_cells += comb2(v);
  for (auto& [key, v] : ra) sum_a += comb2(v);
  for (auto& [key, v] : rb) sum_b += comb2(v);
  double expected = sum_a * sum_b / comb2(n);
  double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_cells - expected) / (max_index - expected);
}

}  // namespace blade
