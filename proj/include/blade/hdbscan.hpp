#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "blade/core.hpp"

namespace blade {

struct HdbscanParams {
  int min_cluster_size = 0;  // 0 -> max(15, 0.5% of n)
  int min_samples = 5;
};

// Density-based cluster model (Eq. 8). Fit builds the single-linkage
// hierarchy over mutual reachability distances, condenses it with
// min_cluster_size and selects clusters by excess of mass. Training points
// keep their hierarchy labels; noise is -1.
//
// Out-of-sample rule (the spec's "centers and boundaries" as a membership
// test): a query adopts the label of its nearest training point p iff the
// mutual reachability distance max(d(q,p), core(p), core(q)) does not exceed
// the distance at which p itself last belonged to its cluster. Queries whose
// neighbor is noise, or that fail the test, get -1.
class ClusterModel {
 public:
  struct ClusterInfo {
    int id = 0;                 // output label
    double birth_distance = 0;  // distance at which the cluster split off
    double stability = 0;       // excess-of-mass score
    int size = 0;
  };

  Matrix points;                   // n x d training inputs (whitened latents)
  std::vector<int> labels_;        // per training point, -1 = noise
  std::vector<double> core_dist;   // per training point
  std::vector<double> leave_dist;  // distance at which the point left its cluster
  std::vector<ClusterInfo> clusters;
  int min_samples = 5;
  int min_cluster_size = 0;

  const std::vector<int>& labels() const { return labels_; }
  int cluster_count() const { return static_cast<int>(clusters.size()); }
  bool fitted() const { return points.rows() > 0; }

  double noise_rate() const {
    if (labels_.empty()) return 0.0;
    std::size_t noise = 0;
    for (int l : labels_)
      if (l < 0) ++noise;
    return static_cast<double>(noise) / static_cast<double>(labels_.size());
  }

  int assign(const Vector& q) const {
    if (!fitted()) throw ModelError("cluster model is not fitted");
    if (q.size() != points.cols()) throw ModelError("cluster assign: dimension mismatch");
    const Eigen::Index n = points.rows();
    std::vector<double> dist(n);
    for (Eigen::Index i = 0; i < n; ++i) dist[i] = (points.row(i).transpose() - q).norm();
    Eigen::Index nn = 0;
    for (Eigen::Index i = 1; i < n; ++i)
      if (dist[i] < dist[nn]) nn = i;
    if (labels_[nn] < 0) return -1;
    const int k = std::min<int>(min_samples, static_cast<int>(n));
    std::vector<double> tmp = dist;
    std::nth_element(tmp.begin(), tmp.begin() + (k - 1), tmp.end());
    double core_q = tmp[k - 1];
    double d_mreach = std::max({dist[nn], core_dist[nn], core_q});
    return d_mreach <= leave_dist[nn] + 1e-12 ? labels_[nn] : -1;
  }
};

namespace detail {

struct MstEdge {
  int a = 0, b = 0;
  double w = 0;
};

inline std::vector<double> core_distances(const Matrix& x, int k) {
  const Eigen::Index n = x.rows();
  std::vector<double> core(n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    std::vector<double> d(n);
    for (Eigen::Index j = 0; j < n; ++j) d[j] = (x.row(i) - x.row(j)).squaredNorm();
    std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
    core[i] = std::sqrt(d[k - 1]);
  });
  return core;
}

inline std::vector<MstEdge> mutual_reachability_mst(const Matrix& x, const std::vector<double>& core) {
  const int n = static_cast<int>(x.rows());
  std::vector<MstEdge> edges;
  edges.reserve(n - 1);
  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<int> best_from(n, 0);
  int cur = 0;
  in_tree[0] = 1;
  for (int step = 1; step < n; ++step) {
    for (int j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      double d = (x.row(cur) - x.row(j)).norm();
      double mr = std::max({d, core[cur], core[j]});
      if (mr < best[j]) {
        best[j] = mr;
        best_from[j] = cur;
      }
    }
    int next = -1;
    for (int j = 0; j < n; ++j)
      if (!in_tree[j] && (next < 0 || best[j] < best[next])) next = j;
    edges.push_back({best_from[next], next, best[next]});
    in_tree[next] = 1;
    cur = next;
  }
  return edges;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
};

}  // namespace detail

inline ClusterModel fit_clusters(const Matrix& points, HdbscanParams params = {}) {
  const int n = static_cast<int>(points.rows());
  if (n < 1) throw DataError("clustering needs at least one point");
  int mcs = params.min_cluster_size > 0
                ? params.min_cluster_size
                : std::max(15, static_cast<int>(std::ceil(0.005 * static_cast<double>(n))));
  mcs = std::max(2, mcs);
  if (n < mcs) throw DataError("clustering needs at least min_cluster_size (" + std::to_string(mcs) + ") points");
  const int k = std::min(params.min_samples, n);

  ClusterModel model;
  model.points = points;
  model.min_samples = std::max(1, k);
  model.min_cluster_size = mcs;
  model.core_dist = detail::core_distances(points, model.min_samples);
  auto edges = detail::mutual_reachability_mst(points, model.core_dist);
  std::sort(edges.begin(), edges.end(), [](const detail::MstEdge& a, const detail::MstEdge& b) {
    if (a.w != b.w) return a.w < b.w;
    if (a.a != b.a) return a.a < b.a;
    return a.b < b.b;
  });

  // Degenerate input (all points mutually at distance 0): one cluster.
  if (edges.empty() || edges.back().w <= 0.0) {
    model.labels_.assign(n, 0);
    model.leave_dist.assign(n, 0.0);
    model.clusters = {ClusterModel::ClusterInfo{0, 0.0, 0.0, n}};
    return model;
  }

  // Single-linkage dendrogram: leaves 0..n-1, merges n..2n-2 in edge order.
  struct DNode {
    int left = -1, right = -1, size = 1;
    double dist = 0;
  };
  std::vector<DNode> nodes(2 * n - 1);
  detail::UnionFind uf(n);
  std::vector<int> comp_node(n);
  for (int i = 0; i < n; ++i) comp_node[i] = i;
  int next_node = n;
  for (const auto& e : edges) {
    int ra = uf.find(e.a), rb = uf.find(e.b);
    DNode nd;
    nd.left = comp_node[ra];
    nd.right = comp_node[rb];
    nd.dist = e.w;
    nd.size = nodes[nd.left].size + nodes[nd.right].size;
    nodes[next_node] = nd;
    uf.parent[ra] = rb;
    comp_node[uf.find(rb)] = next_node;
    ++next_node;
  }
  const int root = 2 * n - 2;

  // Condensed tree. Clusters are created top-down; creation order is a
  // topological order (parents before children).
  constexpr double kMinDist = 1e-12;
  struct Condensed {
    int parent = -1;
    double birth_lambda = 0;
    double stability = 0;
    int size = 0;
    std::vector<int> children;
  };
  std::vector<Condensed> cond;
  cond.push_back({-1, 0.0, 0.0, n, {}});
  model.labels_.assign(n, -1);
  model.leave_dist.assign(n, 0.0);
  std::vector<int> point_cluster(n, 0);
  std::vector<double> point_lambda(n, 0.0);

  auto fallout_leaves = [&](int subtree, int cluster, double lambda) {
    std::vector<int> stack{subtree};
    while (!stack.empty()) {
      int nd = stack.back();
      stack.pop_back();
      if (nd < n) {
        point_cluster[nd] = cluster;
        point_lambda[nd] = lambda;
        cond[cluster].stability += lambda - cond[cluster].birth_lambda;
      } else {
        stack.push_back(nodes[nd].left);
        stack.push_back(nodes[nd].right);
      }
    }
  };

  std::vector<std::pair<int, int>> work{{root, 0}};  // (dendrogram node, condensed cluster)
  while (!work.empty()) {
    auto [nd, c] = work.back();
    work.pop_back();
    const double lambda = 1.0 / std::max(nodes[nd].dist, kMinDist);
    int a = nodes[nd].left, b = nodes[nd].right;
    int sa = nodes[a].size, sb = nodes[b].size;
    const bool a_big = sa >= mcs, b_big = sb >= mcs;
    if (a_big && b_big) {
      for (int child_node : {a, b}) {
        int child = static_cast<int>(cond.size());
        cond.push_back({c, lambda, 0.0, nodes[child_node].size, {}});
        cond[c].children.push_back(child);
        cond[c].stability += (lambda - cond[c].birth_lambda) * nodes[child_node].size;
        work.push_back({child_node, child});
      }
    } else if (a_big || b_big) {
      int big = a_big ? a : b, small = a_big ? b : a;
      fallout_leaves(small, c, lambda);
      work.push_back({big, c});
    } else {
      fallout_leaves(a, c, lambda);
      fallout_leaves(b, c, lambda);
    }
  }

  // Excess-of-mass selection; the root is not a candidate unless it is the
  // only cluster.
  const std::size_t m = cond.size();
  std::vector<char> selected(m, 0);
  std::vector<double> subtree_stab(m, 0.0);
  for (std::size_t c = m; c-- > 0;) {
    if (cond[c].children.empty()) {
      selected[c] = 1;
      subtree_stab[c] = cond[c].stability;
      continue;
    }
    double child_sum = 0.0;
    for (int ch : cond[c].children) child_sum += subtree_stab[ch];
    if (c != 0 && cond[c].stability > child_sum) {
      selected[c] = 1;
      subtree_stab[c] = cond[c].stability;
      // deselect everything below
      std::vector<int> stack(cond[c].children.begin(), cond[c].children.end());
      while (!stack.empty()) {
        int x = stack.back();
        stack.pop_back();
        selected[x] = 0;
        stack.insert(stack.end(), cond[x].children.begin(), cond[x].children.end());
      }
    } else {
      subtree_stab[c] = child_sum;
    }
  }
  if (m > 1) selected[0] = 0;

  std::vector<int> out_id(m, -1);
  for (std::size_t c = 0; c < m; ++c) {
    if (!selected[c]) continue;
    ClusterModel::ClusterInfo info;
    info.id = static_cast<int>(model.clusters.size());
    info.birth_distance = cond[c].birth_lambda > 0 ? 1.0 / cond[c].birth_lambda : edges.back().w;
    info.stability = cond[c].stability;
    info.size = 0;
    out_id[c] = info.id;
    model.clusters.push_back(info);
  }
  for (int p = 0; p < n; ++p) {
    model.leave_dist[p] = 1.0 / std::max(point_lambda[p], kMinDist);
    int c = point_cluster[p];
    while (c >= 0 && !selected[c]) c = cond[c].parent;
    if (c >= 0) {
      model.labels_[p] = out_id[c];
      ++model.clusters[out_id[c]].size;
    }
  }
  return model;
}

}  // namespace blade
