#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "blade/hdbscan.hpp"
#include "blade/metrics.hpp"
#include "blade/rng.hpp"

using namespace blade;

namespace {

struct Blobs {
  Matrix points;
  std::vector<int> truth;
};

Blobs make_blobs(const std::vector<std::pair<Vector, double>>& specs, int per_blob, std::uint64_t seed) {
  Rng rng(seed);
  Blobs b;
  const int d = static_cast<int>(specs[0].first.size());
  b.points.resize(per_blob * specs.size(), d);
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < specs.size(); ++c) {
    for (int i = 0; i < per_blob; ++i, ++row) {
      for (int j = 0; j < d; ++j) b.points(row, j) = specs[c].first(j) + rng.normal(0.0, specs[c].second);
      b.truth.push_back(static_cast<int>(c));
    }
  }
  return b;
}

Vector vec2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

}  // namespace

TEST_CASE("two well-separated blobs give exactly two pure clusters", "[hdbscan]") {
  Blobs b = make_blobs({{vec2(0, 0), 1.0}, {vec2(20, 0), 1.0}}, 120, 41);
  ClusterModel m = fit_clusters(b.points, {.min_cluster_size = 15, .min_samples = 5});
  REQUIRE(m.cluster_count() == 2);
  // zero cross-assignment: within each true blob, all non-noise labels agree
  std::map<int, std::map<int, int>> table;
  for (std::size_t i = 0; i < b.truth.size(); ++i)
    if (m.labels()[i] >= 0) table[b.truth[i]][m.labels()[i]]++;
  REQUIRE(table[0].size() == 1);
  REQUIRE(table[1].size() == 1);
  REQUIRE(table[0].begin()->first != table[1].begin()->first);
  REQUIRE(m.noise_rate() < 0.2);
}

TEST_CASE("a far outlier among blobs is labeled noise", "[hdbscan]") {
  Blobs b = make_blobs({{vec2(0, 0), 1.0}, {vec2(25, 0), 1.0}}, 100, 42);
  Matrix with_outlier(b.points.rows() + 1, 2);
  with_outlier.topRows(b.points.rows()) = b.points;
  with_outlier.row(b.points.rows()) = vec2(12.5, 400.0).transpose();
  ClusterModel m = fit_clusters(with_outlier, {.min_cluster_size = 15, .min_samples = 5});
  REQUIRE(m.cluster_count() == 2);
  REQUIRE(m.labels().back() == -1);
}

TEST_CASE("six blobs are recovered with high agreement", "[hdbscan]") {
  std::vector<std::pair<Vector, double>> specs;
  for (int c = 0; c < 6; ++c) specs.push_back({vec2(15.0 * (c % 3), 15.0 * (c / 3)), 0.8});
  Blobs b = make_blobs(specs, 90, 43);
  ClusterModel m = fit_clusters(b.points, {.min_cluster_size = 20, .min_samples = 5});
  REQUIRE(m.cluster_count() == 6);
  REQUIRE(adjusted_rand_index(m.labels(), b.truth) >= 0.8);
}

TEST_CASE("out-of-sample assignment follows the membership rule", "[hdbscan]") {
  Blobs b = make_blobs({{vec2(0, 0), 1.0}, {vec2(20, 0), 1.0}}, 120, 44);
  ClusterModel m = fit_clusters(b.points, {.min_cluster_size = 15, .min_samples = 5});

  // a training point keeps its training-time label
  for (Eigen::Index i = 0; i < b.points.rows(); i += 17)
    REQUIRE(m.assign(b.points.row(i).transpose()) == m.labels()[i]);

  // the centroid of a fitted cluster gets that cluster's id
  Vector c0 = Vector::Zero(2), c1 = Vector::Zero(2);
  long n0 = 0, n1 = 0;
  for (Eigen::Index i = 0; i < b.points.rows(); ++i) {
    if (m.labels()[i] == m.labels()[0]) {
      c0 += b.points.row(i).transpose();
      ++n0;
    } else if (m.labels()[i] >= 0) {
      c1 += b.points.row(i).transpose();
      ++n1;
    }
  }
  REQUIRE(m.assign(c0 / n0) == m.labels()[0]);
  REQUIRE(m.assign(c1 / n1) >= 0);
  REQUIRE(m.assign(c1 / n1) != m.labels()[0]);

  // a point 50 sigma from everything is noise
  REQUIRE(m.assign(vec2(10.0, 50.0)) == -1);
  REQUIRE(m.assign(vec2(-50.0, -50.0)) == -1);

  Vector wrong(3);
  REQUIRE_THROWS_AS(m.assign(wrong), ModelError);
}

TEST_CASE("identical points collapse to a single cluster without error", "[hdbscan]") {
  Matrix x = Matrix::Constant(40, 3, 1.5);
  ClusterModel m = fit_clusters(x, {.min_cluster_size = 10, .min_samples = 5});
  REQUIRE(m.cluster_count() == 1);
  for (int l : m.labels()) REQUIRE(l == 0);
  Vector same = Vector::Constant(3, 1.5);
  REQUIRE(m.assign(same) == 0);
}

TEST_CASE("refitting the same data reproduces the partition", "[hdbscan]") {
  Blobs b = make_blobs({{vec2(0, 0), 1.2}, {vec2(14, 3), 0.9}, {vec2(-5, 18), 1.1}}, 80, 45);
  ClusterModel m1 = fit_clusters(b.points, {.min_cluster_size = 15, .min_samples = 5});
  ClusterModel m2 = fit_clusters(b.points, {.min_cluster_size = 15, .min_samples = 5});
  REQUIRE(adjusted_rand_index(m1.labels(), m2.labels()) == 1.0);
  REQUIRE(m1.labels() == m2.labels());
}

TEST_CASE("preconditions are enforced", "[hdbscan]") {
  Matrix tiny = Matrix::Random(5, 2);
  REQUIRE_THROWS_AS(fit_clusters(tiny, {.min_cluster_size = 10, .min_samples = 3}), DataError);
  ClusterModel unfitted;
  REQUIRE_THROWS_AS(unfitted.assign(Vector::Zero(2)), ModelError);
}

TEST_CASE("auto min_cluster_size follows max(15, 0.5%)", "[hdbscan]") {
  Blobs b = make_blobs({{vec2(0, 0), 1.0}, {vec2(30, 0), 1.0}}, 60, 46);
  ClusterModel m = fit_clusters(b.points, {.min_cluster_size = 0, .min_samples = 5});
  REQUIRE(m.min_cluster_size == 15);  // 0.5% of 120 is below the floor
  REQUIRE(m.cluster_count() == 2);
}
