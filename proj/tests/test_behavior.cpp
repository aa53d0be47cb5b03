#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "blade/behavior.hpp"
#include "blade/rng.hpp"

using namespace blade;

namespace {

std::vector<FlowEvidence> window_of(int w, double gap, double alpha, int op) {
  std::vector<FlowEvidence> flows(w);
  for (int i = 0; i < w; ++i) {
    flows[i].tau = 100.0 + gap * i;
    flows[i].alpha = alpha;
    flows[i].raw_loss_mean = 0.5;
    flows[i].op = op;
  }
  return flows;
}

}  // namespace

TEST_CASE("behavior samples are 3 x W with the fixed row order", "[behavior]") {
  BehaviorNormalization norm;
  norm.median_gap = 2.0;
  norm.cluster_count = 6;
  Matrix s = assemble_behavior_sample(window_of(50, 2.0, 9.21, 3), norm);
  REQUIRE(s.rows() == 3);
  REQUIRE(s.cols() == 50);
  REQUIRE(s(0, 0) == 0.0);                                        // gap row starts at 0
  REQUIRE(s(0, 1) == Catch::Approx(1.0));                         // gap / median
  REQUIRE(s(1, 5) == Catch::Approx(9.21 / norm.score_scale));     // alpha scaled
  REQUIRE(s(2, 7) == Catch::Approx(4.0 / 7.0));                   // (3+1)/(6+1)
  for (Eigen::Index i = 0; i < s.size(); ++i) REQUIRE(std::isfinite(s.data()[i]));
}

TEST_CASE("simultaneous flows produce an all-zero gap row", "[behavior]") {
  BehaviorNormalization norm;
  norm.cluster_count = 4;
  auto flows = window_of(20, 0.0, 1.0, 0);
  Matrix s = assemble_behavior_sample(flows, norm);
  REQUIRE(s.row(0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("all-noise labels encode to a zero label row", "[behavior]") {
  BehaviorNormalization norm;
  norm.cluster_count = 6;
  Matrix s = assemble_behavior_sample(window_of(50, 1.0, 2.0, -1), norm);
  REQUIRE(s.row(2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("alpha row is scaled and clamped to [0, 1.5]", "[behavior]") {
  BehaviorNormalization norm;
  norm.cluster_count = 2;
  auto flows = window_of(3, 1.0, 0.0, 0);
  flows[0].alpha = -1e-8;           // lower boundary score
  flows[1].alpha = 18.4207 * 2.0;   // above any possible score
  flows[2].alpha = 9.21;
  Matrix s = assemble_behavior_sample(flows, norm);
  REQUIRE(s(1, 0) == 0.0);
  REQUIRE(s(1, 1) == 1.5);
  REQUIRE(s(1, 2) == Catch::Approx(0.5).margin(1e-4));
}

TEST_CASE("label encoding is injective over (id, K) pairs in one model", "[behavior][property]") {
  for (int k : {1, 3, 6, 11}) {
    BehaviorNormalization norm;
    norm.cluster_count = k;
    std::set<double> values;
    for (int op = -1; op < k; ++op) values.insert(norm.encode_label(op));
    REQUIRE(static_cast<int>(values.size()) == k + 1);
    for (double v : values) {
      REQUIRE(v >= 0.0);
      REQUIRE(v < 1.0);
    }
  }
}

TEST_CASE("ablation variants reshape the sample", "[behavior]") {
  BehaviorNormalization norm;
  norm.cluster_count = 6;
  auto flows = window_of(10, 1.0, 5.0, 2);
  flows[4].raw_loss_mean = 123.0;

  norm.ablation = Ablation::kRawLosses;
  Matrix raw = assemble_behavior_sample(flows, norm);
  REQUIRE(raw.rows() == 3);
  REQUIRE(raw(1, 4) == 123.0);  // raw losses bypass scaling and clamping

  norm.ablation = Ablation::kNoLabels;
  Matrix no_labels = assemble_behavior_sample(flows, norm);
  REQUIRE(no_labels.rows() == 2);
  REQUIRE(no_labels(1, 0) == Catch::Approx(5.0 / norm.score_scale));

  norm.ablation = Ablation::kNoScores;
  Matrix no_scores = assemble_behavior_sample(flows, norm);
  REQUIRE(no_scores.rows() == 2);
  REQUIRE(no_scores(1, 0) == Catch::Approx(3.0 / 7.0));

  REQUIRE(behavior_channels(Ablation::kFull) == 3);
  REQUIRE(behavior_channels(Ablation::kRawLosses) == 3);
  REQUIRE(behavior_channels(Ablation::kNoLabels) == 2);
  REQUIRE(behavior_channels(Ablation::kNoScores) == 2);
  REQUIRE_THROWS_AS(ablation_from_int(4), UsageError);
}

TEST_CASE("empty windows are rejected", "[behavior]") {
  BehaviorNormalization norm;
  REQUIRE_THROWS_AS(assemble_behavior_sample({}, norm), ModelError);
}
