#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "blade/core.hpp"

namespace blade {

// Ablation switches (Table IV variants). Variant 1 feeds raw per-flow loss
// means instead of calibrated scores; 2 drops the label row; 3 drops the
// score row.
enum class Ablation : int {
  kFull = 0,
  kRawLosses = 1,
  kNoLabels = 2,
  kNoScores = 3,
};

inline Ablation ablation_from_int(int v) {
  if (v < 0 || v > 3) throw UsageError("unknown ablation variant " + std::to_string(v));
  return static_cast<Ablation>(v);
}

// Fitted preprocessing state for Eq. 13 rows: gaps are scaled by the training
// median gap, scores by -log(delta), labels by (O+1)/(K+1) with noise at 0.
struct BehaviorNormalization {
  double median_gap = 1.0;
  double score_scale = 18.420680743952367;  // -log(1e-8)
  int cluster_count = 0;                    // K
  Ablation ablation = Ablation::kFull;

  double encode_label(int op) const {
    return static_cast<double>(op + 1) / static_cast<double>(cluster_count + 1);
  }
};

// Per-flow evidence entering a behavior sample; also what detection reports
// back per flow.
struct FlowEvidence {
  double tau = 0;            // first-seen timestamp
  double alpha = 0;          // calibrated aggregate anomaly score
  double raw_loss_mean = 0;  // mean over channels of raw Eq. 5 losses
  int op = -1;               // pseudo operation label
};

// Eq. 13: rows are (relative gaps, scores, encoded labels). Row 0 holds
// Delta-tau gaps (first entry 0) divided by the training median gap; row 1 is
// alpha / (-log delta) clamped to [0, 1.5] (or the raw loss mean under
// variant 1); row 2 is the encoded pseudo label. Variants 2/3 drop a row.
inline Matrix assemble_behavior_sample(const std::vector<FlowEvidence>& flows,
                                       const BehaviorNormalization& norm) {
  const Eigen::Index w = static_cast<Eigen::Index>(flows.size());
  if (w < 1) throw ModelError("behavior sample needs at least one flow");

  RowVector gaps(w);
  gaps(0) = 0.0;
  const double gap_scale = norm.median_gap > 0.0 ? norm.median_gap : 1.0;
  for (Eigen::Index i = 1; i < w; ++i) gaps(i) = (flows[i].tau - flows[i - 1].tau) / gap_scale;

  RowVector scores(w), labels(w);
  for (Eigen::Index i = 0; i < w; ++i) {
    if (norm.ablation == Ablation::kRawLosses)
      scores(i) = flows[i].raw_loss_mean;
    else
      scores(i) = std::clamp(flows[i].alpha / norm.score_scale, 0.0, 1.5);
    labels(i) = norm.encode_label(flows[i].op);
  }

  switch (norm.ablation) {
    case Ablation::kNoLabels: {
      Matrix s(2, w);
      s.row(0) = gaps;
      s.row(1) = scores;
      return s;
    }
    case Ablation::kNoScores: {
      Matrix s(2, w);
      s.row(0) = gaps;
      s.row(1) = labels;
      return s;
    }
    default: {
      Matrix s(3, w);
      s.row(0) = gaps;
      s.row(1) = scores;
      s.row(2) = labels;
      return s;
    }
  }
}

inline int behavior_channels(Ablation a) {
  return (a == Ablation::kNoLabels || a == Ablation::kNoScores) ? 2 : 3;
}

struct DetectionResult {
  std::string user_key;
  int window_index = 0;
  bool anomalous = false;
  double decision_value = 0.0;
  std::vector<FlowEvidence> flows;
  std::string truth;  // evaluation label carried through ("benign" or attack name)
};

}  // namespace blade
