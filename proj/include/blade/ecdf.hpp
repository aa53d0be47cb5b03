#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "blade/core.hpp"

namespace blade {

// Eq. 9: per-channel empirical CDF over log-transformed training losses.
// Evaluation is the right-closed count fraction (the <= in the indicator);
// the step function is used verbatim, no interpolation. p has resolution
// 1/|L^n| by construction.
struct ChannelECDF {
  std::vector<double> sorted_log_losses;
  double epsilon = 1e-8;
  double delta = 1e-8;

  static ChannelECDF fit(const std::vector<double>& losses, double epsilon = 1e-8, double delta = 1e-8) {
    if (losses.empty()) throw DataError("ECDF fit: channel has no training losses");
    if (!(epsilon > 0.0) || !(delta > 0.0)) throw ModelError("epsilon and delta must be > 0");
    ChannelECDF e;
    e.epsilon = epsilon;
    e.delta = delta;
    e.sorted_log_losses.reserve(losses.size());
    for (double l : losses) {
      if (!(l >= 0.0) || !std::isfinite(l)) throw DataError("ECDF fit: losses must be finite and >= 0");
      e.sorted_log_losses.push_back(std::log(l + epsilon));
    }
    std::sort(e.sorted_log_losses.begin(), e.sorted_log_losses.end());
    return e;
  }

  // Fraction of training log-losses <= x.
  double evaluate(double x) const {
    auto it = std::upper_bound(sorted_log_losses.begin(), sorted_log_losses.end(), x);
    return static_cast<double>(it - sorted_log_losses.begin()) /
           static_cast<double>(sorted_log_losses.size());
  }

  // Eqs. 10-11: upper-tail probability and anomaly score for a raw loss.
  struct Score {
    double upper_tail;  // p^n
    double score;       // a^n = -log(p^n + delta)
  };

  Score score(double test_loss) const {
    if (!(test_loss >= 0.0)) throw ModelError("channel score: loss must be >= 0");
    double p = 1.0 - evaluate(std::log(test_loss + epsilon));
    return {p, -std::log(p + delta)};
  }
};

// Eq. 12: LogSumExp aggregation with the max-shift trick.
inline double aggregate_score(const Vector& channel_scores) {
  if (channel_scores.size() < 1) throw ModelError("aggregate_score: need at least one channel");
  double m = channel_scores.maxCoeff();
  return m + std::log((channel_scores.array() - m).exp().sum());
}

// Eqs. 10-12 over all channels of one flow.
struct FlowAnomalyScore {
  Vector channel_scores;  // a^n
  Vector upper_tail;      // p^n
  double aggregate = 0;   // alpha
};

inline FlowAnomalyScore score_channels(const Vector& channel_losses, const std::vector<ChannelECDF>& ecdfs) {
  if (channel_losses.size() != static_cast<Eigen::Index>(ecdfs.size()))
    throw ModelError("score_channels: channel count mismatch");
  FlowAnomalyScore s;
  s.channel_scores.resize(channel_losses.size());
  s.upper_tail.resize(channel_losses.size());
  for (Eigen::Index i = 0; i < channel_losses.size(); ++i) {
    auto sc = ecdfs[i].score(channel_losses(i));
    s.upper_tail(i) = sc.upper_tail;
    s.channel_scores(i) = sc.score;
  }
  s.aggregate = aggregate_score(s.channel_scores);
  return s;
}

}  // namespace blade
