#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "blade/core.hpp"

namespace blade {

// Evaluation-only labels. "benign" or "attack:<vector-name>"; labels never
// feed any fitted state.
struct Label {
  std::string text = "benign";

  bool is_benign() const { return text == "benign"; }
  std::string attack_name() const {
    if (is_benign()) return {};
    return text.substr(std::string("attack:").size());
  }
  static Label benign() { return {}; }
  static Label attack(const std::string& name) { return {"attack:" + name}; }
  static Label parse(const std::string& s) {
    if (s == "benign") return benign();
    if (s.rfind("attack:", 0) == 0 && s.size() > 7) return {s};
    throw DataError("label must be 'benign' or 'attack:<name>', got '" + s + "'");
  }
  bool operator==(const Label& o) const { return text == o.text; }
};

// One TCP connection's packet-level attribute lists. The three lists are
// index-aligned per packet; inter_arrival[0] is 0 by definition.
struct FlowRecord {
  std::string user_key;
  double first_seen = 0.0;
  std::vector<double> packet_sizes;
  std::vector<double> inter_arrival;
  std::vector<double> tcp_flags;
  Label label;

  std::size_t packet_count() const { return packet_sizes.size(); }

  void validate() const {
    if (packet_sizes.empty()) throw DataError("flow has no packets");
    if (packet_sizes.size() != inter_arrival.size() || packet_sizes.size() != tcp_flags.size())
      throw DataError("attribute lists have unequal lengths");
    if (!(first_seen >= 0.0) || !std::isfinite(first_seen))
      throw DataError("first_seen must be finite and non-negative");
    if (inter_arrival[0] != 0.0) throw DataError("inter_arrival[0] must be 0");
    for (double v : inter_arrival)
      if (!(v >= 0.0)) throw DataError("inter-arrival values must be >= 0");
  }
};

// N x L feature matrix for one flow; row n is one attribute channel,
// truncated/zero-padded to L packets.
struct FeatureSequence {
  Matrix matrix;  // N x L
  double timestamp = 0.0;
  std::string user_key;
  Label label;

  Eigen::Index channels() const { return matrix.rows(); }
  Eigen::Index length() const { return matrix.cols(); }
};

// W timestamp-ordered flows of one user; the detection unit.
struct MultiFlowSample {
  std::vector<FeatureSequence> flows;
  std::vector<double> timestamps;
  std::string user_key;

  std::size_t window_size() const { return flows.size(); }

  bool is_benign() const {
    for (const auto& f : flows)
      if (!f.label.is_benign()) return false;
    return true;
  }

  // Most frequent attack label in the window ("" when benign); used for
  // per-vector evaluation only.
  std::string attack_name() const;
};

inline std::string MultiFlowSample::attack_name() const {
  std::vector<std::pair<std::string, int>> counts;
  for (const auto& f : flows) {
    if (f.label.is_benign()) continue;
    std::string name = f.label.attack_name();
    bool found = false;
    for (auto& [n, c] : counts)
      if (n == name) {
        ++c;
        found = true;
      }
    if (!found) counts.emplace_back(name, 1);
  }
  std::string best;
  int best_count = 0;
  for (const auto& [n, c] : counts)
    if (c > best_count) {
      best = n;
      best_count = c;
    }
  return best;
}

// All-benign training samples (Eq. 3 precondition is enforced at build time).
struct TrainingDataset {
  std::vector<MultiFlowSample> samples;

  static TrainingDataset from(std::vector<MultiFlowSample> v) {
    if (v.empty()) throw DataError("training dataset is empty");
    for (const auto& s : v)
      if (!s.is_benign())
        throw DataError("training dataset contains an attack-labeled sample (user " + s.user_key + ")");
    return TrainingDataset{std::move(v)};
  }
};

}  // namespace blade
