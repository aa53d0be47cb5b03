#pragma once

#include <map>
#include <string>
#include <vector>

#include "blade/bundle.hpp"
#include "blade/metrics.hpp"

namespace blade {

struct TrainReports {
  std::vector<double> flow_curve;       // Eq. 6 loss per epoch
  std::vector<double> extractor_curve;  // extractor loss per epoch
  Json cluster_summary;
};

struct TrainOutput {
  ModelBundle bundle;
  TrainReports reports;
};

namespace detail {

inline std::vector<FeatureSequence> featurize(const std::vector<FlowRecord>& records, const IngestConfig& cfg) {
  std::vector<FeatureSequence> features;
  features.reserve(records.size());
  for (const auto& r : records) features.push_back(build_feature_sequence(r, cfg.feature_length));
  return features;
}

inline double median_training_gap(const TrainingDataset& train) {
  std::vector<double> gaps;
  for (const auto& s : train.samples)
    for (std::size_t i = 1; i < s.timestamps.size(); ++i) gaps.push_back(s.timestamps[i] - s.timestamps[i - 1]);
  if (gaps.empty()) return 1.0;
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  double m = gaps[gaps.size() / 2];
  return m > 0.0 ? m : 1.0;
}

}  // namespace detail

// Fig. 1 composition: ingestion -> flow AE -> latent transform + clustering
// -> ECDF calibration -> behavior extractor -> one-class boundary.
inline TrainOutput train_pipeline(const std::vector<FlowRecord>& records, const PipelineConfig& cfg) {
  auto windows = extract_multiflow_samples(detail::featurize(records, cfg.data), cfg.data.window_size,
                                           cfg.data.grouping);
  if (windows.empty()) throw DataError("no complete windows in training data");
  TrainingDataset train = cfg.data.split_enabled
                              ? split_train_test(std::move(windows), cfg.data.split_ratio, cfg.seed).train
                              : TrainingDataset::from(std::move(windows));

  TrainOutput out;
  ModelBundle& bundle = out.bundle;
  bundle.config = cfg;

  // flow autoencoder on every flow inside the training windows
  std::vector<const Matrix*> flow_ptrs;
  for (const auto& s : train.samples)
    for (const auto& f : s.flows) flow_ptrs.push_back(&f.matrix);
  EncoderConfig flow_cfg = cfg.flow_autoencoder;
  flow_cfg.training.seed = derive_seed(cfg.seed, 1);
  bundle.flow_ae.emplace(3, cfg.data.feature_length, flow_cfg);
  out.reports.flow_curve = bundle.flow_ae->train(flow_ptrs);

  // latents + per-channel training losses in one pass
  const std::size_t n_flows = flow_ptrs.size();
  Matrix latents(n_flows, flow_cfg.latent_dim);
  Matrix losses(n_flows, 3);
  parallel_for(n_flows, [&](std::size_t i) {
    auto a = bundle.flow_ae->analyze(*flow_ptrs[i]);
    latents.row(i) = a.latent.transpose();
    losses.row(i) = a.channel_losses.transpose();
  });

  bundle.transform = fit_transform_params(latents, cfg.labeler.variance_threshold, cfg.labeler.variance_target);
  bundle.clusters = fit_clusters(bundle.transform.apply_rows(latents), cfg.labeler.hdbscan);

  std::vector<ChannelECDF> ecdfs;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> channel(losses.col(c).data(), losses.col(c).data() + n_flows);
    ecdfs.push_back(ChannelECDF::fit(channel, cfg.scorer.epsilon, cfg.scorer.delta));
  }
  bundle.ecdfs = std::move(ecdfs);

  bundle.behavior_norm.median_gap = detail::median_training_gap(train);
  bundle.behavior_norm.score_scale = -std::log(cfg.scorer.delta);
  bundle.behavior_norm.cluster_count = bundle.clusters.cluster_count();
  bundle.behavior_norm.ablation = cfg.ablation;

  // behavior samples from training windows, using fit-time pseudo labels
  std::vector<Matrix> behavior_samples;
  behavior_samples.reserve(train.samples.size());
  std::size_t flow_index = 0;
  for (const auto& s : train.samples) {
    std::vector<FlowEvidence> evidence(s.flows.size());
    for (std::size_t i = 0; i < s.flows.size(); ++i, ++flow_index) {
      FlowEvidence ev;
      ev.tau = s.timestamps[i];
      auto score = score_channels(losses.row(flow_index).transpose(), bundle.ecdfs);
      ev.alpha = score.aggregate;
      ev.raw_loss_mean = losses.row(flow_index).mean();
      ev.op = bundle.clusters.labels()[flow_index];
      evidence[i] = ev;
    }
    behavior_samples.push_back(assemble_behavior_sample(evidence, bundle.behavior_norm));
  }

  EncoderConfig ex_cfg = cfg.extractor;
  ex_cfg.training.seed = derive_seed(cfg.seed, 2);
  bundle.extractor.emplace(behavior_channels(cfg.ablation), cfg.data.window_size, ex_cfg);
  std::vector<const Matrix*> behavior_ptrs;
  for (const auto& m : behavior_samples) behavior_ptrs.push_back(&m);
  out.reports.extractor_curve = bundle.extractor->train(behavior_ptrs);

  Matrix reps(behavior_samples.size(), ex_cfg.latent_dim);
  parallel_for(behavior_samples.size(),
               [&](std::size_t i) { reps.row(i) = bundle.extractor->encode(behavior_samples[i]).transpose(); });
  bundle.boundary = fit_boundary(reps, cfg.boundary.nu, cfg.boundary.gamma);

  Json summary;
  summary["cluster_count"] = bundle.clusters.cluster_count();
  summary["noise_rate"] = bundle.clusters.noise_rate();
  summary["clusters"] = Json::array();
  for (const auto& info : bundle.clusters.clusters)
    summary["clusters"].push_back(
        {{"id", info.id}, {"size", info.size}, {"stability", info.stability}, {"birth_distance", info.birth_distance}});
  summary["explained_variance"] = bundle.transform.explained_variance;
  summary["kept_dims"] = bundle.transform.kept_dims();
  summary["whitened_dims"] = bundle.transform.output_dim();
  out.reports.cluster_summary = summary;
  return out;
}

struct DetectOutput {
  std::vector<DetectionResult> results;
  std::size_t total_flows = 0;
  std::size_t skipped_flows = 0;  // trailing remainders below one window
};

// One result per complete window in the data; incomplete trailing windows are
// skipped and counted.
inline DetectOutput detect_all(const ModelBundle& bundle, const std::vector<FlowRecord>& records) {
  bundle.require_complete();
  const IngestConfig& cfg = bundle.config.data;
  if (bundle.flow_ae->length() != cfg.feature_length)
    throw ModelError("bundle/config mismatch: feature length");
  auto windows = extract_multiflow_samples(detail::featurize(records, cfg), cfg.window_size, cfg.grouping);
  DetectOutput out;
  out.total_flows = records.size();
  out.skipped_flows = records.size() - windows.size() * static_cast<std::size_t>(cfg.window_size);
  out.results.resize(windows.size());
  parallel_for(windows.size(), [&](std::size_t i) { out.results[i] = bundle.detect(windows[i]); });
  std::map<std::string, int> per_user;
  for (auto& r : out.results) r.window_index = per_user[r.user_key]++;
  return out;
}

struct EvalReport {
  ConfusionCounts overall;
  std::map<std::string, ConfusionCounts> per_attack;
  bool clustering_valid = false;
  double silhouette = 0.0;
  double calinski_harabasz = 0.0;
  double davies_bouldin = 0.0;
  std::size_t test_windows = 0;

  Json to_json() const {
    auto row = [](const ConfusionCounts& c) {
      return Json{{"precision", c.precision()}, {"recall", c.recall()}, {"f1", c.f1()},
                  {"tp", c.tp},                 {"fp", c.fp},           {"fn", c.fn},
                  {"tn", c.tn}};
    };
    Json j;
    j["average"] = row(overall);
    j["per_attack"] = Json::object();
    for (const auto& [name, counts] : per_attack) j["per_attack"][name] = row(counts);
    j["test_windows"] = test_windows;
    if (clustering_valid)
      j["clustering"] = {{"silhouette", silhouette},
                         {"calinski_harabasz", calinski_harabasz},
                         {"davies_bouldin", davies_bouldin}};
    else
      j["clustering"] = nullptr;
    return j;
  }
};

// Metrics over labeled detection results. Per-attack metrics are computed on
// (that attack's windows ∪ all benign windows); the average row pools all
// attacks into one positive class.
inline EvalReport evaluate_results(const std::vector<DetectionResult>& results) {
  if (results.empty()) throw DataError("evaluation needs a non-empty test set");
  EvalReport rep;
  rep.test_windows = results.size();
  for (const auto& r : results) {
    bool truth_attack = r.truth != "benign";
    if (truth_attack)
      (r.anomalous ? rep.overall.tp : rep.overall.fn)++;
    else
      (r.anomalous ? rep.overall.fp : rep.overall.tn)++;
    if (truth_attack) {
      auto& c = rep.per_attack[r.truth];
      (r.anomalous ? c.tp : c.fn)++;
    }
  }
  for (auto& [name, counts] : rep.per_attack) {
    counts.fp = rep.overall.fp;
    counts.tn = rep.overall.tn;
  }
  return rep;
}

// The evaluation protocol: re-derives the training split from the bundle's
// manifest (seed + ratio) so the held-out partition is exactly the training
// run's complement, detects every test window, and adds the clustering
// indices computed on the stored benign training latents.
inline EvalReport evaluate_bundle(const ModelBundle& bundle, const std::vector<FlowRecord>& records,
                                  std::vector<DetectionResult>* results_out = nullptr) {
  bundle.require_complete();
  const IngestConfig& cfg = bundle.config.data;
  auto windows = extract_multiflow_samples(detail::featurize(records, cfg), cfg.window_size, cfg.grouping);
  std::vector<MultiFlowSample> test;
  if (cfg.split_enabled)
    test = split_train_test(std::move(windows), cfg.split_ratio, bundle.config.seed).test;
  else
    test = std::move(windows);
  if (test.empty()) throw DataError("evaluation test set is empty");

  std::vector<DetectionResult> results(test.size());
  parallel_for(test.size(), [&](std::size_t i) { results[i] = bundle.detect(test[i]); });
  std::map<std::string, int> per_user;
  for (auto& r : results) r.window_index = per_user[r.user_key]++;

  EvalReport rep = evaluate_results(results);
  if (bundle.clusters.cluster_count() >= 2) {
    rep.clustering_valid = true;
    rep.silhouette = silhouette_score(bundle.clusters.points, bundle.clusters.labels());
    rep.calinski_harabasz = calinski_harabasz_score(bundle.clusters.points, bundle.clusters.labels());
    rep.davies_bouldin = davies_bouldin_score(bundle.clusters.points, bundle.clusters.labels());
  }
  if (results_out) *results_out = std::move(results);
  return rep;
}

inline Json detection_result_json(const DetectionResult& r) {
  Json flows = Json::array();
  for (const auto& f : r.flows)
    flows.push_back({{"tau", f.tau}, {"alpha", f.alpha}, {"op", f.op}});
  return {{"user_key", r.user_key},
          {"window_index", r.window_index},
          {"verdict", r.anomalous ? "anomalous" : "benign"},
          {"decision_value", r.decision_value},
          {"truth", r.truth},
          {"flows", flows}};
}

}  // namespace blade
