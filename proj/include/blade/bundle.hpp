#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "blade/config.hpp"
#include "blade/ecdf.hpp"
#include "blade/latent.hpp"
#include "blade/ocsvm.hpp"

namespace blade {

inline constexpr int kBundleVersion = 1;

// All fitted state of one training run. Loading a bundle reproduces
// bit-identical verdicts: float arrays are persisted as raw little-endian
// bytes and the manifest hash covers every artifact.
class ModelBundle {
 public:
  PipelineConfig config;
  std::optional<FlowAutoencoder> flow_ae;
  LatentTransform transform;
  ClusterModel clusters;
  std::vector<ChannelECDF> ecdfs;
  std::optional<FlowAutoencoder> extractor;
  OneClassBoundary boundary;
  BehaviorNormalization behavior_norm;

  bool complete() const {
    return flow_ae && flow_ae->fitted() && clusters.fitted() && !ecdfs.empty() && extractor &&
           extractor->fitted() && boundary.fitted();
  }

  void require_complete() const {
    if (!flow_ae || !flow_ae->fitted()) throw ModelError("bundle: flow autoencoder is not fitted");
    if (transform.input_dim() == 0) throw ModelError("bundle: latent transform is not fitted");
    if (!clusters.fitted()) throw ModelError("bundle: cluster model is not fitted");
    if (ecdfs.empty()) throw ModelError("bundle: ECDF tables are not fitted");
    if (!extractor || !extractor->fitted()) throw ModelError("bundle: behavior extractor is not fitted");
    if (!boundary.fitted()) throw ModelError("bundle: one-class boundary is not fitted");
  }

  // --- inference composition ---------------------------------------------

  // encode -> decode -> Eq. 5 -> Eqs. 10-12 for one flow.
  FlowAnomalyScore score_flow(const FeatureSequence& f) const {
    if (!flow_ae || !flow_ae->fitted()) throw ModelError("bundle: flow autoencoder is not fitted");
    if (f.channels() != flow_ae->channels())
      throw ModelError("score_flow: channel count mismatch");
    return score_channels(flow_ae->analyze(f.matrix).channel_losses, ecdfs);
  }

  // Per-flow evidence for one window: latent -> whiten -> pseudo label,
  // losses -> calibrated scores.
  std::vector<FlowEvidence> flow_evidence(const MultiFlowSample& window) const {
    require_complete();
    std::vector<FlowEvidence> out(window.flows.size());
    for (std::size_t i = 0; i < window.flows.size(); ++i) {
      const auto& flow = window.flows[i];
      auto analysis = flow_ae->analyze(flow.matrix);
      auto score = score_channels(analysis.channel_losses, ecdfs);
      FlowEvidence ev;
      ev.tau = flow.timestamp;
      ev.alpha = score.aggregate;
      ev.raw_loss_mean = analysis.channel_losses.mean();
      ev.op = clusters.assign(transform.apply(analysis.latent));
      out[i] = ev;
    }
    return out;
  }

  // Eq. 15 composition over one window.
  DetectionResult detect(const MultiFlowSample& window) const {
    require_complete();
    DetectionResult r;
    r.user_key = window.user_key;
    r.flows = flow_evidence(window);
    Matrix s = assemble_behavior_sample(r.flows, behavior_norm);
    Vector x = extractor->encode(s);
    r.decision_value = boundary.decision(x);
    r.anomalous = r.decision_value < 0.0;
    r.truth = window.is_benign() ? "benign" : window.attack_name();
    return r;
  }

  // --- persistence ---------------------------------------------------------

  Json to_json() const;
  static ModelBundle from_json(const Json& j);
  void save(const std::string& path) const;
  static ModelBundle load(const std::string& path);
};

namespace detail {

inline Json matrix_blob(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"f64", encode_f64(m.data(), m.size())}};
}

inline Matrix matrix_from_blob(const Json& j) {
  auto data = decode_f64(j.at("f64").get<std::string>());
  Eigen::Index rows = j.at("rows").get<Eigen::Index>(), cols = j.at("cols").get<Eigen::Index>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw DataError("matrix blob: size mismatch");
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

inline Json vector_blob(const Vector& v) {
  return {{"n", v.size()}, {"f64", encode_f64(v.data(), v.size())}};
}

inline Vector vector_from_blob(const Json& j) {
  auto data = decode_f64(j.at("f64").get<std::string>());
  if (static_cast<Eigen::Index>(data.size()) != j.at("n").get<Eigen::Index>())
    throw DataError("vector blob: size mismatch");
  return Eigen::Map<const Vector>(data.data(), static_cast<Eigen::Index>(data.size()));
}

inline Json autoencoder_json(const FlowAutoencoder& ae) {
  Json j;
  j["channels"] = ae.channels();
  j["length"] = ae.length();
  j["config"] = encoder_json(ae.config());
  j["training_seed"] = ae.config().training.seed;
  j["weights"] = encode_f64(ae.weights().data(), ae.weights().size());
  j["norm_mean"] = vector_blob(ae.channel_mean());
  j["norm_std"] = vector_blob(ae.channel_std());
  return j;
}

inline FlowAutoencoder autoencoder_from_json(const Json& j) {
  EncoderConfig cfg;
  read_encoder(j.at("config"), cfg);
  cfg.training.seed = j.at("training_seed").get<std::uint64_t>();
  FlowAutoencoder ae(j.at("channels").get<int>(), j.at("length").get<int>(), cfg);
  ae.restore(decode_f64(j.at("weights").get<std::string>()), vector_from_blob(j.at("norm_mean")),
             vector_from_blob(j.at("norm_std")));
  return ae;
}

}  // namespace detail

inline Json ModelBundle::to_json() const {
  require_complete();
  Json j;
  j["format"] = "blade-bundle";
  j["version"] = kBundleVersion;
  j["manifest"] = {{"seed", config.seed},
                   {"prng", Rng::algorithm()},
                   {"log_base", "natural"},
                   {"config", pipeline_config_to_json(config)}};
  j["flow_autoencoder"] = detail::autoencoder_json(*flow_ae);
  j["latent_transform"] = {{"variance_mask", transform.variance_mask},
                           {"mean", detail::vector_blob(transform.mean)},
                           {"components", detail::matrix_blob(transform.components)},
                           {"scales", detail::vector_blob(transform.scales)},
                           {"variance_threshold", transform.variance_threshold},
                           {"variance_target", transform.variance_target},
                           {"explained_variance", transform.explained_variance}};
  Json cl;
  cl["points"] = detail::matrix_blob(clusters.points);
  cl["labels"] = clusters.labels_;
  cl["core_dist"] = encode_f64(clusters.core_dist.data(), clusters.core_dist.size());
  cl["leave_dist"] = encode_f64(clusters.leave_dist.data(), clusters.leave_dist.size());
  cl["min_samples"] = clusters.min_samples;
  cl["min_cluster_size"] = clusters.min_cluster_size;
  cl["clusters"] = Json::array();
  for (const auto& info : clusters.clusters)
    cl["clusters"].push_back({{"id", info.id},
                              {"birth_distance", info.birth_distance},
                              {"stability", info.stability},
                              {"size", info.size}});
  j["cluster_model"] = cl;
  Json ec;
  ec["epsilon"] = ecdfs.front().epsilon;
  ec["delta"] = ecdfs.front().delta;
  ec["channels"] = Json::array();
  for (const auto& e : ecdfs)
    ec["channels"].push_back(encode_f64(e.sorted_log_losses.data(), e.sorted_log_losses.size()));
  j["ecdf"] = ec;
  j["extractor"] = detail::autoencoder_json(*extractor);
  j["boundary"] = {{"nu", boundary.nu},
                   {"gamma", boundary.gamma},
                   {"rho", boundary.rho},
                   {"support_vectors", detail::matrix_blob(boundary.support_vectors)},
                   {"coefficients", detail::vector_blob(boundary.coefficients)}};
  j["behavior_norm"] = {{"median_gap", behavior_norm.median_gap},
                        {"score_scale", behavior_norm.score_scale},
                        {"cluster_count", behavior_norm.cluster_count},
                        {"ablation", static_cast<int>(behavior_norm.ablation)}};
  j["manifest"]["hash"] = "";
  std::string canonical = j.dump();
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical)));
  j["manifest"]["hash"] = buf;
  return j;
}

inline ModelBundle ModelBundle::from_json(const Json& j) {
  if (!j.contains("format") || j.at("format") != "blade-bundle")
    throw ModelError("not a blade bundle");
  if (j.at("version").get<int>() != kBundleVersion) throw ModelError("unsupported bundle version");

  // integrity: hash must match the canonical dump with an empty hash field
  Json copy = j;
  std::string stored = copy.at("manifest").at("hash").get<std::string>();
  copy["manifest"]["hash"] = "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(copy.dump())));
  if (stored != buf) throw ModelError("bundle manifest hash mismatch; file is corrupt or edited");

  ModelBundle b;
  b.config = pipeline_config_from_json(j.at("manifest").at("config"));
  b.flow_ae = detail::autoencoder_from_json(j.at("flow_autoencoder"));
  const Json& lt = j.at("latent_transform");
  b.transform.variance_mask = lt.at("variance_mask").get<std::vector<int>>();
  b.transform.mean = detail::vector_from_blob(lt.at("mean"));
  b.transform.components = detail::matrix_from_blob(lt.at("components"));
  b.transform.scales = detail::vector_from_blob(lt.at("scales"));
  b.transform.variance_threshold = lt.at("variance_threshold").get<double>();
  b.transform.variance_target = lt.at("variance_target").get<double>();
  b.transform.explained_variance = lt.at("explained_variance").get<double>();
  const Json& cl = j.at("cluster_model");
  b.clusters.points = detail::matrix_from_blob(cl.at("points"));
  b.clusters.labels_ = cl.at("labels").get<std::vector<int>>();
  b.clusters.core_dist = decode_f64(cl.at("core_dist").get<std::string>());
  b.clusters.leave_dist = decode_f64(cl.at("leave_dist").get<std::string>());
  b.clusters.min_samples = cl.at("min_samples").get<int>();
  b.clusters.min_cluster_size = cl.at("min_cluster_size").get<int>();
  for (const auto& info : cl.at("clusters")) {
    ClusterModel::ClusterInfo ci;
    ci.id = info.at("id").get<int>();
    ci.birth_distance = info.at("birth_distance").get<double>();
    ci.stability = info.at("stability").get<double>();
    ci.size = info.at("size").get<int>();
    b.clusters.clusters.push_back(ci);
  }
  const Json& ec = j.at("ecdf");
  for (const auto& blob : ec.at("channels")) {
    ChannelECDF e;
    e.epsilon = ec.at("epsilon").get<double>();
    e.delta = ec.at("delta").get<double>();
    e.sorted_log_losses = decode_f64(blob.get<std::string>());
    b.ecdfs.push_back(std::move(e));
  }
  b.extractor = detail::autoencoder_from_json(j.at("extractor"));
  const Json& bd = j.at("boundary");
  b.boundary.nu = bd.at("nu").get<double>();
  b.boundary.gamma = bd.at("gamma").get<double>();
  b.boundary.rho = bd.at("rho").get<double>();
  b.boundary.support_vectors = detail::matrix_from_blob(bd.at("support_vectors"));
  b.boundary.coefficients = detail::vector_from_blob(bd.at("coefficients"));
  const Json& bn = j.at("behavior_norm");
  b.behavior_norm.median_gap = bn.at("median_gap").get<double>();
  b.behavior_norm.score_scale = bn.at("score_scale").get<double>();
  b.behavior_norm.cluster_count = bn.at("cluster_count").get<int>();
  b.behavior_norm.ablation = ablation_from_int(bn.at("ablation").get<int>());
  return b;
}

inline void ModelBundle::save(const std::string& path) const {
  // write-then-rename so partial bundles are never left behind
  std::string tmp = path + ".tmp";
  write_json_file(tmp, to_json(), /*indent=*/-1);
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("cannot move bundle into place at '" + path + "'");
}

inline ModelBundle ModelBundle::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open bundle '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ModelError("bundle parse error: " + std::string(e.what()));
  }
  return from_json(j);
}

}  // namespace blade
