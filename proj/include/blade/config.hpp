#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "blade/behavior.hpp"
#include "blade/hdbscan.hpp"
#include "blade/ingest.hpp"
#include "blade/nn/autoencoder.hpp"
#include "blade/synth.hpp"

namespace blade {

using Json = nlohmann::json;

struct LabelerConfig {
  double variance_threshold = 0.01;  // theta
  double variance_target = 0.95;
  HdbscanParams hdbscan;
};

struct ScorerConfig {
  double epsilon = 1e-8;
  double delta = 1e-8;
};

struct BoundaryConfig {
  double nu = 0.05;
  double gamma = 0.0;  // <= 0: 1/d
};

// Everything cmd_train needs; Table I values are the defaults.
struct PipelineConfig {
  std::uint64_t seed = 1;
  IngestConfig data;
  EncoderConfig flow_autoencoder;
  EncoderConfig extractor;
  LabelerConfig labeler;
  ScorerConfig scorer;
  BoundaryConfig boundary;
  Ablation ablation = Ablation::kFull;

  PipelineConfig() {
    flow_autoencoder.training.track_full_loss = false;
    extractor.training.track_full_loss = false;
    extractor.training.epochs = 100;
  }
};

namespace detail {

template <typename T>
void read_field(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void read_training(const Json& j, TrainingConfig& t) {
  read_field(j, "epochs", t.epochs);
  read_field(j, "batch_size", t.batch_size);
  read_field(j, "learning_rate", t.learning_rate);
  read_field(j, "track_full_loss", t.track_full_loss);
}

inline void read_encoder(const Json& j, EncoderConfig& e) {
  read_field(j, "hidden_size", e.hidden_size);
  read_field(j, "latent_dim", e.latent_dim);
  read_field(j, "num_recurrent_layers", e.num_recurrent_layers);
  read_field(j, "attention_heads", e.attention_heads);
  read_field(j, "attention_dim", e.attention_dim);
  if (j.contains("training")) read_training(j.at("training"), e.training);
}

inline Json training_json(const TrainingConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"track_full_loss", t.track_full_loss}};
}

inline Json encoder_json(const EncoderConfig& e) {
  return {{"hidden_size", e.hidden_size},
          {"latent_dim", e.latent_dim},
          {"num_recurrent_layers", e.num_recurrent_layers},
          {"attention_heads", e.attention_heads},
          {"attention_dim", e.attention_dim},
          {"training", training_json(e.training)}};
}

}  // namespace detail

inline PipelineConfig pipeline_config_from_json(const Json& j) {
  PipelineConfig c;
  detail::read_field(j, "seed", c.seed);
  if (j.contains("data")) {
    const Json& d = j.at("data");
    detail::read_field(d, "L", c.data.feature_length);
    detail::read_field(d, "W", c.data.window_size);
    detail::read_field(d, "grouping", c.data.grouping);
    if (d.contains("split")) {
      detail::read_field(d.at("split"), "enabled", c.data.split_enabled);
      detail::read_field(d.at("split"), "ratio", c.data.split_ratio);
    }
  }
  if (j.contains("flow_autoencoder")) detail::read_encoder(j.at("flow_autoencoder"), c.flow_autoencoder);
  if (j.contains("pseudo_labeler")) {
    const Json& p = j.at("pseudo_labeler");
    detail::read_field(p, "variance_threshold", c.labeler.variance_threshold);
    detail::read_field(p, "variance_target", c.labeler.variance_target);
    detail::read_field(p, "min_cluster_size", c.labeler.hdbscan.min_cluster_size);
    detail::read_field(p, "min_samples", c.labeler.hdbscan.min_samples);
  }
  if (j.contains("anomaly_scorer")) {
    detail::read_field(j.at("anomaly_scorer"), "epsilon", c.scorer.epsilon);
    detail::read_field(j.at("anomaly_scorer"), "delta", c.scorer.delta);
  }
  if (j.contains("behavior_detector")) {
    const Json& b = j.at("behavior_detector");
    if (b.contains("extractor")) detail::read_encoder(b.at("extractor"), c.extractor);
    detail::read_field(b, "nu", c.boundary.nu);
    detail::read_field(b, "gamma", c.boundary.gamma);
    int variant = static_cast<int>(c.ablation);
    detail::read_field(b, "ablation", variant);
    c.ablation = ablation_from_int(variant);
  }
  return c;
}

inline Json pipeline_config_to_json(const PipelineConfig& c) {
  return {{"seed", c.seed},
          {"data",
           {{"L", c.data.feature_length},
            {"W", c.data.window_size},
            {"grouping", c.data.grouping},
            {"split", {{"enabled", c.data.split_enabled}, {"ratio", c.data.split_ratio}}}}},
          {"flow_autoencoder", detail::encoder_json(c.flow_autoencoder)},
          {"pseudo_labeler",
           {{"variance_threshold", c.labeler.variance_threshold},
            {"variance_target", c.labeler.variance_target},
            {"min_cluster_size", c.labeler.hdbscan.min_cluster_size},
            {"min_samples", c.labeler.hdbscan.min_samples}}},
          {"anomaly_scorer", {{"epsilon", c.scorer.epsilon}, {"delta", c.scorer.delta}}},
          {"behavior_detector",
           {{"extractor", detail::encoder_json(c.extractor)},
            {"nu", c.boundary.nu},
            {"gamma", c.boundary.gamma},
            {"ablation", static_cast<int>(c.ablation)}}}};
}

inline ScenarioConfig scenario_config_from_json(const Json& j) {
  ScenarioConfig c;
  detail::read_field(j, "seed", c.seed);
  detail::read_field(j, "num_operations", c.num_operations);
  detail::read_field(j, "users", c.users);
  detail::read_field(j, "flows_per_user", c.flows_per_user);
  detail::read_field(j, "attack_flow_ratio", c.attack_flow_ratio);
  detail::read_field(j, "flows_per_attacker", c.flows_per_attacker);
  if (j.contains("attack_mix")) {
    c.attack_mix.clear();
    for (auto& [name, frac] : j.at("attack_mix").items()) c.attack_mix[name] = frac.get<double>();
  }
  if (j.contains("session_transition"))
    c.session_transition = j.at("session_transition").get<std::vector<std::vector<double>>>();
  c.validate();
  return c;
}

inline Json scenario_config_to_json(const ScenarioConfig& c) {
  Json mix = Json::object();
  for (const auto& [name, frac] : c.attack_mix) mix[name] = frac;
  Json j = {{"seed", c.seed},
            {"num_operations", c.num_operations},
            {"users", c.users},
            {"flows_per_user", c.flows_per_user},
            {"attack_flow_ratio", c.attack_flow_ratio},
            {"flows_per_attacker", c.flows_per_attacker},
            {"attack_mix", mix}};
  if (!c.session_transition.empty()) j["session_transition"] = c.session_transition;
  return j;
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError("config parse error in '" + path + "': " + e.what());
  }
}

inline void write_json_file(const std::string& path, const Json& j, int indent = 2) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file '" + path + "'");
  out << j.dump(indent) << '\n';
}

}  // namespace blade
