#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "blade/blade.hpp"

using namespace blade;
namespace fs = std::filesystem;

namespace {

// small but complete scenario: 3 benign users, W = 10, L = 20
ScenarioConfig unit_scenario() {
  ScenarioConfig cfg;
  cfg.users = 3;
  cfg.flows_per_user = 80;
  cfg.flows_per_attacker = 40;
  cfg.attack_flow_ratio = 0.5;
  cfg.attack_mix = {{"dos", 0.4}, {"scan", 0.2}, {"harvesting", 0.4}};
  cfg.seed = 71;
  return cfg;
}

PipelineConfig unit_pipeline() {
  PipelineConfig cfg;
  cfg.seed = 72;
  cfg.data.feature_length = 20;
  cfg.data.window_size = 10;
  cfg.data.split_ratio = 0.7;
  cfg.flow_autoencoder.hidden_size = 12;
  cfg.flow_autoencoder.latent_dim = 8;
  cfg.flow_autoencoder.num_recurrent_layers = 1;
  cfg.flow_autoencoder.attention_dim = 8;
  cfg.flow_autoencoder.training.epochs = 6;
  cfg.flow_autoencoder.training.batch_size = 64;
  cfg.flow_autoencoder.training.learning_rate = 3e-3;
  cfg.extractor.hidden_size = 10;
  cfg.extractor.latent_dim = 6;
  cfg.extractor.num_recurrent_layers = 1;
  cfg.extractor.attention_dim = 6;
  cfg.extractor.training.epochs = 20;
  cfg.extractor.training.batch_size = 32;
  cfg.labeler.variance_threshold = 1e-4;
  cfg.labeler.hdbscan.min_cluster_size = 8;
  cfg.labeler.hdbscan.min_samples = 4;
  return cfg;
}

const std::vector<FlowRecord>& unit_records() {
  static std::vector<FlowRecord> records = generate_scenario(unit_scenario()).records;
  return records;
}

const TrainOutput& unit_trained() {
  static TrainOutput out = train_pipeline(unit_records(), unit_pipeline());
  return out;
}

fs::path test_dir() {
  fs::path dir = fs::temp_directory_path() / "blade_unit_tests";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("training produces a complete bundle and reports", "[pipeline]") {
  const TrainOutput& out = unit_trained();
  REQUIRE(out.bundle.complete());
  REQUIRE(out.reports.flow_curve.size() == 6);
  REQUIRE(out.reports.extractor_curve.size() == 20);
  REQUIRE(out.bundle.clusters.cluster_count() >= 1);
  REQUIRE(out.reports.cluster_summary.contains("noise_rate"));
  REQUIRE(out.bundle.behavior_norm.cluster_count == out.bundle.clusters.cluster_count());
  REQUIRE(out.bundle.behavior_norm.median_gap > 0.0);
}

TEST_CASE("training without split requires pure benign data", "[pipeline]") {
  PipelineConfig cfg = unit_pipeline();
  cfg.data.split_enabled = false;
  REQUIRE_THROWS_AS(train_pipeline(unit_records(), cfg), DataError);

  // benign-only input trains fine with the purity guard on
  auto benign = generate_benign(unit_scenario());
  TrainOutput out = train_pipeline(benign.records, cfg);
  REQUIRE(out.bundle.complete());
}

TEST_CASE("detection is deterministic and reports skip counts", "[pipeline]") {
  const TrainOutput& out = unit_trained();
  auto d1 = detect_all(out.bundle, unit_records());
  auto d2 = detect_all(out.bundle, unit_records());
  REQUIRE(d1.results.size() == d2.results.size());
  for (std::size_t i = 0; i < d1.results.size(); ++i) {
    REQUIRE(d1.results[i].anomalous == d2.results[i].anomalous);
    REQUIRE(d1.results[i].decision_value == d2.results[i].decision_value);
  }
  // skip-count arithmetic: total = windows * W + skipped
  REQUIRE(d1.total_flows == unit_records().size());
  REQUIRE(d1.results.size() * 10 + d1.skipped_flows == d1.total_flows);
  for (const auto& r : d1.results) REQUIRE(r.flows.size() == 10);
}

TEST_CASE("bundle save/load round-trips verdicts bit-identically", "[pipeline][bundle]") {
  const TrainOutput& out = unit_trained();
  fs::path path = test_dir() / "roundtrip.bundle.json";
  out.bundle.save(path.string());
  ModelBundle loaded = ModelBundle::load(path.string());

  REQUIRE(loaded.flow_ae->weights() == out.bundle.flow_ae->weights());
  REQUIRE(loaded.extractor->weights() == out.bundle.extractor->weights());
  for (std::size_t c = 0; c < loaded.ecdfs.size(); ++c)
    REQUIRE(loaded.ecdfs[c].sorted_log_losses == out.bundle.ecdfs[c].sorted_log_losses);

  auto before = detect_all(out.bundle, unit_records());
  auto after = detect_all(loaded, unit_records());
  REQUIRE(before.results.size() == after.results.size());
  for (std::size_t i = 0; i < before.results.size(); ++i) {
    REQUIRE(before.results[i].anomalous == after.results[i].anomalous);
    REQUIRE(before.results[i].decision_value == after.results[i].decision_value);
    for (std::size_t f = 0; f < before.results[i].flows.size(); ++f) {
      REQUIRE(before.results[i].flows[f].alpha == after.results[i].flows[f].alpha);
      REQUIRE(before.results[i].flows[f].op == after.results[i].flows[f].op);
    }
  }
}

TEST_CASE("tampered bundles are rejected", "[pipeline][bundle]") {
  const TrainOutput& out = unit_trained();
  fs::path path = test_dir() / "tampered.bundle.json";
  Json j = out.bundle.to_json();
  j["behavior_norm"]["median_gap"] = 123.0;
  std::ofstream f(path);
  f << j.dump();
  f.close();
  REQUIRE_THROWS_AS(ModelBundle::load(path.string()), ModelError);
}

TEST_CASE("evaluation reproduces the split and satisfies report invariants", "[pipeline]") {
  const TrainOutput& out = unit_trained();
  std::vector<DetectionResult> results;
  EvalReport rep = evaluate_bundle(out.bundle, unit_records(), &results);

  // the test partition is the complement of training: with 24 benign windows
  // and ratio 0.7, 16 train / 8 test, plus every attack window
  long benign_test = 0, attack_test = 0;
  for (const auto& r : results) (r.truth == "benign" ? benign_test : attack_test)++;
  REQUIRE(benign_test == 8);
  REQUIRE(attack_test > 0);
  REQUIRE(rep.test_windows == results.size());
  REQUIRE(rep.overall.total() == static_cast<long>(results.size()));

  // per-attack rows share the benign confusion side
  for (const auto& [name, counts] : rep.per_attack) {
    REQUIRE(counts.fp == rep.overall.fp);
    REQUIRE(counts.tn == rep.overall.tn);
    double p = counts.precision(), r = counts.recall();
    double harmonic = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    REQUIRE(counts.f1() == Catch::Approx(harmonic).margin(1e-9));
  }
  Json j = rep.to_json();
  REQUIRE(j.contains("average"));
  REQUIRE(j.contains("clustering"));
}

TEST_CASE("ablation variants train end to end and reshape the extractor", "[pipeline]") {
  PipelineConfig cfg = unit_pipeline();
  cfg.flow_autoencoder.training.epochs = 2;
  cfg.extractor.training.epochs = 5;
  for (int variant : {1, 2, 3}) {
    cfg.ablation = ablation_from_int(variant);
    TrainOutput out = train_pipeline(unit_records(), cfg);
    REQUIRE(out.bundle.extractor->channels() == behavior_channels(cfg.ablation));
    EvalReport rep = evaluate_bundle(out.bundle, unit_records());
    REQUIRE(rep.overall.total() > 0);
  }
}

TEST_CASE("config json round-trips", "[pipeline][config]") {
  PipelineConfig cfg = unit_pipeline();
  cfg.ablation = Ablation::kNoLabels;
  Json j = pipeline_config_to_json(cfg);
  PipelineConfig back = pipeline_config_from_json(j);
  REQUIRE(back.seed == cfg.seed);
  REQUIRE(back.data.feature_length == cfg.data.feature_length);
  REQUIRE(back.data.window_size == cfg.data.window_size);
  REQUIRE(back.flow_autoencoder.hidden_size == cfg.flow_autoencoder.hidden_size);
  REQUIRE(back.flow_autoencoder.training.epochs == cfg.flow_autoencoder.training.epochs);
  REQUIRE(back.labeler.hdbscan.min_cluster_size == cfg.labeler.hdbscan.min_cluster_size);
  REQUIRE(back.boundary.nu == cfg.boundary.nu);
  REQUIRE(back.ablation == cfg.ablation);

  ScenarioConfig sc = unit_scenario();
  ScenarioConfig sc_back = scenario_config_from_json(scenario_config_to_json(sc));
  REQUIRE(sc_back.seed == sc.seed);
  REQUIRE(sc_back.users == sc.users);
  REQUIRE(sc_back.attack_mix == sc.attack_mix);
}

#ifdef BLADE_CLI_PATH
namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(BLADE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("CLI exit codes follow the contract", "[pipeline][cli]") {
  fs::path dir = test_dir();
  fs::path scenario = dir / "scenario.json";
  fs::path flows = dir / "flows.csv";
  fs::path cfg_path = dir / "pipeline.json";
  fs::path bundle = dir / "cli.bundle.json";

  write_json_file(scenario.string(), scenario_config_to_json(unit_scenario()));
  write_json_file(cfg_path.string(), pipeline_config_to_json(unit_pipeline()));

  // usage errors -> 1
  REQUIRE(run_cli("") == 1);
  REQUIRE(run_cli("frobnicate") == 1);
  REQUIRE(run_cli("train --config " + cfg_path.string()) == 1);  // missing required flags
  REQUIRE(run_cli("synthesize --help") == 0);

  // synthesize -> 0 and emits a parseable file + manifest
  REQUIRE(run_cli("synthesize --config " + scenario.string() + " --out " + flows.string()) == 0);
  REQUIRE(fs::exists(flows));
  REQUIRE(fs::exists(flows.string() + ".manifest.json"));
  REQUIRE_FALSE(parse_flow_records(flows.string()).empty());

  // data errors -> 2
  REQUIRE(run_cli("train --config " + cfg_path.string() + " --data " + (dir / "missing.csv").string() +
                  " --out " + bundle.string()) == 2);

  // model errors -> 3
  REQUIRE(run_cli("detect --bundle " + (dir / "no.bundle.json").string() + " --data " + flows.string() +
                  " --out " + (dir / "r.jsonl").string()) == 3);

  // full train -> detect -> evaluate chain -> 0
  REQUIRE(run_cli("train --config " + cfg_path.string() + " --data " + flows.string() + " --out " +
                  bundle.string()) == 0);
  REQUIRE(fs::exists(bundle));
  REQUIRE(fs::exists(bundle.string() + ".metrics.json"));
  REQUIRE(fs::exists(bundle.string() + ".clusters.json"));
  REQUIRE(run_cli("detect --bundle " + bundle.string() + " --data " + flows.string() + " --out " +
                  (dir / "results.jsonl").string()) == 0);
  REQUIRE(run_cli("evaluate --bundle " + bundle.string() + " --data " + flows.string() + " --out " +
                  (dir / "report.json").string()) == 0);
  Json report = load_json_file((dir / "report.json").string());
  REQUIRE(report.contains("average"));

  // ablate with an invalid variant -> usage error
  REQUIRE(run_cli("ablate --config " + cfg_path.string() + " --data " + flows.string() + " --variant 7") == 1);
}
#endif
