#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "blade/blade.hpp"

namespace {

using namespace blade;

struct CommonArgs {
  std::string config, bundle, data, out;
  std::optional<std::uint64_t> seed;
  int variant = 0;
};

PipelineConfig load_pipeline_config(const CommonArgs& args) {
  PipelineConfig cfg = pipeline_config_from_json(load_json_file(args.config));
  if (args.seed) cfg.seed = *args.seed;
  return cfg;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << text;
}

int run_train(const CommonArgs& args) {
  PipelineConfig cfg = load_pipeline_config(args);
  auto records = parse_flow_records(args.data);
  TrainOutput trained = train_pipeline(records, cfg);
  trained.bundle.save(args.out);

  Json metrics = {{"flow_training_curve", trained.reports.flow_curve},
                  {"extractor_training_curve", trained.reports.extractor_curve}};
  write_json_file(args.out + ".metrics.json", metrics);
  write_json_file(args.out + ".clusters.json", trained.reports.cluster_summary);
  std::cout << "trained bundle written to " << args.out << " ("
            << trained.reports.cluster_summary.at("cluster_count").get<int>() << " pseudo operations)\n";
  return 0;
}

int run_detect(const CommonArgs& args) {
  ModelBundle bundle = ModelBundle::load(args.bundle);
  auto records = parse_flow_records(args.data);
  DetectOutput out = detect_all(bundle, records);
  std::ofstream results(args.out);
  if (!results) throw DataError("cannot write '" + args.out + "'");
  std::size_t anomalous = 0;
  for (const auto& r : out.results) {
    results << detection_result_json(r).dump() << '\n';
    if (r.anomalous) ++anomalous;
  }
  Json summary = {{"windows", out.results.size()},
                  {"anomalous", anomalous},
                  {"total_flows", out.total_flows},
                  {"skipped_flows", out.skipped_flows}};
  std::cout << summary.dump() << '\n';
  return 0;
}

int run_evaluate(const CommonArgs& args) {
  ModelBundle bundle = ModelBundle::load(args.bundle);
  auto records = parse_flow_records(args.data);
  EvalReport report = evaluate_bundle(bundle, records);
  Json j = report.to_json();
  if (!args.out.empty()) write_json_file(args.out, j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_synthesize(const CommonArgs& args) {
  Json j = load_json_file(args.config);
  ScenarioConfig cfg = scenario_config_from_json(j);
  if (args.seed) cfg.seed = *args.seed;
  SynthResult result = generate_scenario(cfg);
  write_flow_records(args.out, result.records);

  Json profiles = Json::array();
  for (const auto& p : detail::make_profiles(cfg.num_operations))
    profiles.push_back({{"op_id", p.op_id},
                        {"count_lo", p.count_lo},
                        {"count_hi", p.count_hi},
                        {"size_log_mean", p.size_log_mean},
                        {"size_sigma", p.size_sigma},
                        {"iat_mean", p.iat_mean},
                        {"psh_prob", p.psh_prob}});
  Json manifest = {{"prng", Rng::algorithm()},
                   {"seed", cfg.seed},
                   {"scenario", scenario_config_to_json(cfg)},
                   {"profiles", profiles},
                   {"benign_flows", result.benign_count},
                   {"attack_flows", result.records.size() - result.benign_count}};
  write_json_file(args.out + ".manifest.json", manifest);
  std::cout << "wrote " << result.records.size() << " flows (" << result.benign_count << " benign) to "
            << args.out << '\n';
  return 0;
}

int run_ablate(const CommonArgs& args) {
  PipelineConfig cfg = load_pipeline_config(args);
  cfg.ablation = ablation_from_int(args.variant);
  auto records = parse_flow_records(args.data);
  TrainOutput trained = train_pipeline(records, cfg);
  EvalReport report = evaluate_bundle(trained.bundle, records);
  Json j = report.to_json();
  j["variant"] = args.variant;
  if (!args.out.empty()) write_json_file(args.out, j);
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BLADE: flow- and behavior-level traffic anomaly detection"};
  app.require_subcommand(1);
  CommonArgs args;

  auto* train = app.add_subcommand("train", "fit a model bundle on benign traffic");
  train->add_option("--config", args.config, "pipeline config (json)")->required();
  train->add_option("--data", args.data, "flow-record csv")->required();
  train->add_option("--out", args.out, "output bundle path")->required();
  train->add_option("--seed", args.seed, "override the config seed");

  auto* detect = app.add_subcommand("detect", "score every complete window in a capture");
  detect->add_option("--bundle", args.bundle, "trained bundle")->required();
  detect->add_option("--data", args.data, "flow-record csv")->required();
  detect->add_option("--out", args.out, "results jsonl path")->required();

  auto* evaluate = app.add_subcommand("evaluate", "detection + clustering metrics on the held-out split");
  evaluate->add_option("--bundle", args.bundle, "trained bundle")->required();
  evaluate->add_option("--data", args.data, "flow-record csv (same file the bundle was trained from)")->required();
  evaluate->add_option("--out", args.out, "report json path");

  auto* synthesize = app.add_subcommand("synthesize", "generate a labeled synthetic scenario");
  synthesize->add_option("--config", args.config, "scenario config (json)")->required();
  synthesize->add_option("--out", args.out, "output flow-record csv")->required();
  synthesize->add_option("--seed", args.seed, "override the scenario seed");

  auto* ablate = app.add_subcommand("ablate", "train + evaluate one ablation variant");
  ablate->add_option("--config", args.config, "pipeline config (json)")->required();
  ablate->add_option("--data", args.data, "flow-record csv")->required();
  ablate->add_option("--variant", args.variant, "1: raw losses, 2: no labels, 3: no scores")
      ->required()
      ->check(CLI::Range(1, 3));
  ablate->add_option("--out", args.out, "report json path");
  ablate->add_option("--seed", args.seed, "override the config seed");

  try {
    app.parse(argc, argv);
    if (train->parsed()) return run_train(args);
    if (detect->parsed()) return run_detect(args);
    if (evaluate->parsed()) return run_evaluate(args);
    if (synthesize->parsed()) return run_synthesize(args);
    if (ablate->parsed()) return run_ablate(args);
    return 1;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const blade::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const blade::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const blade::ModelError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
