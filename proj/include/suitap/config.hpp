#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace suitap::cli {

// Defaults for every subcommand, loadable from one JSON file; flags override
// individual fields. Round-trips through JSON without loss.
struct PipelineConfig {
  uint64_t seed = 0;

  std::string dataset_path;
  std::string model_prefix = "model";
  std::string suite_path = "suite.json";

  // ingest
  uint64_t warmup_instructions = 20'000'000;
  uint64_t window_size_instructions = 1'000'000;
  uint64_t max_windows_per_trace = 100;  // 0 = unlimited

  // feature selection
  double invariance_threshold = 0.10;
  double correlation_threshold = 0.9;
  uint64_t max_features = 6;

  // PSC selection
  uint64_t top_k = 10;
  double agnostic_epsilon = 0.005;
  uint64_t max_candidates = 10;

  // training
  double label_epsilon = 0.005;
  uint64_t n_estimators = 5;
  uint64_t max_depth = 10;
  uint64_t total_node_budget = 2250;
  uint64_t min_leaf_samples = 5;
  uint64_t cv_folds = 10;
  double train_fraction = 0.10;

  // replay
  std::string baseline_psc;
  std::string initial_psc;

  bool operator==(const PipelineConfig&) const = default;
};

nlohmann::ordered_json config_to_json(const PipelineConfig& config);
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig load_config(const std::string& path);
void save_config(const PipelineConfig& config, const std::string& path);

}  // namespace suitap::cli
