#include "suitap/config.hpp"

#include <fstream>

#include "suitap/errors.hpp"

namespace suitap::cli {

nlohmann::ordered_json config_to_json(const PipelineConfig& c) {
  return nlohmann::ordered_json{
      {"seed", c.seed},
      {"dataset_path", c.dataset_path},
      {"model_prefix", c.model_prefix},
      {"suite_path", c.suite_path},
      {"warmup_instructions", c.warmup_instructions},
      {"window_size_instructions", c.window_size_instructions},
      {"max_windows_per_trace", c.max_windows_per_trace},
      {"invariance_threshold", c.invariance_threshold},
      {"correlation_threshold", c.correlation_threshold},
      {"max_features", c.max_features},
      {"top_k", c.top_k},
      {"agnostic_epsilon", c.agnostic_epsilon},
      {"max_candidates", c.max_candidates},
      {"label_epsilon", c.label_epsilon},
      {"n_estimators", c.n_estimators},
      {"max_depth", c.max_depth},
      {"total_node_budget", c.total_node_budget},
      {"min_leaf_samples", c.min_leaf_samples},
      {"cv_folds", c.cv_folds},
      {"train_fraction", c.train_fraction},
      {"baseline_psc", c.baseline_psc},
      {"initial_psc", c.initial_psc},
  };
}

PipelineConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("config: expected a JSON object");
  PipelineConfig c;
  c.seed = j.value("seed", c.seed);
  c.dataset_path = j.value("dataset_path", c.dataset_path);
  c.model_prefix = j.value("model_prefix", c.model_prefix);
  c.suite_path = j.value("suite_path", c.suite_path);
  c.warmup_instructions = j.value("warmup_instructions", c.warmup_instructions);
  c.window_size_instructions = j.value("window_size_instructions", c.window_size_instructions);
  c.max_windows_per_trace = j.value("max_windows_per_trace", c.max_windows_per_trace);
  c.invariance_threshold = j.value("invariance_threshold", c.invariance_threshold);
  c.correlation_threshold = j.value("correlation_threshold", c.correlation_threshold);
  c.max_features = j.value("max_features", c.max_features);
  c.top_k = j.value("top_k", c.top_k);
  c.agnostic_epsilon = j.value("agnostic_epsilon", c.agnostic_epsilon);
  c.max_candidates = j.value("max_candidates", c.max_candidates);
  c.label_epsilon = j.value("label_epsilon", c.label_epsilon);
  c.n_estimators = j.value("n_estimators", c.n_estimators);
  c.max_depth = j.value("max_depth", c.max_depth);
  c.total_node_budget = j.value("total_node_budget", c.total_node_budget);
  c.min_leaf_samples = j.value("min_leaf_samples", c.min_leaf_samples);
  c.cv_folds = j.value("cv_folds", c.cv_folds);
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  c.baseline_psc = j.value("baseline_psc", c.baseline_psc);
  c.initial_psc = j.value("initial_psc", c.initial_psc);
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path + ": invalid JSON: " + e.what());
  }
  return config_from_json(j);
}

void save_config(const PipelineConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << config_to_json(config).dump(2) << '\n';
}

}  // namespace suitap::cli
