#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "suitap/core.hpp"
#include "suitap/nodemem.hpp"

namespace suitap::replay {

struct TraceScore {
  double adaptive_ipc = 0.0;
  double oracle_ipc = 0.0;               // per-window max over the model catalog
  std::vector<double> static_ipc;        // per model-catalog PSC
};

struct ReplayAggregate {
  double mean_gain_vs_baseline = 0.0;
  double max_gain = 0.0;
  double worst_loss = 0.0;  // most negative per-trace gain
  uint64_t decision_count = 0;
  uint64_t max_comparison_count = 0;
  uint64_t memory_access_count = 0;
};

struct ReplayResult {
  PscCatalog model_pscs;
  std::string initial_psc;
  std::string baseline_psc;
  std::vector<std::pair<std::string, TraceScore>> per_trace;  // trace order
  ReplayAggregate aggregate;
};

// Table-driven window replay. Window 0 of each trace runs under
// `initial_psc`; the decision made on window w's E-PTI applies to window
// w + 1. The chosen PSC only selects which IPC column is read; features are
// hardware-invariant and never change with the choice. Traces must be
// contiguous in window_index.
//
// `transition_penalty` scales a window's realized IPC by (1 - penalty) when
// the adaptive policy switched PSC at that window boundary. Off by default;
// static policies and the oracle never pay it.
ReplayResult run_replay(const Dataset& dataset, const nodemem::ModelBundle& bundle,
                        const std::string& initial_psc, const std::string& baseline_psc,
                        double transition_penalty = 0.0);

struct OracleReport {
  std::map<std::string, double> per_trace_ipc;  // per-window argmax IPC
  double max_swing = 0.0;                       // max over windows of max/min - 1
};

OracleReport oracle_policy(const Dataset& dataset);

// ── Synthetic workloads ──────────────────────────────────────────

struct SyntheticPhase {
  uint64_t length_windows = 0;
  std::vector<double> feature_means;  // target E-PTI per event
  double noise_sigma = 0.0;
  size_t best_psc = 0;
  double ipc_best = 2.0;
  double ipc_other = 1.0;
};

struct SyntheticSpec {
  EventCatalog events;
  PscCatalog pscs;
  std::vector<SyntheticPhase> phases;
  size_t n_traces = 1;
  uint64_t seed = 0;
  uint64_t window_size_instructions = 1'000'000;
};

// Deterministic phase-structured dataset: each phase's windows draw features
// around the phase means and award ipc_best to the phase's best PSC.
Dataset generate_synthetic(const SyntheticSpec& spec);

SyntheticSpec spec_from_json(const nlohmann::json& j);

// ── Reporting ────────────────────────────────────────────────────

struct OutlierRow {
  std::string trace_id;
  double gain = 0.0;
};

struct OutlierReport {
  std::string policy;  // "adaptive" or a static PSC id
  std::vector<OutlierRow> best;   // descending gain
  std::vector<OutlierRow> worst;  // ascending gain
  bool truncated = false;         // k exceeded the trace count
};

OutlierReport summarize_outliers(const ReplayResult& result, size_t k = 10,
                                 const std::string& policy = "adaptive");

std::string outliers_csv(const std::vector<OutlierReport>& reports);

nlohmann::ordered_json result_to_json(const ReplayResult& result);
ReplayResult result_from_json(const nlohmann::json& j);

}  // namespace suitap::replay
