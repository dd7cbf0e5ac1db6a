#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "suitap/core.hpp"

namespace suitap::pscsel {

// Per-trace mean IPC over a common PSC universe.
struct TraceIpcTable {
  PscCatalog universe;
  std::map<std::string, std::vector<double>> rows;  // trace_id -> IPC aligned to universe
};

TraceIpcTable table_from_json(const nlohmann::json& j);

// Each trace's top-k PSCs plus the traces whose IPC barely moves with the PSC.
struct CoverageTable {
  PscCatalog universe;
  std::map<std::string, std::vector<size_t>> ticks;  // trace_id -> universe indices, ascending
  std::set<std::string> agnostic;
};

// ticks = the k highest-IPC PSCs per trace (ties broken by catalog order);
// a trace is agnostic when its worst PSC is within epsilon of its best.
CoverageTable build_coverage(const TraceIpcTable& table, size_t k = 10, double epsilon = 0.005);

struct Selection {
  PscCatalog selected;                           // selection order
  std::vector<std::string> uncovered;            // non-agnostic traces left uncovered
  std::map<std::string, std::string> covered_by; // trace -> first selected PSC ticking it
  std::vector<size_t> tick_counts;               // per universe entry
};

// Scans PSCs by descending tick count (ties by catalog order) and keeps one
// whenever it ticks a not-yet-covered non-agnostic trace. Infeasible coverage
// is reported through `uncovered`, never thrown.
Selection greedy_select(const CoverageTable& coverage, size_t max_candidates = 10);

nlohmann::ordered_json selection_to_json(const Selection& selection, const CoverageTable& coverage);

}  // namespace suitap::pscsel
