#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "suitap/core.hpp"

namespace suitap::ingest {

struct IngestConfig {
  uint64_t warmup_instructions = 20'000'000;
  uint64_t window_size_instructions = 1'000'000;
  std::optional<uint64_t> max_windows_per_trace = 100;
};

// Reads window-record JSON-lines files, skips each trace's warmup windows,
// caps windows per trace, and returns the records ordered by
// (trace_id, window_index). All files must agree on the event and PSC
// catalogs. Traces fully consumed by warmup produce a warning, not an error.
Dataset load_dataset(const std::vector<std::string>& paths, const IngestConfig& config = {},
                     std::vector<std::string>* warnings = nullptr);

// Writes the canonical JSON-lines form (one record per line, catalog key order).
void save_dataset(const Dataset& dataset, const std::string& path);

// Seeded uniform partition by window; train size = round(train_fraction * N).
std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset, double train_fraction, uint64_t seed);

}  // namespace suitap::ingest
