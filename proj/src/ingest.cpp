#include "suitap/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "suitap/errors.hpp"
#include "suitap/rng.hpp"

namespace suitap::ingest {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail_at(const std::string& path, size_t line, const std::string& what) {
  throw DataError(path + ":" + std::to_string(line) + ": " + what);
}

uint64_t require_uint(const ordered_json& j, const char* key, const std::string& path, size_t line) {
  if (!j.contains(key)) fail_at(path, line, std::string("missing field '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number_unsigned()) fail_at(path, line, std::string("field '") + key + "' must be an unsigned integer");
  return v.get<uint64_t>();
}

}  // namespace

Dataset load_dataset(const std::vector<std::string>& paths, const IngestConfig& config,
                     std::vector<std::string>* warnings) {
  if (config.window_size_instructions == 0) throw UsageError("window size must be positive");
  if (config.warmup_instructions % config.window_size_instructions != 0) {
    throw UsageError("warmup instructions must be a multiple of the window size");
  }

  Dataset dataset;
  dataset.window_size_instructions = config.window_size_instructions;
  bool have_catalogs = false;

  std::vector<WindowRecord> records;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open record file '" + path + "'");
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      ordered_json j;
      try {
        j = ordered_json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        fail_at(path, line_no, std::string("invalid JSON: ") + e.what());
      }
      if (!j.is_object()) fail_at(path, line_no, "record must be a JSON object");
      if (!j.contains("trace_id") || !j.at("trace_id").is_string()) {
        fail_at(path, line_no, "missing or non-string field 'trace_id'");
      }
      if (!j.contains("event_counts") || !j.at("event_counts").is_object()) {
        fail_at(path, line_no, "missing or non-object field 'event_counts'");
      }
      if (!j.contains("ipc_by_psc") || !j.at("ipc_by_psc").is_object()) {
        fail_at(path, line_no, "missing or non-object field 'ipc_by_psc'");
      }

      WindowRecord rec;
      rec.trace_id = j.at("trace_id").get<std::string>();
      rec.window_index = require_uint(j, "window_index", path, line_no);
      rec.instructions = require_uint(j, "instructions", path, line_no);

      const auto& counts = j.at("event_counts");
      const auto& ipcs = j.at("ipc_by_psc");
      if (!have_catalogs) {
        std::vector<std::string> event_names;
        for (const auto& [k, v] : counts.items()) event_names.push_back(k);
        dataset.events = EventCatalog::from_names(event_names);
        std::vector<std::string> psc_ids;
        for (const auto& [k, v] : ipcs.items()) psc_ids.push_back(k);
        try {
          dataset.pscs = PscCatalog::from_ids(psc_ids);
        } catch (const DataError& e) {
          fail_at(path, line_no, e.what());
        }
        have_catalogs = true;
      } else {
        if (counts.size() != dataset.events.size() || ipcs.size() != dataset.pscs.size()) {
          fail_at(path, line_no, "catalog conflict: record does not match the catalogs of the first record");
        }
      }

      rec.event_counts.assign(dataset.events.size(), 0);
      for (const auto& [name, value] : counts.items()) {
        const auto idx = dataset.events.index_of(name);
        if (!idx) fail_at(path, line_no, "catalog conflict: unknown event '" + name + "'");
        if (!value.is_number_unsigned()) fail_at(path, line_no, "event count for '" + name + "' must be an unsigned integer");
        rec.event_counts[*idx] = value.get<uint64_t>();
      }
      rec.ipc_by_psc.assign(dataset.pscs.size(), 0.0);
      for (const auto& [id, value] : ipcs.items()) {
        const auto idx = dataset.pscs.index_of(id);
        if (!idx) fail_at(path, line_no, "catalog conflict: unknown PSC '" + id + "'");
        if (!value.is_number()) fail_at(path, line_no, "IPC for '" + id + "' must be a number");
        const double ipc = value.get<double>();
        if (!(ipc > 0.0) || !std::isfinite(ipc)) fail_at(path, line_no, "IPC for '" + id + "' must be positive and finite");
        rec.ipc_by_psc[*idx] = ipc;
      }
      try {
        rec.epti = compute_epti(rec.event_counts, rec.instructions);
      } catch (const DataError& e) {
        fail_at(path, line_no, e.what());
      }
      records.push_back(std::move(rec));
    }
  }

  // Warmup skip and per-trace cap, in (trace_id, window_index) order.
  const uint64_t skip = config.warmup_instructions / config.window_size_instructions;
  std::map<std::string, std::vector<WindowRecord>> by_trace;
  for (auto& rec : records) by_trace[rec.trace_id].push_back(std::move(rec));

  for (auto& [trace_id, trace_records] : by_trace) {
    std::sort(trace_records.begin(), trace_records.end(),
              [](const WindowRecord& a, const WindowRecord& b) { return a.window_index < b.window_index; });
    for (size_t i = 1; i < trace_records.size(); ++i) {
      if (trace_records[i].window_index == trace_records[i - 1].window_index) {
        throw DataError("trace '" + trace_id + "': duplicate window index " +
                        std::to_string(trace_records[i].window_index));
      }
    }
    size_t retained = 0;
    for (auto& rec : trace_records) {
      if (rec.window_index < skip) continue;
      if (config.max_windows_per_trace && retained >= *config.max_windows_per_trace) break;
      dataset.windows.push_back(std::move(rec));
      ++retained;
    }
    if (retained == 0 && warnings) {
      warnings->push_back("trace '" + trace_id + "': warmup consumed all " +
                          std::to_string(trace_records.size()) + " windows");
    }
  }

  std::sort(dataset.windows.begin(), dataset.windows.end(), [](const WindowRecord& a, const WindowRecord& b) {
    return std::tie(a.trace_id, a.window_index) < std::tie(b.trace_id, b.window_index);
  });
  return dataset;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (const auto& w : dataset.windows) {
    ordered_json j;
    j["trace_id"] = w.trace_id;
    j["window_index"] = w.window_index;
    j["instructions"] = w.instructions;
    ordered_json counts = ordered_json::object();
    for (size_t i = 0; i < dataset.events.size(); ++i) counts[dataset.events.at(i).name] = w.event_counts[i];
    j["event_counts"] = std::move(counts);
    ordered_json ipcs = ordered_json::object();
    for (size_t i = 0; i < dataset.pscs.size(); ++i) ipcs[dataset.pscs.at(i).id()] = w.ipc_by_psc[i];
    j["ipc_by_psc"] = std::move(ipcs);
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed while writing '" + path + "'");
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& dataset, double train_fraction, uint64_t seed) {
  if (dataset.windows.empty()) throw DataError("cannot split an empty dataset");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw UsageError("train fraction must lie in (0, 1)");
  }
  const size_t n = dataset.windows.size();
  const size_t train_n = static_cast<size_t>(std::llround(train_fraction * static_cast<double>(n)));

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  rng::Stream(seed).derive("split").shuffle(order);

  std::vector<size_t> train_idx(order.begin(), order.begin() + train_n);
  std::vector<size_t> test_idx(order.begin() + train_n, order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  auto subset = [&](const std::vector<size_t>& idx) {
    Dataset out;
    out.events = dataset.events;
    out.pscs = dataset.pscs;
    out.window_size_instructions = dataset.window_size_instructions;
    out.windows.reserve(idx.size());
    for (const size_t i : idx) out.windows.push_back(dataset.windows[i]);
    return out;
  };
  return {subset(train_idx), subset(test_idx)};
}

}  // namespace suitap::ingest
