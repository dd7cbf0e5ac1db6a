#include "suitap/pscsel.hpp"

#include <algorithm>

#include "suitap/errors.hpp"

namespace suitap::pscsel {

TraceIpcTable table_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("pscs") || !j.contains("traces")) {
    throw DataError("IPC table: expected object with 'pscs' and 'traces'");
  }
  TraceIpcTable table;
  table.universe = PscCatalog::from_ids(j.at("pscs").get<std::vector<std::string>>());
  for (const auto& [trace, row] : j.at("traces").items()) {
    if (!row.is_object()) throw DataError("IPC table: trace '" + trace + "' row must be an object");
    std::vector<double> values(table.universe.size(), 0.0);
    std::vector<bool> seen(table.universe.size(), false);
    for (const auto& [psc, ipc] : row.items()) {
      const auto idx = table.universe.index_of(psc);
      if (!idx) throw DataError("IPC table: trace '" + trace + "' names unknown PSC '" + psc + "'");
      if (!ipc.is_number() || !(ipc.get<double>() > 0.0)) {
        throw DataError("IPC table: trace '" + trace + "', PSC '" + psc + "': IPC must be positive");
      }
      values[*idx] = ipc.get<double>();
      seen[*idx] = true;
    }
    for (size_t i = 0; i < seen.size(); ++i) {
      if (!seen[i]) {
        throw DataError("IPC table: trace '" + trace + "' is missing PSC '" + table.universe.at(i).id() + "'");
      }
    }
    table.rows[trace] = std::move(values);
  }
  if (table.rows.empty()) throw DataError("IPC table: no traces");
  return table;
}

CoverageTable build_coverage(const TraceIpcTable& table, size_t k, double epsilon) {
  if (table.rows.empty()) throw DataError("coverage: empty IPC table");
  if (k < 1) throw UsageError("coverage: k must be >= 1");

  CoverageTable coverage;
  coverage.universe = table.universe;
  for (const auto& [trace, ipcs] : table.rows) {
    std::vector<size_t> order(ipcs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return ipcs[a] > ipcs[b]; });

    std::vector<size_t> ticks(order.begin(), order.begin() + std::min(k, order.size()));
    std::sort(ticks.begin(), ticks.end());
    coverage.ticks[trace] = std::move(ticks);

    const auto [min_it, max_it] = std::minmax_element(ipcs.begin(), ipcs.end());
    if (*min_it >= (1.0 - epsilon) * *max_it) coverage.agnostic.insert(trace);
  }
  return coverage;
}

Selection greedy_select(const CoverageTable& coverage, size_t max_candidates) {
  if (coverage.ticks.empty()) throw DataError("greedy select: empty coverage table");

  const size_t n_psc = coverage.universe.size();
  Selection sel;
  sel.tick_counts.assign(n_psc, 0);
  for (const auto& [trace, ticks] : coverage.ticks) {
    for (const size_t p : ticks) sel.tick_counts[p]++;
  }

  std::vector<size_t> order(n_psc);
  for (size_t i = 0; i < n_psc; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return sel.tick_counts[a] > sel.tick_counts[b]; });

  std::set<std::string> covered;
  size_t to_cover = 0;
  for (const auto& [trace, ticks] : coverage.ticks) {
    if (!coverage.agnostic.count(trace)) ++to_cover;
  }

  for (const size_t p : order) {
    if (sel.selected.size() >= max_candidates || covered.size() == to_cover) break;
    std::vector<std::string> newly;
    for (const auto& [trace, ticks] : coverage.ticks) {
      if (coverage.agnostic.count(trace) || covered.count(trace)) continue;
      if (std::binary_search(ticks.begin(), ticks.end(), p)) newly.push_back(trace);
    }
    if (newly.empty()) continue;
    sel.selected.add(coverage.universe.at(p));
    for (const auto& trace : newly) {
      covered.insert(trace);
      sel.covered_by[trace] = coverage.universe.at(p).id();
    }
  }

  for (const auto& [trace, ticks] : coverage.ticks) {
    if (!coverage.agnostic.count(trace) && !covered.count(trace)) sel.uncovered.push_back(trace);
  }
  return sel;
}

nlohmann::ordered_json selection_to_json(const Selection& selection, const CoverageTable& coverage) {
  nlohmann::ordered_json j;
  j["pscs"] = selection.selected.ids();
  auto counts = nlohmann::ordered_json::object();
  for (size_t i = 0; i < coverage.universe.size(); ++i) {
    counts[coverage.universe.at(i).id()] = selection.tick_counts[i];
  }
  j["tick_counts"] = std::move(counts);
  j["agnostic"] = std::vector<std::string>(coverage.agnostic.begin(), coverage.agnostic.end());
  auto covered = nlohmann::ordered_json::object();
  for (const auto& [trace, psc] : selection.covered_by) covered[trace] = psc;
  j["covered_by"] = std::move(covered);
  j["uncovered"] = selection.uncovered;
  return j;
}

}  // namespace suitap::pscsel
