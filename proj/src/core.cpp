#include "suitap/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "suitap/errors.hpp"

namespace suitap {

EventCatalog EventCatalog::from_names(const std::vector<std::string>& names) {
  EventCatalog catalog;
  std::unordered_set<std::string> seen;
  for (const auto& name : names) {
    if (name.empty()) throw DataError("event catalog: empty event name");
    if (!seen.insert(name).second) throw DataError("event catalog: duplicate event name '" + name + "'");
    catalog.events_.push_back(EventId{catalog.events_.size(), name});
  }
  return catalog;
}

std::optional<size_t> EventCatalog::index_of(std::string_view name) const {
  for (const auto& e : events_) {
    if (e.name == name) return e.index;
  }
  return std::nullopt;
}

std::vector<std::string> EventCatalog::names() const {
  std::vector<std::string> out;
  out.reserve(events_.size());
  for (const auto& e : events_) out.push_back(e.name);
  return out;
}

std::string Psc::id() const {
  std::string out;
  for (size_t i = 0; i < levels.size(); ++i) {
    if (i > 0) out += '-';
    out += levels[i];
  }
  return out;
}

Psc Psc::parse(const std::string& id) {
  Psc psc;
  size_t start = 0;
  size_t level = 0;
  while (true) {
    const size_t dash = id.find('-', start);
    const std::string part = id.substr(start, dash == std::string::npos ? std::string::npos : dash - start);
    if (part.empty()) throw DataError("PSC id '" + id + "': empty level name");
    if (level >= kMemoryLevels) throw DataError("PSC id '" + id + "': expected 4 levels");
    psc.levels[level++] = part;
    if (dash == std::string::npos) break;
    start = dash + 1;
  }
  if (level != kMemoryLevels) throw DataError("PSC id '" + id + "': expected 4 levels, got " + std::to_string(level));
  return psc;
}

LevelMenus LevelMenus::reference() {
  return LevelMenus{{{
      {"nl", "no"},                                       // L1I$
      {"bingo", "ipcp", "mlop", "nl", "no"},              // L1D$
      {"ip_stride", "ipcp", "kpcp", "spp", "nl", "no"},   // L2$
      {"nl", "no"},                                       // LL$
  }}};
}

PscCatalog PscCatalog::from_ids(const std::vector<std::string>& ids) {
  PscCatalog catalog;
  for (const auto& id : ids) catalog.add(Psc::parse(id));
  return catalog;
}

void PscCatalog::add(Psc psc) {
  const std::string id = psc.id();
  for (const auto& e : entries_) {
    if (e == psc) throw DataError("PSC catalog: duplicate entry '" + id + "'");
  }
  entries_.push_back(std::move(psc));
}

std::optional<size_t> PscCatalog::index_of(std::string_view id) const {
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].id() == id) return i;
  }
  return std::nullopt;
}

std::vector<std::string> PscCatalog::ids() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.id());
  return out;
}

bool psc_in_menus(const Psc& psc, const LevelMenus& menus) {
  for (size_t level = 0; level < kMemoryLevels; ++level) {
    const auto& allowed = menus.choices[level];
    if (std::find(allowed.begin(), allowed.end(), psc.levels[level]) == allowed.end()) return false;
  }
  return true;
}

PscCatalog full_psc_space(const LevelMenus& menus) {
  PscCatalog catalog;
  for (const auto& l0 : menus.choices[0])
    for (const auto& l1 : menus.choices[1])
      for (const auto& l2 : menus.choices[2])
        for (const auto& l3 : menus.choices[3]) catalog.add(Psc{{l0, l1, l2, l3}});
  return catalog;
}

Dataset restrict_pscs(const Dataset& dataset, const PscCatalog& subset) {
  std::vector<size_t> map;
  map.reserve(subset.size());
  for (const auto& psc : subset.entries()) {
    const auto idx = dataset.pscs.index_of(psc.id());
    if (!idx) throw DataError("PSC '" + psc.id() + "' not present in dataset catalog");
    map.push_back(*idx);
  }
  Dataset out;
  out.events = dataset.events;
  out.pscs = subset;
  out.window_size_instructions = dataset.window_size_instructions;
  out.windows.reserve(dataset.windows.size());
  for (const auto& w : dataset.windows) {
    WindowRecord r = w;
    r.ipc_by_psc.clear();
    r.ipc_by_psc.reserve(map.size());
    for (const size_t src : map) r.ipc_by_psc.push_back(w.ipc_by_psc[src]);
    out.windows.push_back(std::move(r));
  }
  return out;
}

BigInt scenario_count(uint64_t n_app, uint64_t n_psc, uint64_t n_windows) {
  if (n_app < 1 || n_psc < 1 || n_windows < 1) {
    throw std::invalid_argument("scenario_count: all arguments must be >= 1");
  }
  BigInt result = n_app;
  BigInt base = n_psc;
  uint64_t exp = n_windows;
  BigInt power = 1;
  while (exp > 0) {
    if (exp & 1) power *= base;
    base *= base;
    exp >>= 1;
  }
  result *= power;
  return result;
}

EptiVector compute_epti(const std::vector<uint64_t>& event_counts, uint64_t instruction_count) {
  if (instruction_count < 1000) {
    throw DataError("invalid window: instruction count " + std::to_string(instruction_count) + " is below 1000");
  }
  EptiVector out;
  out.reserve(event_counts.size());
  for (const uint64_t c : event_counts) {
    out.push_back(static_cast<double>(c) * 1000.0 / static_cast<double>(instruction_count));
  }
  return out;
}

}  // namespace suitap
