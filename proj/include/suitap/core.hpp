#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace suitap {

// ── Hardware events ─────────────────────────────────────────────

struct EventId {
  size_t index = 0;  // position in the owning catalog
  std::string name;
  bool operator==(const EventId&) const = default;
};

class EventCatalog {
 public:
  EventCatalog() = default;
  static EventCatalog from_names(const std::vector<std::string>& names);

  size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  const EventId& at(size_t i) const { return events_.at(i); }
  const std::vector<EventId>& events() const { return events_; }
  std::optional<size_t> index_of(std::string_view name) const;
  std::vector<std::string> names() const;
  bool operator==(const EventCatalog&) const = default;

 private:
  std::vector<EventId> events_;
};

// Events per thousand instructions, one value per catalog event.
using EptiVector = std::vector<double>;

// ── Prefetcher system configurations ────────────────────────────

inline constexpr size_t kMemoryLevels = 4;  // L1I$, L1D$, L2$, LL$

// One prefetcher name (or "no") per memory level. The id joins the level
// names with '-', e.g. "nl-mlop-kpcp-nl".
struct Psc {
  std::array<std::string, kMemoryLevels> levels;

  std::string id() const;
  static Psc parse(const std::string& id);
  bool operator==(const Psc&) const = default;
};

// Prefetchers available at each memory level in the reference system.
struct LevelMenus {
  std::array<std::vector<std::string>, kMemoryLevels> choices;
  static LevelMenus reference();
};

class PscCatalog {
 public:
  PscCatalog() = default;
  static PscCatalog from_ids(const std::vector<std::string>& ids);

  void add(Psc psc);  // rejects duplicates
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const Psc& at(size_t i) const { return entries_.at(i); }
  const std::vector<Psc>& entries() const { return entries_; }
  std::optional<size_t> index_of(std::string_view id) const;
  std::vector<std::string> ids() const;
  bool operator==(const PscCatalog&) const = default;

 private:
  std::vector<Psc> entries_;
};

bool psc_in_menus(const Psc& psc, const LevelMenus& menus);

// Every level combination in menu order (first level varies slowest).
PscCatalog full_psc_space(const LevelMenus& menus = LevelMenus::reference());

// ── Window records and datasets ──────────────────────────────────

struct WindowRecord {
  std::string trace_id;
  uint64_t window_index = 0;
  uint64_t instructions = 0;
  std::vector<uint64_t> event_counts;  // catalog order
  EptiVector epti;                     // derived from event_counts
  std::vector<double> ipc_by_psc;      // catalog order, all > 0
  bool operator==(const WindowRecord&) const = default;
};

struct Dataset {
  EventCatalog events;
  PscCatalog pscs;
  std::vector<WindowRecord> windows;
  uint64_t window_size_instructions = 1'000'000;
  bool operator==(const Dataset&) const = default;
};

// Narrows a dataset's PSC catalog to `subset`, re-aligning every window's
// IPC vector. Throws DataError if a subset entry is missing.
Dataset restrict_pscs(const Dataset& dataset, const PscCatalog& subset);

// ── Operations ───────────────────────────────────────────────────

using BigInt = boost::multiprecision::cpp_int;

// n_app * n_psc^n_windows, exact. All arguments must be >= 1.
BigInt scenario_count(uint64_t n_app, uint64_t n_psc, uint64_t n_windows);

// value[i] = event_counts[i] / (instruction_count / 1000). Requires
// instruction_count >= 1000 (DataError otherwise).
EptiVector compute_epti(const std::vector<uint64_t>& event_counts, uint64_t instruction_count);

}  // namespace suitap
