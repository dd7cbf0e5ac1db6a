#pragma once

// Shared fixture builders and independent oracles for the test suites. The
// oracles here recompute results from first principles and must stay
// independent of the library code paths they check.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "suitap/core.hpp"
#include "suitap/pscsel.hpp"
#include "suitap/replay.hpp"
#include "suitap/rng.hpp"
#include "suitap/train.hpp"

namespace testutil {

using namespace suitap;

// ── Scratch directories ──────────────────────────────────────────

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("suitap-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// ── Dataset builders ─────────────────────────────────────────────

inline Dataset make_dataset(size_t n_events, const std::vector<std::string>& psc_ids) {
  Dataset ds;
  std::vector<std::string> names;
  for (size_t i = 0; i < n_events; ++i) names.push_back("EV_" + std::to_string(i));
  ds.events = EventCatalog::from_names(names);
  ds.pscs = PscCatalog::from_ids(psc_ids);
  return ds;
}

inline void add_window(Dataset& ds, const std::string& trace, uint64_t index, const EptiVector& epti,
                       const std::vector<double>& ipc) {
  WindowRecord w;
  w.trace_id = trace;
  w.window_index = index;
  w.instructions = ds.window_size_instructions;
  w.event_counts.assign(ds.events.size(), 0);
  for (size_t f = 0; f < epti.size(); ++f) {
    w.event_counts[f] = static_cast<uint64_t>(epti[f] * static_cast<double>(w.instructions) / 1000.0);
  }
  w.epti = epti;
  w.ipc_by_psc = ipc;
  ds.windows.push_back(std::move(w));
}

// ── Coverage fixture: 10 candidate PSCs across 20 SPEC2017 traces ─
// imagick, roms, and xz are PSC-agnostic; wrf's row is empty (no candidate
// reaches its top ten), so no selection can cover it.

inline const std::vector<std::string>& fixture_psc_ids() {
  static const std::vector<std::string> ids = {
      "nl-mlop-kpcp-nl",  "nl-bingo-spp-nl", "nl-bingo-kpcp-nl", "no-mlop-kpcp-nl", "nl-mlop-spp-nl",
      "no-bingo-kpcp-nl", "no-bingo-spp-nl", "no-bingo-kpcp-no", "nl-bingo-ipcp-no", "no-bingo-ipcp-no"};
  return ids;
}

inline const std::vector<std::string>& fixture_trace_ids() {
  static const std::vector<std::string> ids = {
      "638.imagick_s-10316B", "649.fotonik3d_s-1176B", "607.cactuBSSN_s-2421B", "625.x264_s-18B",
      "648.exchange2_s-1699B", "654.roms_s-842B",      "600.perlbench_s-210B",  "628.pop2_s-17B",
      "644.nab_s-5853B",       "603.bwaves_s-3699",    "627.cam4_s-573B",       "621.wrf_s-575B",
      "631.deepsjeng_s-928B",  "657.xz_s-3167B",       "602.gcc_s-734B",        "641.leela_s-800B",
      "623.xalancbmk_s-700B",  "619.lbm_s-4268B",      "605.mcf_s-665B",        "620.omnetpp_s-874B"};
  return ids;
}

// tick_matrix[psc][trace]
inline const std::vector<std::vector<int>>& fixture_tick_matrix() {
  static const std::vector<std::vector<int>> ticks = {
      {0, 1, 1, 1, 1, 0, 0, 1, 1, 1, 1, 0, 1, 0, 1, 0, 0, 0, 0, 0},
      {0, 1, 0, 0, 1, 0, 1, 1, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0, 1},
      {0, 1, 0, 0, 1, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0},
      {0, 1, 0, 1, 0, 0, 0, 1, 1, 0, 1, 0, 1, 0, 1, 0, 0, 0, 0, 0},
      {0, 0, 1, 1, 1, 0, 0, 1, 1, 1, 1, 0, 1, 0, 1, 0, 0, 0, 0, 0},
      {0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 1},
      {0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 1, 1, 0, 0, 1},
      {0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0},
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0},
      {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0},
  };
  return ticks;
}

inline const std::set<std::string>& fixture_agnostic_traces() {
  static const std::set<std::string> agnostic = {"638.imagick_s-10316B", "654.roms_s-842B", "657.xz_s-3167B"};
  return agnostic;
}

inline pscsel::CoverageTable fixture_coverage_table() {
  pscsel::CoverageTable coverage;
  coverage.universe = PscCatalog::from_ids(fixture_psc_ids());
  const auto& traces = fixture_trace_ids();
  const auto& ticks = fixture_tick_matrix();
  for (size_t t = 0; t < traces.size(); ++t) {
    std::vector<size_t> set;
    for (size_t p = 0; p < ticks.size(); ++p) {
      if (ticks[p][t]) set.push_back(p);
    }
    coverage.ticks[traces[t]] = std::move(set);
  }
  coverage.agnostic = fixture_agnostic_traces();
  return coverage;
}

// ── Independent oracles ──────────────────────────────────────────

struct OracleSplit {
  size_t feature = 0;
  double threshold = 0.0;
  double weighted_gini = 0.0;
};

inline double oracle_gini(uint64_t pos, uint64_t neg) {
  const double n = static_cast<double>(pos + neg);
  const double p = static_cast<double>(pos) / n;
  const double q = 1.0 - p;
  return 1.0 - p * p - q * q;
}

// Full scan over every (feature, adjacent-distinct-value midpoint) pair with
// a from-scratch partition per candidate.
inline std::optional<OracleSplit> brute_force_split(const std::vector<std::vector<double>>& X,
                                                    const std::vector<uint8_t>& y,
                                                    const std::vector<size_t>& rows, size_t n_features,
                                                    size_t min_leaf) {
  const size_t n = rows.size();
  min_leaf = std::max<size_t>(min_leaf, 1);
  if (n < 2 * min_leaf) return std::nullopt;
  uint64_t pos = 0;
  for (const size_t r : rows) pos += y[r];
  if (pos == 0 || pos == n) return std::nullopt;
  const double parent = oracle_gini(pos, n - pos);

  std::optional<OracleSplit> best;
  for (size_t f = 0; f < n_features; ++f) {
    std::vector<double> values;
    for (const size_t r : rows) values.push_back(X[r][f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (size_t i = 0; i + 1 < values.size(); ++i) {
      const double t = (values[i] + values[i + 1]) / 2.0;
      if (!(t > values[i])) continue;
      uint64_t ln = 0, lp = 0;
      for (const size_t r : rows) {
        if (X[r][f] < t) {
          ++ln;
          lp += y[r];
        }
      }
      const uint64_t rn = n - ln;
      if (ln < min_leaf || rn < min_leaf) continue;
      const uint64_t rp = pos - lp;
      const double w = (static_cast<double>(ln) * oracle_gini(lp, ln - lp) +
                        static_cast<double>(rn) * oracle_gini(rp, rn - rp)) /
                       static_cast<double>(n);
      if (!best || w < best->weighted_gini) best = OracleSplit{f, t, w};
    }
  }
  if (!best || !(best->weighted_gini < parent)) return std::nullopt;
  return best;
}

// Exhaustive minimum cover size over all PSC subsets (universe <= 20).
// Traces with empty tick sets are ignored (nothing can cover them).
inline std::optional<size_t> min_cover_size(const pscsel::CoverageTable& coverage) {
  const size_t n = coverage.universe.size();
  std::vector<uint32_t> masks;
  for (const auto& [trace, ticks] : coverage.ticks) {
    if (coverage.agnostic.count(trace) || ticks.empty()) continue;
    uint32_t m = 0;
    for (const size_t p : ticks) m |= 1u << p;
    masks.push_back(m);
  }
  if (masks.empty()) return 0;
  std::optional<size_t> best;
  for (uint32_t subset = 1; subset < (1u << n); ++subset) {
    const size_t size = static_cast<size_t>(__builtin_popcount(subset));
    if (best && size >= *best) continue;
    bool covers = true;
    for (const uint32_t m : masks) {
      if ((m & subset) == 0) {
        covers = false;
        break;
      }
    }
    if (covers) best = size;
  }
  return best;
}

// ── Random suites for codec fuzzing ──────────────────────────────

inline std::unique_ptr<train::TreeNode> random_tree_node(rng::Stream& stream, size_t n_features,
                                                         size_t max_splits, size_t depth, size_t max_depth) {
  auto node = std::make_unique<train::TreeNode>();
  const bool split = max_splits > 0 && depth < max_depth && stream.next_double() < 0.7;
  if (!split) {
    node->probability = stream.next_double();
    return node;
  }
  node->feature = static_cast<int>(stream.index(n_features));
  node->threshold = stream.next_double() * 100.0;
  const size_t left_budget = stream.index(max_splits);
  node->left = random_tree_node(stream, n_features, left_budget, depth + 1, max_depth);
  node->right = random_tree_node(stream, n_features, max_splits - 1 - left_budget, depth + 1, max_depth);
  return node;
}

inline train::Suite random_suite(rng::Stream& stream, size_t n_classes, size_t n_trees, size_t n_features,
                                 size_t max_splits_per_tree, size_t max_depth = 10) {
  train::Suite suite;
  suite.hyperparams.n_estimators = n_trees;
  suite.hyperparams.max_depth = max_depth;
  for (size_t f = 0; f < n_features; ++f) {
    suite.feature_catalog.push_back(EventId{f, "EV_" + std::to_string(f)});
    suite.feature_train_max.push_back(100.0);
  }
  const auto& space = full_psc_space();
  for (size_t c = 0; c < n_classes; ++c) suite.pscs.add(space.at(c));
  for (size_t c = 0; c < n_classes; ++c) {
    train::Forest forest;
    forest.class_index = c;
    for (size_t t = 0; t < n_trees; ++t) {
      forest.trees.push_back(
          train::Tree{random_tree_node(stream, n_features, max_splits_per_tree, 0, max_depth)});
    }
    suite.forests.push_back(std::move(forest));
  }
  return suite;
}

}  // namespace testutil
