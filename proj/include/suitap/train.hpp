#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "suitap/core.hpp"
#include "suitap/rng.hpp"

namespace suitap::train {

// ── Labels ───────────────────────────────────────────────────────

// One suitability bit per (window, class): a PSC is suitable for a window
// when its IPC is within `epsilon` (relative) of the window's best IPC.
struct LabelMatrix {
  double epsilon = 0.005;
  std::vector<std::vector<uint8_t>> bits;  // [window][class]
};

LabelMatrix label_windows(const Dataset& dataset, double epsilon = 0.005);

// ── Trees and forests ────────────────────────────────────────────

struct TreeNode {
  int feature = -1;      // index into the suite feature catalog (internal nodes)
  double threshold = 0.0;
  std::unique_ptr<TreeNode> left, right;
  double probability = 0.0;  // leaf payload: positive fraction of its samples

  bool is_leaf() const { return left == nullptr; }
};

struct Tree {
  std::unique_ptr<TreeNode> root;

  size_t node_count() const;
  size_t depth() const;  // edges on the longest root-to-leaf path
  Tree clone() const;
};

struct Forest {
  size_t class_index = 0;
  std::vector<Tree> trees;

  size_t node_count() const;
};

struct Hyperparams {
  size_t n_estimators = 5;
  size_t max_depth = 10;
  size_t total_node_budget = 2250;
  size_t min_leaf_samples = 5;
  bool operator==(const Hyperparams&) const = default;
};

struct Suite {
  std::vector<Forest> forests;  // one per PSC, catalog order
  Hyperparams hyperparams;
  std::vector<EventId> feature_catalog;  // model feature order; index == position
  PscCatalog pscs;
  uint64_t rng_seed = 0;
  std::vector<double> feature_train_max;  // per-feature max E-PTI seen in training

  size_t total_nodes() const;
  Suite clone() const;
};

// ── Training data ────────────────────────────────────────────────

// One decision instance: this window's features paired with the NEXT
// window's suitability labels and IPC outcomes.
struct TrainingRow {
  std::string trace_id;       // anchor window identity
  uint64_t window_index = 0;
  std::vector<double> features;   // projected onto the feature catalog
  std::vector<uint8_t> labels;    // next window, per class
  std::vector<double> next_ipc;   // next window, per class
};

struct TrainingTable {
  std::vector<EventId> feature_catalog;
  PscCatalog pscs;
  std::vector<TrainingRow> rows;
};

// Pairs each window with its successor (same trace, window_index + 1);
// windows without a successor are dropped. `features` name events of the
// dataset catalog.
TrainingTable build_training_table(const Dataset& dataset, const LabelMatrix& labels,
                                   const std::vector<EventId>& features);

TrainingTable select_rows(const TrainingTable& table, const std::vector<size_t>& rows);

// ── CART primitives ──────────────────────────────────────────────

// 1 - p^2 - q^2 over a binary sample set. Errors on an empty set.
double gini(uint64_t positives, uint64_t negatives);

struct Split {
  size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;           // parent gini minus weighted child gini
  double weighted_gini = 0.0;  // (nL*gini_L + nR*gini_R) / n
};

// Exhaustive scan over midpoints between consecutive distinct values of each
// feature in `feature_subset` (ascending indices). Returns the split with the
// minimum weighted child Gini, ties to (lower feature, lower threshold);
// absent when nothing reduces impurity or min_leaf_samples cannot hold.
std::optional<Split> best_split(const std::vector<const std::vector<double>*>& feature_rows,
                                const std::vector<uint8_t>& row_labels,
                                std::span<const size_t> rows,
                                std::span<const size_t> feature_subset,
                                size_t min_leaf_samples);

struct GrowConfig {
  size_t max_depth = 10;
  size_t node_budget = 45;  // total nodes this tree may hold
  size_t min_leaf_samples = 5;
  size_t n_features = 0;
  size_t feature_subset_size = 0;  // 0 means all features
};

// Best-first CART growth: expandable leaves are split in order of total
// impurity decrease until the node budget, depth limit, or sample minimum
// stops them. One feature subset is drawn per leaf.
Tree grow_tree(const std::vector<const std::vector<double>*>& feature_rows,
               const std::vector<uint8_t>& row_labels,
               std::span<const size_t> rows,
               const GrowConfig& config, rng::Stream& stream);

// One forest per class, each tree on a bootstrap resample of the table rows.
// The node budget divides evenly: total / n_classes / n_estimators per tree.
Suite train_suite(const TrainingTable& table, const Hyperparams& hp, uint64_t seed);

// Float-path inference: per-forest mean of tree probabilities, argmax class
// (ties to the lower index). Returns (class index, probability).
std::pair<size_t, double> evaluate_float(const Suite& suite, std::span<const double> features);

// ── Model selection ──────────────────────────────────────────────

struct CvOutcome {
  size_t best_index = 0;
  Hyperparams best;
  std::vector<double> mean_ipc;  // per grid setting, pooled over held-out rows
};

// K-fold search scored by achieved next-window IPC on held-out rows, not by
// label accuracy. Ties go to the smaller total node budget.
CvOutcome cross_validate(const TrainingTable& table, size_t folds,
                         const std::vector<Hyperparams>& grid, uint64_t seed);

// ── Pipeline and serialization ───────────────────────────────────

struct PipelineOptions {
  std::vector<std::string> feature_names;  // empty -> all dataset events
  std::vector<std::string> psc_ids;        // empty -> dataset catalog
  double label_epsilon = 0.005;
  Hyperparams hp;
  std::vector<Hyperparams> grid;  // when non-empty, cross-validate first
  size_t folds = 10;
  double train_fraction = 0.10;
  uint64_t seed = 0;
};

struct PipelineOutput {
  Suite suite;
  nlohmann::ordered_json report;
};

// label -> pair -> split -> (optional CV) -> final training.
PipelineOutput train_pipeline(const Dataset& dataset, const PipelineOptions& options);

nlohmann::ordered_json suite_to_json(const Suite& suite);
Suite suite_from_json(const nlohmann::json& j);
void save_suite(const Suite& suite, const std::string& path);
Suite load_suite(const std::string& path);

}  // namespace suitap::train
