#include "suitap/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "suitap/errors.hpp"
#include "suitap/ingest.hpp"

namespace suitap::train {

// ── Labels ───────────────────────────────────────────────────────

LabelMatrix label_windows(const Dataset& dataset, double epsilon) {
  if (dataset.windows.empty()) throw DataError("label windows: empty dataset");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw UsageError("label epsilon must lie in [0, 1)");
  LabelMatrix labels;
  labels.epsilon = epsilon;
  labels.bits.reserve(dataset.windows.size());
  for (const auto& w : dataset.windows) {
    const double best = *std::max_element(w.ipc_by_psc.begin(), w.ipc_by_psc.end());
    std::vector<uint8_t> row(w.ipc_by_psc.size(), 0);
    for (size_t c = 0; c < row.size(); ++c) {
      row[c] = w.ipc_by_psc[c] >= (1.0 - epsilon) * best ? 1 : 0;
    }
    labels.bits.push_back(std::move(row));
  }
  return labels;
}

// ── Trees ────────────────────────────────────────────────────────

namespace {

size_t count_nodes(const TreeNode* node) {
  if (!node) return 0;
  return 1 + count_nodes(node->left.get()) + count_nodes(node->right.get());
}

size_t node_depth(const TreeNode* node) {
  if (!node || node->is_leaf()) return 0;
  return 1 + std::max(node_depth(node->left.get()), node_depth(node->right.get()));
}

std::unique_ptr<TreeNode> clone_node(const TreeNode* node) {
  if (!node) return nullptr;
  auto out = std::make_unique<TreeNode>();
  out->feature = node->feature;
  out->threshold = node->threshold;
  out->probability = node->probability;
  out->left = clone_node(node->left.get());
  out->right = clone_node(node->right.get());
  return out;
}

}  // namespace

size_t Tree::node_count() const { return count_nodes(root.get()); }
size_t Tree::depth() const { return node_depth(root.get()); }
Tree Tree::clone() const { return Tree{clone_node(root.get())}; }

size_t Forest::node_count() const {
  size_t n = 0;
  for (const auto& t : trees) n += t.node_count();
  return n;
}

size_t Suite::total_nodes() const {
  size_t n = 0;
  for (const auto& f : forests) n += f.node_count();
  return n;
}

Suite Suite::clone() const {
  Suite out;
  out.hyperparams = hyperparams;
  out.feature_catalog = feature_catalog;
  out.pscs = pscs;
  out.rng_seed = rng_seed;
  out.feature_train_max = feature_train_max;
  out.forests.reserve(forests.size());
  for (const auto& f : forests) {
    Forest fc;
    fc.class_index = f.class_index;
    for (const auto& t : f.trees) fc.trees.push_back(t.clone());
    out.forests.push_back(std::move(fc));
  }
  return out;
}

// ── Training data ────────────────────────────────────────────────

TrainingTable build_training_table(const Dataset& dataset, const LabelMatrix& labels,
                                   const std::vector<EventId>& features) {
  if (labels.bits.size() != dataset.windows.size()) {
    throw DataError("training table: label matrix does not align with dataset windows");
  }
  if (features.empty()) throw UsageError("training table: no features selected");

  TrainingTable table;
  table.pscs = dataset.pscs;
  std::vector<size_t> src;
  src.reserve(features.size());
  for (const auto& f : features) {
    const auto idx = dataset.events.index_of(f.name);
    if (!idx) throw DataError("training table: event '" + f.name + "' not in dataset catalog");
    src.push_back(*idx);
    table.feature_catalog.push_back(EventId{table.feature_catalog.size(), f.name});
  }

  for (size_t i = 0; i + 1 < dataset.windows.size(); ++i) {
    const auto& cur = dataset.windows[i];
    const auto& next = dataset.windows[i + 1];
    if (next.trace_id != cur.trace_id || next.window_index != cur.window_index + 1) continue;
    TrainingRow row;
    row.trace_id = cur.trace_id;
    row.window_index = cur.window_index;
    row.features.reserve(src.size());
    for (const size_t s : src) row.features.push_back(cur.epti[s]);
    row.labels = labels.bits[i + 1];
    row.next_ipc = next.ipc_by_psc;
    table.rows.push_back(std::move(row));
  }
  return table;
}

TrainingTable select_rows(const TrainingTable& table, const std::vector<size_t>& rows) {
  TrainingTable out;
  out.feature_catalog = table.feature_catalog;
  out.pscs = table.pscs;
  out.rows.reserve(rows.size());
  for (const size_t r : rows) out.rows.push_back(table.rows.at(r));
  return out;
}

// ── CART primitives ──────────────────────────────────────────────

double gini(uint64_t positives, uint64_t negatives) {
  const uint64_t n = positives + negatives;
  if (n == 0) throw DataError("gini: empty sample set");
  const double p = static_cast<double>(positives) / static_cast<double>(n);
  const double q = 1.0 - p;
  return 1.0 - p * p - q * q;
}

std::optional<Split> best_split(const std::vector<const std::vector<double>*>& feature_rows,
                                const std::vector<uint8_t>& row_labels,
                                std::span<const size_t> rows,
                                std::span<const size_t> feature_subset,
                                size_t min_leaf_samples) {
  const size_t n = rows.size();
  const size_t min_leaf = std::max<size_t>(min_leaf_samples, 1);
  if (n < 2 * min_leaf) return std::nullopt;

  uint64_t total_pos = 0;
  for (const size_t r : rows) total_pos += row_labels[r];
  if (total_pos == 0 || total_pos == n) return std::nullopt;
  const double parent = gini(total_pos, n - total_pos);

  bool found = false;
  Split best;
  std::vector<std::pair<double, uint8_t>> vals(n);
  for (const size_t f : feature_subset) {
    for (size_t i = 0; i < n; ++i) {
      vals[i] = {(*feature_rows[rows[i]])[f], row_labels[rows[i]]};
    }
    std::sort(vals.begin(), vals.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    uint64_t left_pos = 0;
    size_t i = 0;
    while (i < n) {
      size_t j = i;
      while (j < n && vals[j].first == vals[i].first) left_pos += vals[j++].second;
      if (j == n) break;  // no cut after the last value group
      const size_t left_n = j;
      const size_t right_n = n - left_n;
      const double lo = vals[i].first;
      const double t = (lo + vals[j].first) / 2.0;
      i = j;
      if (!(t > lo)) continue;  // adjacent representable values
      if (left_n < min_leaf || right_n < min_leaf) continue;
      const uint64_t right_pos = total_pos - left_pos;
      const double w = (static_cast<double>(left_n) * gini(left_pos, left_n - left_pos) +
                        static_cast<double>(right_n) * gini(right_pos, right_n - right_pos)) /
                       static_cast<double>(n);
      if (!found || w < best.weighted_gini) {
        best = Split{f, t, parent - w, w};
        found = true;
      }
    }
  }
  if (!found || !(best.weighted_gini < parent)) return std::nullopt;
  return best;
}

namespace {

double positive_fraction(const std::vector<uint8_t>& row_labels, const std::vector<size_t>& rows) {
  uint64_t pos = 0;
  for (const size_t r : rows) pos += row_labels[r];
  return static_cast<double>(pos) / static_cast<double>(rows.size());
}

std::vector<size_t> draw_feature_subset(rng::Stream& stream, size_t n_features, size_t subset_size) {
  if (subset_size == 0 || subset_size >= n_features) {
    std::vector<size_t> all(n_features);
    for (size_t i = 0; i < n_features; ++i) all[i] = i;
    return all;
  }
  std::vector<size_t> idx(n_features);
  for (size_t i = 0; i < n_features; ++i) idx[i] = i;
  for (size_t i = 0; i < subset_size; ++i) {
    const size_t j = i + stream.index(n_features - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(subset_size);
  std::sort(idx.begin(), idx.end());
  return idx;
}

struct Candidate {
  double priority = 0.0;  // impurity decrease times sample count
  uint64_t seq = 0;
  TreeNode* node = nullptr;
  size_t depth = 0;
  std::vector<size_t> rows;
  Split split;
};

struct CandidateLess {
  bool operator()(const Candidate& a, const Candidate& b) const {
    if (a.priority != b.priority) return a.priority < b.priority;
    return a.seq > b.seq;  // earlier candidates win ties
  }
};

}  // namespace

Tree grow_tree(const std::vector<const std::vector<double>*>& feature_rows,
               const std::vector<uint8_t>& row_labels,
               std::span<const size_t> rows,
               const GrowConfig& config, rng::Stream& stream) {
  if (rows.empty()) throw DataError("grow tree: empty sample set");

  Tree tree;
  tree.root = std::make_unique<TreeNode>();
  size_t node_count = 1;

  std::vector<Candidate> heap;
  uint64_t seq = 0;

  auto consider = [&](TreeNode* node, size_t depth, std::vector<size_t>&& node_rows) {
    node->probability = positive_fraction(row_labels, node_rows);
    if (depth >= config.max_depth) return;
    if (node_rows.size() < 2 * std::max<size_t>(config.min_leaf_samples, 1)) return;
    const auto subset = draw_feature_subset(stream, config.n_features, config.feature_subset_size);
    const auto split = best_split(feature_rows, row_labels, node_rows, subset, config.min_leaf_samples);
    if (!split) return;
    Candidate c;
    c.priority = split->gain * static_cast<double>(node_rows.size());
    c.seq = seq++;
    c.node = node;
    c.depth = depth;
    c.rows = std::move(node_rows);
    c.split = *split;
    heap.push_back(std::move(c));
    std::push_heap(heap.begin(), heap.end(), CandidateLess{});
  };

  consider(tree.root.get(), 0, std::vector<size_t>(rows.begin(), rows.end()));

  while (!heap.empty() && node_count + 2 <= config.node_budget) {
    std::pop_heap(heap.begin(), heap.end(), CandidateLess{});
    Candidate c = std::move(heap.back());
    heap.pop_back();

    c.node->feature = static_cast<int>(c.split.feature);
    c.node->threshold = c.split.threshold;
    c.node->left = std::make_unique<TreeNode>();
    c.node->right = std::make_unique<TreeNode>();
    node_count += 2;

    std::vector<size_t> left_rows, right_rows;
    for (const size_t r : c.rows) {
      if ((*feature_rows[r])[c.split.feature] < c.split.threshold) {
        left_rows.push_back(r);
      } else {
        right_rows.push_back(r);
      }
    }
    consider(c.node->left.get(), c.depth + 1, std::move(left_rows));
    consider(c.node->right.get(), c.depth + 1, std::move(right_rows));
  }
  return tree;
}

Suite train_suite(const TrainingTable& table, const Hyperparams& hp, uint64_t seed) {
  const size_t n_classes = table.pscs.size();
  if (n_classes == 0) throw DataError("train suite: training table has no classes");
  if (table.rows.empty()) throw DataError("train suite: training table has no rows");
  if (hp.n_estimators == 0) throw UsageError("train suite: n_estimators must be >= 1");
  if (hp.max_depth == 0) throw UsageError("train suite: max_depth must be >= 1");

  const size_t per_class_budget = hp.total_node_budget / n_classes;
  const size_t per_tree_budget = per_class_budget / hp.n_estimators;
  if (per_tree_budget < 1) {
    throw UsageError("train suite: node budget " + std::to_string(hp.total_node_budget) + " leaves less than one node per tree (" +
                     std::to_string(n_classes) + " classes x " + std::to_string(hp.n_estimators) + " estimators)");
  }

  const size_t n_features = table.feature_catalog.size();
  const size_t subset_size =
      static_cast<size_t>(std::ceil(std::sqrt(static_cast<double>(n_features))));
  const size_t n = table.rows.size();

  std::vector<const std::vector<double>*> feature_rows;
  feature_rows.reserve(n);
  for (const auto& row : table.rows) feature_rows.push_back(&row.features);

  Suite suite;
  suite.hyperparams = hp;
  suite.feature_catalog = table.feature_catalog;
  suite.pscs = table.pscs;
  suite.rng_seed = seed;

  const rng::Stream base(seed);
  for (size_t c = 0; c < n_classes; ++c) {
    std::vector<uint8_t> labels(n, 0);
    for (size_t r = 0; r < n; ++r) labels[r] = table.rows[r].labels[c];

    Forest forest;
    forest.class_index = c;
    const rng::Stream forest_stream = base.derive("forest:" + std::to_string(c));
    for (size_t t = 0; t < hp.n_estimators; ++t) {
      rng::Stream tree_stream = forest_stream.derive("tree:" + std::to_string(t));
      std::vector<size_t> bootstrap(n);
      for (size_t i = 0; i < n; ++i) bootstrap[i] = tree_stream.index(n);
      GrowConfig cfg;
      cfg.max_depth = hp.max_depth;
      cfg.node_budget = per_tree_budget;
      cfg.min_leaf_samples = hp.min_leaf_samples;
      cfg.n_features = n_features;
      cfg.feature_subset_size = subset_size;
      forest.trees.push_back(grow_tree(feature_rows, labels, bootstrap, cfg, tree_stream));
    }
    suite.forests.push_back(std::move(forest));
  }

  suite.feature_train_max.assign(n_features, 0.0);
  for (const auto& row : table.rows) {
    for (size_t f = 0; f < n_features; ++f) {
      suite.feature_train_max[f] = std::max(suite.feature_train_max[f], row.features[f]);
    }
  }
  return suite;
}

std::pair<size_t, double> evaluate_float(const Suite& suite, std::span<const double> features) {
  if (suite.forests.empty()) throw ModelError("evaluate: suite has no forests");
  if (features.size() < suite.feature_catalog.size()) {
    throw DataError("evaluate: feature vector shorter than the suite feature catalog");
  }
  size_t best_class = 0;
  double best_mean = -1.0;
  for (size_t c = 0; c < suite.forests.size(); ++c) {
    const auto& forest = suite.forests[c];
    double sum = 0.0;
    for (const auto& tree : forest.trees) {
      const TreeNode* node = tree.root.get();
      while (!node->is_leaf()) {
        node = features[static_cast<size_t>(node->feature)] < node->threshold ? node->left.get()
                                                                              : node->right.get();
      }
      sum += node->probability;
    }
    const double mean = sum / static_cast<double>(forest.trees.size());
    if (mean > best_mean) {
      best_mean = mean;
      best_class = c;
    }
  }
  return {best_class, best_mean};
}

// ── Model selection ──────────────────────────────────────────────

CvOutcome cross_validate(const TrainingTable& table, size_t folds,
                         const std::vector<Hyperparams>& grid, uint64_t seed) {
  if (folds < 2) throw UsageError("cross-validation: need at least 2 folds");
  if (grid.empty()) throw UsageError("cross-validation: empty hyperparameter grid");
  if (table.rows.size() < folds) throw DataError("cross-validation: fewer training rows than folds");

  const size_t n = table.rows.size();
  std::vector<size_t> perm(n);
  for (size_t i = 0; i < n; ++i) perm[i] = i;
  rng::Stream(seed).derive("cv-folds").shuffle(perm);
  std::vector<size_t> fold_of(n, 0);
  for (size_t i = 0; i < n; ++i) fold_of[perm[i]] = i % folds;

  CvOutcome outcome;
  outcome.mean_ipc.assign(grid.size(), 0.0);
  const rng::Stream base(seed);
  for (size_t g = 0; g < grid.size(); ++g) {
    double sum = 0.0;
    size_t count = 0;
    for (size_t f = 0; f < folds; ++f) {
      std::vector<size_t> train_rows;
      train_rows.reserve(n);
      for (size_t i = 0; i < n; ++i) {
        if (fold_of[i] != f) train_rows.push_back(i);
      }
      const TrainingTable sub = select_rows(table, train_rows);
      const uint64_t fold_seed =
          base.derive_seed("cv:g=" + std::to_string(g) + ":f=" + std::to_string(f));
      const Suite suite = train_suite(sub, grid[g], fold_seed);
      for (size_t i = 0; i < n; ++i) {
        if (fold_of[i] != f) continue;
        const auto [cls, prob] = evaluate_float(suite, table.rows[i].features);
        sum += table.rows[i].next_ipc[cls];
        ++count;
      }
    }
    outcome.mean_ipc[g] = sum / static_cast<double>(count);
  }

  outcome.best_index = 0;
  for (size_t g = 1; g < grid.size(); ++g) {
    const double cur = outcome.mean_ipc[g];
    const double best = outcome.mean_ipc[outcome.best_index];
    if (cur > best || (cur == best && grid[g].total_node_budget < grid[outcome.best_index].total_node_budget)) {
      outcome.best_index = g;
    }
  }
  outcome.best = grid[outcome.best_index];
  return outcome;
}

// ── Pipeline ─────────────────────────────────────────────────────

PipelineOutput train_pipeline(const Dataset& dataset, const PipelineOptions& options) {
  Dataset ds = options.psc_ids.empty() ? dataset : restrict_pscs(dataset, PscCatalog::from_ids(options.psc_ids));

  std::vector<EventId> features;
  if (options.feature_names.empty()) {
    features = ds.events.events();
  } else {
    for (const auto& name : options.feature_names) {
      const auto idx = ds.events.index_of(name);
      if (!idx) throw DataError("train: feature '" + name + "' not in dataset catalog");
      features.push_back(ds.events.at(*idx));
    }
  }

  const LabelMatrix labels = label_windows(ds, options.label_epsilon);
  const TrainingTable table = build_training_table(ds, labels, features);
  if (table.rows.empty()) throw DataError("train: dataset yields no next-window training pairs");

  const auto [train_ds, test_ds] = ingest::split_train_test(ds, options.train_fraction, options.seed);
  std::set<std::pair<std::string, uint64_t>> anchors;
  for (const auto& w : train_ds.windows) anchors.emplace(w.trace_id, w.window_index);
  std::vector<size_t> train_rows;
  for (size_t i = 0; i < table.rows.size(); ++i) {
    if (anchors.count({table.rows[i].trace_id, table.rows[i].window_index})) train_rows.push_back(i);
  }
  if (train_rows.empty()) throw DataError("train: training split yields no next-window pairs");
  const TrainingTable train_table = select_rows(table, train_rows);

  Hyperparams hp = options.hp;
  nlohmann::ordered_json cv_report;
  if (!options.grid.empty()) {
    const CvOutcome cv = cross_validate(train_table, options.folds, options.grid, options.seed);
    hp = cv.best;
    auto settings = nlohmann::ordered_json::array();
    for (size_t g = 0; g < options.grid.size(); ++g) {
      settings.push_back({{"n_estimators", options.grid[g].n_estimators},
                          {"max_depth", options.grid[g].max_depth},
                          {"total_node_budget", options.grid[g].total_node_budget},
                          {"min_leaf_samples", options.grid[g].min_leaf_samples},
                          {"mean_ipc", cv.mean_ipc[g]}});
    }
    cv_report = {{"folds", options.folds}, {"settings", std::move(settings)}, {"chosen", cv.best_index}};
  }

  PipelineOutput out;
  out.suite = train_suite(train_table, hp, options.seed);

  auto per_class = nlohmann::ordered_json::array();
  for (const auto& forest : out.suite.forests) per_class.push_back(forest.node_count());
  out.report = nlohmann::ordered_json{
      {"windows", ds.windows.size()},
      {"training_pairs", table.rows.size()},
      {"train_rows", train_rows.size()},
      {"label_epsilon", options.label_epsilon},
      {"train_fraction", options.train_fraction},
      {"seed", options.seed},
      {"features", [&] {
         std::vector<std::string> names;
         for (const auto& f : out.suite.feature_catalog) names.push_back(f.name);
         return names;
       }()},
      {"pscs", out.suite.pscs.ids()},
      {"hyperparams",
       {{"n_estimators", hp.n_estimators},
        {"max_depth", hp.max_depth},
        {"total_node_budget", hp.total_node_budget},
        {"min_leaf_samples", hp.min_leaf_samples}}},
      {"per_class_nodes", std::move(per_class)},
      {"total_nodes", out.suite.total_nodes()},
  };
  if (!cv_report.is_null()) out.report["cross_validation"] = std::move(cv_report);
  return out;
}

// ── Serialization ────────────────────────────────────────────────

namespace {

nlohmann::ordered_json node_to_json(const TreeNode* node) {
  if (node->is_leaf()) return {{"p", node->probability}};
  nlohmann::ordered_json j;
  j["f"] = node->feature;
  j["t"] = node->threshold;
  j["l"] = node_to_json(node->left.get());
  j["r"] = node_to_json(node->right.get());
  return j;
}

std::unique_ptr<TreeNode> node_from_json(const nlohmann::json& j, size_t n_features) {
  auto node = std::make_unique<TreeNode>();
  if (j.contains("p")) {
    node->probability = j.at("p").get<double>();
    if (!(node->probability >= 0.0 && node->probability <= 1.0)) {
      throw DataError("suite: leaf probability outside [0, 1]");
    }
    return node;
  }
  node->feature = j.at("f").get<int>();
  if (node->feature < 0 || static_cast<size_t>(node->feature) >= n_features) {
    throw DataError("suite: split feature index out of range");
  }
  node->threshold = j.at("t").get<double>();
  node->left = node_from_json(j.at("l"), n_features);
  node->right = node_from_json(j.at("r"), n_features);
  return node;
}

}  // namespace

nlohmann::ordered_json suite_to_json(const Suite& suite) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["rng_seed"] = suite.rng_seed;
  j["hyperparams"] = {{"n_estimators", suite.hyperparams.n_estimators},
                      {"max_depth", suite.hyperparams.max_depth},
                      {"total_node_budget", suite.hyperparams.total_node_budget},
                      {"min_leaf_samples", suite.hyperparams.min_leaf_samples}};
  std::vector<std::string> names;
  for (const auto& f : suite.feature_catalog) names.push_back(f.name);
  j["feature_catalog"] = names;
  j["feature_train_max"] = suite.feature_train_max;
  j["pscs"] = suite.pscs.ids();
  auto forests = nlohmann::ordered_json::array();
  for (const auto& forest : suite.forests) {
    auto trees = nlohmann::ordered_json::array();
    for (const auto& tree : forest.trees) trees.push_back(node_to_json(tree.root.get()));
    forests.push_back({{"class_index", forest.class_index}, {"trees", std::move(trees)}});
  }
  j["forests"] = std::move(forests);
  return j;
}

Suite suite_from_json(const nlohmann::json& j) {
  Suite suite;
  if (!j.is_object() || j.value("format_version", 0) != 1) {
    throw DataError("suite: unknown or missing format version");
  }
  suite.rng_seed = j.at("rng_seed").get<uint64_t>();
  const auto& hp = j.at("hyperparams");
  suite.hyperparams.n_estimators = hp.at("n_estimators").get<size_t>();
  suite.hyperparams.max_depth = hp.at("max_depth").get<size_t>();
  suite.hyperparams.total_node_budget = hp.at("total_node_budget").get<size_t>();
  suite.hyperparams.min_leaf_samples = hp.at("min_leaf_samples").get<size_t>();

  const auto names = j.at("feature_catalog").get<std::vector<std::string>>();
  for (const auto& name : names) suite.feature_catalog.push_back(EventId{suite.feature_catalog.size(), name});
  suite.feature_train_max = j.at("feature_train_max").get<std::vector<double>>();
  if (suite.feature_train_max.size() != suite.feature_catalog.size()) {
    throw DataError("suite: feature_train_max does not align with the feature catalog");
  }
  suite.pscs = PscCatalog::from_ids(j.at("pscs").get<std::vector<std::string>>());

  for (const auto& fj : j.at("forests")) {
    Forest forest;
    forest.class_index = fj.at("class_index").get<size_t>();
    for (const auto& tj : fj.at("trees")) {
      forest.trees.push_back(Tree{node_from_json(tj, suite.feature_catalog.size())});
    }
    suite.forests.push_back(std::move(forest));
  }
  if (suite.forests.size() != suite.pscs.size()) {
    throw DataError("suite: forest count does not match the PSC catalog");
  }
  return suite;
}

void save_suite(const Suite& suite, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << suite_to_json(suite).dump(2) << '\n';
  if (!out) throw DataError("failed while writing '" + path + "'");
}

Suite load_suite(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open suite file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  return suite_from_json(j);
}

}  // namespace suitap::train
