#include "suitap/nodemem.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "suitap/errors.hpp"

namespace suitap::nodemem {

namespace {

constexpr uint64_t kMask3 = 0x7;
constexpr uint64_t kMask12 = 0xfff;
constexpr uint64_t kMask16 = 0xffff;

}  // namespace

uint64_t NodeMemEntry::pack44() const {
  return (static_cast<uint64_t>(hpc_id & kMask3) << 41) |
         (static_cast<uint64_t>(threshold) << 25) |
         (static_cast<uint64_t>(lnv & kMask12) << 13) |
         (static_cast<uint64_t>(rnv & kMask12) << 1) |
         static_cast<uint64_t>(is_leaf ? 1 : 0);
}

NodeMemEntry NodeMemEntry::unpack44(uint64_t bits) {
  NodeMemEntry e;
  e.hpc_id = static_cast<uint8_t>((bits >> 41) & kMask3);
  e.threshold = static_cast<uint16_t>((bits >> 25) & kMask16);
  e.lnv = static_cast<uint16_t>((bits >> 13) & kMask12);
  e.rnv = static_cast<uint16_t>((bits >> 1) & kMask12);
  e.is_leaf = (bits & 1) != 0;
  return e;
}

std::vector<uint8_t> NodeMemImage::to_bytes() const {
  std::vector<uint8_t> out;
  out.reserve(entries_.size() * kEntryBytes);
  for (const auto& e : entries_) {
    const uint64_t v = e.pack44() << 4;  // left-aligned in 48 bits
    for (int shift = 40; shift >= 0; shift -= 8) {
      out.push_back(static_cast<uint8_t>((v >> shift) & 0xff));
    }
  }
  return out;
}

NodeMemImage NodeMemImage::from_bytes(std::span<const uint8_t> bytes) {
  if (bytes.size() % kEntryBytes != 0) {
    throw ModelError("node image: byte length " + std::to_string(bytes.size()) + " is not a multiple of " +
                     std::to_string(kEntryBytes));
  }
  std::vector<NodeMemEntry> entries;
  entries.reserve(bytes.size() / kEntryBytes);
  for (size_t i = 0; i < bytes.size(); i += kEntryBytes) {
    uint64_t v = 0;
    for (size_t b = 0; b < kEntryBytes; ++b) v = (v << 8) | bytes[i + b];
    if ((v & 0xf) != 0) throw ModelError("node image: nonzero pad bits in entry " + std::to_string(i / kEntryBytes));
    entries.push_back(NodeMemEntry::unpack44(v >> 4));
  }
  return NodeMemImage(std::move(entries));
}

uint16_t RitEntry::pack13() const {
  return static_cast<uint16_t>((valid ? 1u << 12 : 0u) | (root_index & kMask12));
}

RitEntry RitEntry::unpack13(uint16_t bits) {
  RitEntry e;
  e.valid = (bits & (1u << 12)) != 0;
  e.root_index = bits & kMask12;
  if (!e.valid && e.root_index != 0) throw ModelError("RIT: invalid entry must read as zero");
  return e;
}

uint16_t quantize_threshold(double value, double scale) {
  const double code = std::round(value / scale);
  if (code >= 65535.0) return 65535;
  if (code <= 0.0) return 0;
  return static_cast<uint16_t>(code);
}

uint16_t encode_probability(double p) {
  return static_cast<uint16_t>(std::llround(p * static_cast<double>(kProbDenominator)));
}

namespace {

QuantMeta meta_from_maxima(const train::Suite& suite, const std::vector<double>& maxima) {
  QuantMeta meta;
  meta.feature_order = suite.feature_catalog;
  meta.feature_scale.reserve(maxima.size());
  for (const double m : maxima) {
    meta.feature_scale.push_back((m > 0.0 ? m : 1.0) / 65535.0);
  }
  meta.pscs = suite.pscs;
  meta.n_estimators = suite.hyperparams.n_estimators;
  return meta;
}

}  // namespace

QuantMeta make_quant_meta(const train::Suite& suite, const Dataset& train) {
  std::vector<size_t> src;
  for (const auto& f : suite.feature_catalog) {
    const auto idx = train.events.index_of(f.name);
    if (!idx) throw DataError("quantize: feature '" + f.name + "' not in dataset catalog");
    src.push_back(*idx);
  }
  std::vector<double> maxima(src.size(), 0.0);
  for (const auto& w : train.windows) {
    for (size_t f = 0; f < src.size(); ++f) maxima[f] = std::max(maxima[f], w.epti[src[f]]);
  }
  return meta_from_maxima(suite, maxima);
}

QuantMeta make_quant_meta(const train::Suite& suite) {
  if (suite.feature_train_max.size() != suite.feature_catalog.size()) {
    throw DataError("quantize: suite carries no per-feature training maxima");
  }
  return meta_from_maxima(suite, suite.feature_train_max);
}

namespace {

// Pre-order emission; children always land after their parent, which keeps
// every link forward-only.
void emit_node(const train::TreeNode* node, const QuantMeta& meta, std::vector<NodeMemEntry>& out) {
  const size_t self = out.size();
  if (self >= kNodeCapacity) throw ModelError("node image: capacity of " + std::to_string(kNodeCapacity) + " nodes exceeded");
  out.emplace_back();
  if (node->is_leaf()) {
    out[self].is_leaf = true;
    out[self].lnv = encode_probability(node->probability);
    return;
  }
  out[self].hpc_id = static_cast<uint8_t>(node->feature);
  out[self].threshold =
      quantize_threshold(node->threshold, meta.feature_scale[static_cast<size_t>(node->feature)]);
  const size_t left = out.size();
  emit_node(node->left.get(), meta, out);
  const size_t right = out.size();
  emit_node(node->right.get(), meta, out);
  out[self].lnv = static_cast<uint16_t>(left);
  out[self].rnv = static_cast<uint16_t>(right);
}

}  // namespace

ModelBundle compile_suite(const train::Suite& suite, const QuantMeta& meta) {
  if (suite.feature_catalog.size() > kMaxFeatures) {
    throw ModelError("node image: " + std::to_string(suite.feature_catalog.size()) +
                     " features exceed the 3-bit HPC ID range of " + std::to_string(kMaxFeatures));
  }
  const size_t total = suite.total_nodes();
  if (total > kNodeCapacity) {
    throw ModelError("node image: suite holds " + std::to_string(total) + " nodes, capacity is " +
                     std::to_string(kNodeCapacity));
  }

  ModelBundle bundle;
  bundle.meta = meta;
  bundle.rit.n_classes = suite.forests.size();
  bundle.rit.trees_per_class = meta.n_estimators;
  std::vector<NodeMemEntry> entries;
  entries.reserve(total);
  for (const auto& forest : suite.forests) {
    if (forest.trees.size() > meta.n_estimators) {
      throw ModelError("node image: forest " + std::to_string(forest.class_index) + " holds " +
                       std::to_string(forest.trees.size()) + " trees, RIT allows " +
                       std::to_string(meta.n_estimators));
    }
    for (const auto& tree : forest.trees) {
      RitEntry slot;
      slot.valid = true;
      slot.root_index = static_cast<uint16_t>(entries.size());
      bundle.rit.entries.push_back(slot);
      emit_node(tree.root.get(), meta, entries);
    }
    for (size_t t = forest.trees.size(); t < meta.n_estimators; ++t) {
      bundle.rit.entries.push_back(RitEntry{});
    }
  }
  bundle.image = NodeMemImage(std::move(entries));
  return bundle;
}

ModelBundle compile_suite(const train::Suite& suite, const Dataset& train) {
  return compile_suite(suite, make_quant_meta(suite, train));
}

namespace {

std::unique_ptr<train::TreeNode> decode_node(const NodeMemImage& image, size_t index, const QuantMeta& meta,
                                             size_t depth_guard) {
  if (index >= image.size()) {
    throw ModelError("node image: link to node " + std::to_string(index) + " is out of range");
  }
  if (depth_guard > image.size()) {
    throw ModelError("node image: traversal exceeded node count; image is cyclic");
  }
  const NodeMemEntry& e = image.at(index);
  auto node = std::make_unique<train::TreeNode>();
  if (e.is_leaf) {
    node->probability = static_cast<double>(e.lnv) / static_cast<double>(meta.probability_denominator);
    if (e.rnv != 0) throw ModelError("node image: leaf node " + std::to_string(index) + " has nonzero RNV");
    return node;
  }
  if (e.hpc_id >= meta.feature_order.size()) {
    throw ModelError("node image: node " + std::to_string(index) + " names HPC ID " + std::to_string(e.hpc_id) +
                     " beyond the feature order");
  }
  if (e.lnv <= index || e.rnv <= index) {
    throw ModelError("node image: node " + std::to_string(index) + " has a non-forward link");
  }
  node->feature = e.hpc_id;
  node->threshold = static_cast<double>(e.threshold) * meta.feature_scale[e.hpc_id];
  node->left = decode_node(image, e.lnv, meta, depth_guard + 1);
  node->right = decode_node(image, e.rnv, meta, depth_guard + 1);
  return node;
}

}  // namespace

train::Suite decode_image(const ModelBundle& bundle) {
  const auto& rit = bundle.rit;
  if (rit.n_classes == 0 || rit.trees_per_class == 0 ||
      rit.entries.size() != rit.n_classes * rit.trees_per_class) {
    throw ModelError("node image: RIT shape is inconsistent");
  }
  train::Suite suite;
  suite.feature_catalog = bundle.meta.feature_order;
  suite.pscs = bundle.meta.pscs;
  suite.hyperparams.n_estimators = rit.trees_per_class;
  suite.feature_train_max.reserve(bundle.meta.feature_scale.size());
  for (const double s : bundle.meta.feature_scale) suite.feature_train_max.push_back(s * 65535.0);

  for (size_t c = 0; c < rit.n_classes; ++c) {
    train::Forest forest;
    forest.class_index = c;
    for (size_t t = 0; t < rit.trees_per_class; ++t) {
      const RitEntry& slot = rit.entries[c * rit.trees_per_class + t];
      if (!slot.valid) continue;
      forest.trees.push_back(train::Tree{decode_node(bundle.image, slot.root_index, bundle.meta, 0)});
    }
    suite.forests.push_back(std::move(forest));
  }
  size_t max_depth = 0;
  for (const auto& f : suite.forests) {
    for (const auto& t : f.trees) max_depth = std::max(max_depth, t.depth());
  }
  suite.hyperparams.max_depth = std::max<size_t>(max_depth, 1);
  suite.hyperparams.total_node_budget = bundle.image.size();
  return suite;
}

std::vector<uint16_t> quantize_features(const QuantMeta& meta, std::span<const double> features) {
  if (features.size() < meta.feature_order.size()) {
    throw DataError("quantize: feature vector shorter than the model feature order");
  }
  std::vector<uint16_t> codes(meta.feature_order.size());
  for (size_t f = 0; f < codes.size(); ++f) codes[f] = quantize_threshold(features[f], meta.feature_scale[f]);
  return codes;
}

// ── Bundle persistence ───────────────────────────────────────────

namespace {

constexpr char kMagic[4] = {'S', 'U', 'I', 'T'};
constexpr uint8_t kVersion = 1;

void put_u16le(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xff));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

uint16_t get_u16le(std::span<const uint8_t> in, size_t offset) {
  return static_cast<uint16_t>(in[offset] | (in[offset + 1] << 8));
}

}  // namespace

void save_bundle(const ModelBundle& bundle, const std::string& prefix) {
  std::vector<uint8_t> bytes;
  bytes.insert(bytes.end(), kMagic, kMagic + 4);
  bytes.push_back(kVersion);
  put_u16le(bytes, static_cast<uint16_t>(bundle.image.size()));
  put_u16le(bytes, static_cast<uint16_t>(bundle.rit.entries.size()));
  for (const auto& slot : bundle.rit.entries) put_u16le(bytes, slot.pack13());
  const auto image_bytes = bundle.image.to_bytes();
  bytes.insert(bytes.end(), image_bytes.begin(), image_bytes.end());

  const std::string bin_path = prefix + ".nodemem";
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw DataError("cannot write '" + bin_path + "'");
  bin.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!bin) throw DataError("failed while writing '" + bin_path + "'");

  nlohmann::ordered_json mj;
  mj["format_version"] = bundle.meta.format_version;
  mj["probability_denominator"] = bundle.meta.probability_denominator;
  std::vector<std::string> names;
  for (const auto& f : bundle.meta.feature_order) names.push_back(f.name);
  mj["feature_order"] = names;
  mj["feature_scale"] = bundle.meta.feature_scale;
  mj["pscs"] = bundle.meta.pscs.ids();
  mj["n_estimators"] = bundle.meta.n_estimators;
  const std::string meta_path = prefix + ".meta.json";
  std::ofstream meta(meta_path);
  if (!meta) throw DataError("cannot write '" + meta_path + "'");
  meta << mj.dump(2) << '\n';
  if (!meta) throw DataError("failed while writing '" + meta_path + "'");
}

ModelBundle load_bundle(const std::string& prefix) {
  const std::string bin_path = prefix + ".nodemem";
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw DataError("cannot open '" + bin_path + "'");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

  if (bytes.size() < 9 || !std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw ModelError(bin_path + ": not a node image (bad magic)");
  }
  if (bytes[4] != kVersion) throw ModelError(bin_path + ": unsupported version " + std::to_string(bytes[4]));
  const uint16_t node_count = get_u16le(bytes, 5);
  const uint16_t rit_count = get_u16le(bytes, 7);
  const size_t expected = 9 + static_cast<size_t>(rit_count) * 2 + static_cast<size_t>(node_count) * kEntryBytes;
  if (bytes.size() != expected) {
    throw ModelError(bin_path + ": file length " + std::to_string(bytes.size()) + " does not match header (expected " +
                     std::to_string(expected) + ")");
  }

  ModelBundle bundle;
  for (size_t i = 0; i < rit_count; ++i) {
    bundle.rit.entries.push_back(RitEntry::unpack13(get_u16le(bytes, 9 + i * 2)));
  }
  bundle.image = NodeMemImage::from_bytes(
      std::span<const uint8_t>(bytes).subspan(9 + static_cast<size_t>(rit_count) * 2));

  const std::string meta_path = prefix + ".meta.json";
  std::ifstream meta(meta_path);
  if (!meta) throw DataError("cannot open '" + meta_path + "'");
  nlohmann::json mj;
  try {
    meta >> mj;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(meta_path + ": invalid JSON: " + e.what());
  }
  bundle.meta.format_version = mj.at("format_version").get<int>();
  bundle.meta.probability_denominator = mj.at("probability_denominator").get<uint32_t>();
  for (const auto& name : mj.at("feature_order").get<std::vector<std::string>>()) {
    bundle.meta.feature_order.push_back(EventId{bundle.meta.feature_order.size(), name});
  }
  bundle.meta.feature_scale = mj.at("feature_scale").get<std::vector<double>>();
  if (bundle.meta.feature_scale.size() != bundle.meta.feature_order.size()) {
    throw DataError(meta_path + ": feature_scale does not align with feature_order");
  }
  bundle.meta.pscs = PscCatalog::from_ids(mj.at("pscs").get<std::vector<std::string>>());
  bundle.meta.n_estimators = mj.at("n_estimators").get<size_t>();
  if (bundle.meta.n_estimators == 0 || bundle.meta.pscs.empty() ||
      bundle.rit.entries.size() != bundle.meta.pscs.size() * bundle.meta.n_estimators) {
    throw ModelError(bin_path + ": RIT entry count does not match the sidecar catalog shape");
  }
  bundle.rit.n_classes = bundle.meta.pscs.size();
  bundle.rit.trees_per_class = bundle.meta.n_estimators;
  return bundle;
}

}  // namespace suitap::nodemem
