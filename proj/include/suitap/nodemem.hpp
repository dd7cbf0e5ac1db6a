#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "suitap/core.hpp"
#include "suitap/train.hpp"

namespace suitap::nodemem {

inline constexpr size_t kNodeCapacity = 2250;
inline constexpr size_t kMaxFeatures = 8;       // 3-bit HPC ID
inline constexpr uint32_t kProbDenominator = 4095;  // 12-bit probability code
inline constexpr size_t kEntryBits = 44;
inline constexpr size_t kEntryBytes = 6;  // 44 bits + 4 pad bits, byte aligned

// One packed tree node. Field order within the 44-bit entry, most
// significant first: HPC ID (3) | Threshold (16) | LNV (12) | RNV (12) |
// Type (1, 0 = internal, 1 = leaf). Internal nodes store forward-only child
// indices in LNV/RNV; leaves store the probability code in LNV with RNV,
// HPC ID, and Threshold zeroed.
struct NodeMemEntry {
  uint8_t hpc_id = 0;
  uint16_t threshold = 0;
  uint16_t lnv = 0;
  uint16_t rnv = 0;
  bool is_leaf = false;

  uint64_t pack44() const;
  static NodeMemEntry unpack44(uint64_t bits);
  bool operator==(const NodeMemEntry&) const = default;
};

class NodeMemImage {
 public:
  NodeMemImage() = default;
  explicit NodeMemImage(std::vector<NodeMemEntry> entries) : entries_(std::move(entries)) {}

  size_t size() const { return entries_.size(); }
  const NodeMemEntry& at(size_t i) const { return entries_.at(i); }
  const std::vector<NodeMemEntry>& entries() const { return entries_; }
  void push_back(const NodeMemEntry& e) { entries_.push_back(e); }

  // ceil(node_count * 44 / 8): the SRAM payload.
  size_t logical_size_bytes() const { return (entries_.size() * kEntryBits + 7) / 8; }
  // node_count * 6: the byte-aligned on-disk form.
  size_t padded_size_bytes() const { return entries_.size() * kEntryBytes; }

  std::vector<uint8_t> to_bytes() const;
  static NodeMemImage from_bytes(std::span<const uint8_t> bytes);
  bool operator==(const NodeMemImage&) const = default;

 private:
  std::vector<NodeMemEntry> entries_;
};

// 13-bit RIT slot: valid (bit 12) | root index (bits 11..0).
struct RitEntry {
  bool valid = false;
  uint16_t root_index = 0;

  uint16_t pack13() const;
  static RitEntry unpack13(uint16_t bits);
  bool operator==(const RitEntry&) const = default;
};

struct RootIndexTable {
  std::vector<RitEntry> entries;  // class-major: class 0 tree 0, class 0 tree 1, ...
  size_t n_classes = 0;
  size_t trees_per_class = 0;
  bool operator==(const RootIndexTable&) const = default;
};

// Quantization sidecar: everything needed to reproduce codes from E-PTI
// values and to decode the image back into a reference suite.
struct QuantMeta {
  int format_version = 1;
  std::vector<EventId> feature_order;
  std::vector<double> feature_scale;  // E-PTI units per threshold code
  uint32_t probability_denominator = kProbDenominator;
  PscCatalog pscs;
  size_t n_estimators = 0;
  bool operator==(const QuantMeta&) const = default;
};

struct ModelBundle {
  NodeMemImage image;
  RootIndexTable rit;
  QuantMeta meta;
};

// round(value / scale), saturating at 65535.
uint16_t quantize_threshold(double value, double scale);

// round(p * 4095) for p in [0, 1].
uint16_t encode_probability(double p);

// Per-feature scale = (max training E-PTI) / 65535; features that never move
// fall back to a unit range so the scale stays positive.
QuantMeta make_quant_meta(const train::Suite& suite, const Dataset& train);
QuantMeta make_quant_meta(const train::Suite& suite);  // from suite.feature_train_max

// Linearizes every tree (class-major, tree-major, pre-order) into one node
// array, quantizes thresholds and leaf probabilities, and fills the RIT.
// Throws ModelError beyond 2250 nodes or 8 features.
ModelBundle compile_suite(const train::Suite& suite, const QuantMeta& meta);
ModelBundle compile_suite(const train::Suite& suite, const Dataset& train);

// Rebuilds a float-form suite with dequantized thresholds (code * scale) and
// probabilities (code / 4095). Throws ModelError on out-of-range or
// non-forward links, naming the offending node.
train::Suite decode_image(const ModelBundle& bundle);

std::vector<uint16_t> quantize_features(const QuantMeta& meta, std::span<const double> features);

// On-disk form: <prefix>.nodemem (header, RIT, packed entries) plus
// <prefix>.meta.json. Header: magic "SUIT", version u8, node count u16 LE,
// RIT entry count u16 LE; RIT entries as u16 LE; node entries as 6 bytes
// each, 44-bit value big-endian, left-aligned (4 pad bits last).
void save_bundle(const ModelBundle& bundle, const std::string& prefix);
ModelBundle load_bundle(const std::string& prefix);

}  // namespace suitap::nodemem
