#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "suitap/nodemem.hpp"
#include "suitap/train.hpp"

namespace suitap::hwsim {

// Datapath registers and cost counters for one decision. Counters grow
// monotonically within a decision; a fresh state starts each decision.
struct HwState {
  nodemem::NodeMemEntry node_register;
  uint16_t epti_register = 0;
  size_t best_class = 0;
  uint32_t best_sum = 0;  // Best Class Unit accumulator, summed probability codes
  uint64_t comparison_count = 0;
  uint64_t memory_access_count = 0;
};

// Walks one tree over quantized E-PTI codes: load entry, load the E-PTI code
// named by HPC ID, branch left on code < threshold. Returns the leaf's
// probability code. Throws ModelError on non-forward or out-of-range links.
uint16_t traverse_tree(const nodemem::NodeMemImage& image, uint16_t root_index,
                       std::span<const uint16_t> epti, HwState& state);

struct Decision {
  size_t class_id = 0;
  double probability = 0.0;
  HwState state;
};

// Evaluates every forest, comparing summed probability codes (order-identical
// to comparing averages for a fixed tree count); the Best Class Unit keeps
// the earlier class on ties. Probability = winning sum / (trees * 4095).
Decision evaluate_suite(const nodemem::NodeMemImage& image, const nodemem::RootIndexTable& rit,
                        std::span<const uint16_t> epti);

// Quantizes raw E-PTI values through the bundle's scales, then evaluates.
Decision evaluate_bundle(const nodemem::ModelBundle& bundle, std::span<const double> features);

// Float-path evaluation of the unquantized suite; same branch rule (strict <)
// and tie rule as the hardware path.
std::pair<size_t, double> reference_evaluate(const train::Suite& suite, std::span<const double> features);

// Conformance-harness variant: exposes every forest mean and flags inputs
// that pass within one scale unit of any traversed threshold (those inputs
// may legitimately diverge between the float and quantized paths).
struct Reference {
  size_t class_id = 0;
  double probability = 0.0;
  std::vector<double> forest_means;
  bool near_threshold = false;
};

Reference reference_evaluate_detail(const train::Suite& suite, std::span<const double> features,
                                    std::span<const double> scales = {});

}  // namespace suitap::hwsim
