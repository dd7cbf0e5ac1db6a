#include "suitap/hwsim.hpp"

#include <algorithm>
#include <cmath>

#include "suitap/errors.hpp"

namespace suitap::hwsim {

uint16_t traverse_tree(const nodemem::NodeMemImage& image, uint16_t root_index,
                       std::span<const uint16_t> epti, HwState& state) {
  size_t index = root_index;
  if (index >= image.size()) {
    throw ModelError("traverse: root index " + std::to_string(index) + " is out of range");
  }
  while (true) {
    state.node_register = image.at(index);
    ++state.memory_access_count;
    const auto& node = state.node_register;
    if (node.is_leaf) return node.lnv;

    if (node.hpc_id >= epti.size()) {
      throw ModelError("traverse: node " + std::to_string(index) + " names HPC ID " +
                       std::to_string(node.hpc_id) + " beyond the E-PTI vector");
    }
    state.epti_register = epti[node.hpc_id];
    ++state.comparison_count;
    const size_t next = state.epti_register < node.threshold ? node.lnv : node.rnv;
    if (next <= index || next >= image.size()) {
      throw ModelError("traverse: node " + std::to_string(index) + " has a corrupt link to " +
                       std::to_string(next));
    }
    index = next;
  }
}

Decision evaluate_suite(const nodemem::NodeMemImage& image, const nodemem::RootIndexTable& rit,
                        std::span<const uint16_t> epti) {
  bool any_valid = false;
  for (const auto& slot : rit.entries) any_valid |= slot.valid;
  if (!any_valid) throw ModelError("evaluate: RIT has no valid entries");

  Decision decision;
  HwState& state = decision.state;
  bool have_best = false;
  for (size_t c = 0; c < rit.n_classes; ++c) {
    uint32_t sum = 0;
    for (size_t t = 0; t < rit.trees_per_class; ++t) {
      const auto& slot = rit.entries[c * rit.trees_per_class + t];
      if (!slot.valid) continue;
      sum += traverse_tree(image, slot.root_index, epti, state);
    }
    if (!have_best || sum > state.best_sum) {
      state.best_sum = sum;
      state.best_class = c;
      have_best = true;
    }
  }
  decision.class_id = state.best_class;
  decision.probability = static_cast<double>(state.best_sum) /
                         static_cast<double>(rit.trees_per_class * nodemem::kProbDenominator);
  return decision;
}

Decision evaluate_bundle(const nodemem::ModelBundle& bundle, std::span<const double> features) {
  const auto codes = nodemem::quantize_features(bundle.meta, features);
  return evaluate_suite(bundle.image, bundle.rit, codes);
}

std::pair<size_t, double> reference_evaluate(const train::Suite& suite, std::span<const double> features) {
  return train::evaluate_float(suite, features);
}

Reference reference_evaluate_detail(const train::Suite& suite, std::span<const double> features,
                                    std::span<const double> scales) {
  if (suite.forests.empty()) throw ModelError("evaluate: suite has no forests");
  Reference ref;
  ref.forest_means.reserve(suite.forests.size());
  double best_mean = -1.0;
  for (size_t c = 0; c < suite.forests.size(); ++c) {
    const auto& forest = suite.forests[c];
    double sum = 0.0;
    for (const auto& tree : forest.trees) {
      const train::TreeNode* node = tree.root.get();
      while (!node->is_leaf()) {
        const size_t f = static_cast<size_t>(node->feature);
        if (f < scales.size() && std::abs(features[f] - node->threshold) < scales[f]) {
          ref.near_threshold = true;
        }
        node = features[f] < node->threshold ? node->left.get() : node->right.get();
      }
      sum += node->probability;
    }
    const double mean = sum / static_cast<double>(forest.trees.size());
    ref.forest_means.push_back(mean);
    if (mean > best_mean) {
      best_mean = mean;
      ref.class_id = c;
    }
  }
  ref.probability = best_mean;
  return ref;
}

}  // namespace suitap::hwsim
