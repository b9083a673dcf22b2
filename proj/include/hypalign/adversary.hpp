#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypalign/dataio.hpp"
#include "hypalign/losses.hpp"
#include "hypalign/model.hpp"

namespace hypalign {

struct PerturbationSpec {
  double eps_x = 0.2;
  double alpha_x = 0.08;
  double eps_t = 2e-4;
  double alpha_t = 1e-4;
  int steps = 3;
  double init_noise = 1e-3;
  std::string strategy = "universal";  // leaf-only | per-level | universal
  std::uint64_t seed = 0;
};

struct AdversarialBatch {
  std::vector<std::vector<double>> features;  // perturbed inputs, one per sample
  std::vector<double> delta_t;                // shared text-context perturbation
  std::vector<double> loss_trace;             // objective value per iteration (steps+1 entries)
};

/// Signed-gradient l-inf PGD against the hierarchical objective. Image
/// variables start at x + init_noise * N(0, I); the text perturbation starts
/// at zero. sign(0) moves nothing.
AdversarialBatch pgd_attack(const Model& model, const HierarchyForest& forest,
                            const std::vector<std::vector<double>>& features,
                            const std::vector<int>& leaf_idx,
                            const PerturbationSpec& spec,
                            const ObjectiveOptions& opt, bool attack_images,
                            bool attack_text);

AdversarialBatch pgd_images(const Model& model, const HierarchyForest& forest,
                            const std::vector<std::vector<double>>& features,
                            const std::vector<int>& leaf_idx,
                            const PerturbationSpec& spec,
                            const ObjectiveOptions& opt);

AdversarialBatch pgd_text(const Model& model, const HierarchyForest& forest,
                          const std::vector<std::vector<double>>& features,
                          const std::vector<int>& leaf_idx,
                          const PerturbationSpec& spec,
                          const ObjectiveOptions& opt);

/// Strategy dispatch: leaf-only and universal return one batch; per-level
/// returns one batch per hierarchy level.
std::vector<AdversarialBatch> generate_hierarchical_adversaries(
    const Model& model, const HierarchyForest& forest,
    const std::vector<std::vector<double>>& features,
    const std::vector<int>& leaf_idx, const PerturbationSpec& spec,
    const ObjectiveOptions& opt);

ObjectiveOptions objective_options(const RunConfig& cfg);
PerturbationSpec perturbation_spec(const RunConfig& cfg);

}  // namespace hypalign
