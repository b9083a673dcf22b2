#pragma once

#include <vector>

#include "hypalign/adversary.hpp"
#include "hypalign/dataio.hpp"
#include "hypalign/hierarchy.hpp"
#include "hypalign/model.hpp"

namespace hypalign {

struct TrainResult {
  Model model;
  std::vector<MetricsRow> metrics;
  bool diverged = false;
  int completed_epochs = 0;
};

/// Per-level accuracies plus the norm-ordering diagnostics used by the
/// robustness-transfer analysis. Levels follow trees[0].
struct EvalReport {
  std::vector<double> clean_acc;
  std::vector<double> robust_acc;
  double norm_order_fraction = 0.0;  // parent-child text pairs with smaller parent norm
  double mean_image_norm = 0.0;      // clean image embeddings
  double mean_leaf_text_norm = 0.0;
};

/// Transfer matrix: success[a][e] is the misclassification rate at level e of
/// adversaries generated against level a. Per-sample attacks on the
/// individual-embedding softmax (the evaluation protocol).
struct TransferMatrix {
  std::vector<std::vector<double>> success;
};

/// SGD-with-momentum outer minimization of the adversarial objective.
/// Adversaries are regenerated per batch with the configured strategy.
TrainResult train(const RunConfig& cfg, const HierarchyForest& forest,
                  const std::vector<LabeledFeature>& train_data,
                  const std::vector<LabeledFeature>& eval_data);

/// Clean and PGD-robust accuracy per level. Classification assigns the
/// nearest level-l text by Riemannian distance on individual embeddings.
EvalReport evaluate(const Model& model, const HierarchyForest& forest,
                    const std::vector<LabeledFeature>& data,
                    const PerturbationSpec& spec, double temperature);

TransferMatrix transfer_attack_eval(const Model& model,
                                    const HierarchyForest& forest,
                                    const std::vector<LabeledFeature>& data,
                                    const PerturbationSpec& spec,
                                    double temperature);

/// Maps labels to dense leaf indices; throws on labels missing from the forest.
std::vector<int> leaf_indices(const HierarchyForest& forest,
                              const std::vector<LabeledFeature>& data);

/// Fraction of parent-child text pairs (all trees) whose parent norm is
/// strictly smaller.
double norm_order_fraction(const Model& model, const HierarchyForest& forest);

}  // namespace hypalign
