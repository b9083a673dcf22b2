#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hypalign/hierarchy.hpp"

namespace hypalign {

/// Gaussian sampler with a fully specified algorithm (mt19937_64 + Box-Muller
/// on 53-bit uniforms) so streams are identical across platforms.
class SeededGaussian {
public:
  explicit SeededGaussian(std::uint64_t seed) : rng_(seed) {}

  double uniform() {  // in [0, 1)
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    constexpr double two_pi = 6.283185307179586476925286766559;
    spare_ = mag * std::sin(two_pi * u2);
    have_spare_ = true;
    return mag * std::cos(two_pi * u2);
  }

  std::uint64_t raw() { return rng_(); }

private:
  std::mt19937_64 rng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct LabeledFeature {
  std::vector<double> features;
  std::string label;  // leaf class name
};

/// Flat key=value run configuration. Unknown keys are rejected.
struct RunConfig {
  // hyperbolic space / stability
  double r = 1.0;
  double xi = 1e-5;
  // loss shape
  double zeta_vic = 5e-2;
  double zeta_gap = 1e-2;
  double lambda1 = 0.3;
  double lambda2 = 0.1;
  double temperature = 1.0;
  // perturbation budgets
  double eps_x = 0.2;
  double alpha_x = 0.08;
  double eps_t = 2e-4;
  double alpha_t = 1e-4;
  int pgd_steps_train = 3;
  int pgd_steps_eval = 20;
  double init_noise = 1e-3;
  // optimizer
  double learning_rate = 0.05;
  double momentum = 0.9;
  int batch_size = 64;
  int epochs = 30;
  std::uint64_t seed = 0;
  // variants
  std::string strategy = "universal";   // leaf-only | per-level | universal
  std::string weighting = "linear";     // equal | linear
  std::string negatives = "both";       // both | none
  bool adversarial_only = true;         // losses on adversarial embeddings only
  bool attack_full_objective = false;   // attack maximizes Eq-15-style full loss
  // desk-scale model/data shape
  int feature_dim = 32;
  int embed_dim = 16;
  int samples_per_leaf = 24;
  double level_spread = 1.0;
  double leaf_noise = 0.25;

  void validate() const;
  /// Canonical serialization, one sorted `key = value` per line.
  std::string serialize() const;
  std::uint64_t hash() const;  // FNV-1a over serialize()
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Applies one `key=value` override (CLI flags on top of a config file).
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

/// Deterministic synthetic features: class means grow recursively from the
/// top band down (child mean = parent mean + Gaussian offset of scale
/// sigma_l*(l+1)/L), samples are leaf mean + sigma noise. Uses trees[0].
/// The class means are drawn from structure_seed so that splits drawn with
/// different sampling seeds describe the same task; by default the two seeds
/// coincide.
std::vector<LabeledFeature> generate_synthetic(const HierarchyForest& forest,
                                               int samples_per_leaf,
                                               int feature_dim,
                                               double level_spread,
                                               double leaf_noise,
                                               std::uint64_t seed,
                                               std::uint64_t structure_seed);
std::vector<LabeledFeature> generate_synthetic(const HierarchyForest& forest,
                                               int samples_per_leaf,
                                               int feature_dim,
                                               double level_spread,
                                               double leaf_noise,
                                               std::uint64_t seed);

std::vector<LabeledFeature> load_features_csv(const std::string& path);
void write_features_csv(const std::vector<LabeledFeature>& records,
                        const std::string& path);

/// One metrics row per (epoch, split, level); columns are fixed.
struct MetricsRow {
  int epoch = 0;
  std::string split;
  int level = 0;
  double clean_acc = 0.0;
  double robust_acc = 0.0;
  double loss_total = 0.0;
  double loss_hita = 0.0;
  double loss_vic = 0.0;
  double loss_gap_label = 0.0;
  double loss_gap_intra = 0.0;
};

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);

/// Writes via a temp file in the same directory, then renames into place.
void atomic_write(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

/// Shortest decimal round-trip formatting for doubles (17 significant digits).
std::string format_double(double v);

HierarchyForest load_forest(const std::string& path);

}  // namespace hypalign
