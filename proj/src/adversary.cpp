#include "hypalign/adversary.hpp"

#include <algorithm>
#include <cmath>

namespace hypalign {

namespace {

double sign_or_zero(double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); }

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

AdversarialBatch pgd_attack(const Model& model, const HierarchyForest& forest,
                            const std::vector<std::vector<double>>& features,
                            const std::vector<int>& leaf_idx,
                            const PerturbationSpec& spec,
                            const ObjectiveOptions& opt, bool attack_images,
                            bool attack_text) {
  AdversarialBatch out;
  out.delta_t.assign(model.d, 0.0);

  // Noisy init, clamped back into the budget box.
  SeededGaussian rng(spec.seed);
  out.features = features;
  if (attack_images) {
    for (std::size_t i = 0; i < out.features.size(); ++i) {
      for (std::size_t j = 0; j < out.features[i].size(); ++j) {
        const double x = features[i][j];
        out.features[i][j] =
            clamp(x + spec.init_noise * rng.normal(), x - spec.eps_x, x + spec.eps_x);
      }
    }
  }

  const std::size_t n_samples = out.features.size();
  const std::size_t dim = n_samples ? out.features[0].size() : 0;

  auto forward = [&](bool want_grads) {
    Tape tape;
    tape.reserve(1 << 18);
    std::vector<Var> params = make_constants(tape, model.params);
    std::vector<std::vector<Var>> xs(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i)
      xs[i] = attack_images ? make_inputs(tape, out.features[i])
                            : make_constants(tape, out.features[i]);
    std::vector<Var> dt = attack_text ? make_inputs(tape, out.delta_t)
                                      : make_constants(tape, out.delta_t);
    LossParts<Var> parts =
        batch_objective(model, forest, params, xs, leaf_idx, dt, opt);
    const Var loss = parts.total;

    std::pair<double, std::vector<double>> res{loss.value(), {}};
    if (want_grads) {
      std::vector<double> adj = tape.gradient(loss);
      std::vector<double>& g = res.second;
      g.reserve(n_samples * dim + model.d);
      for (std::size_t i = 0; i < n_samples; ++i)
        for (std::size_t j = 0; j < dim; ++j) g.push_back(adj[xs[i][j].id]);
      for (int j = 0; j < model.d; ++j) g.push_back(adj[dt[j].id]);
      for (double v : g)
        if (!std::isfinite(v)) throw GradError("pgd_attack: non-finite gradient");
    }
    return res;
  };

  for (int it = 0; it < spec.steps; ++it) {
    auto [loss, grads] = forward(true);
    out.loss_trace.push_back(loss);
    if (attack_images) {
      for (std::size_t i = 0; i < n_samples; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
          const double x = features[i][j];
          out.features[i][j] =
              clamp(out.features[i][j] +
                        spec.alpha_x * sign_or_zero(grads[i * dim + j]),
                    x - spec.eps_x, x + spec.eps_x);
        }
      }
    }
    if (attack_text) {
      for (int j = 0; j < model.d; ++j) {
        out.delta_t[j] =
            clamp(out.delta_t[j] +
                      spec.alpha_t * sign_or_zero(grads[n_samples * dim + j]),
                  -spec.eps_t, spec.eps_t);
      }
    }
  }
  out.loss_trace.push_back(forward(false).first);
  return out;
}

AdversarialBatch pgd_images(const Model& model, const HierarchyForest& forest,
                            const std::vector<std::vector<double>>& features,
                            const std::vector<int>& leaf_idx,
                            const PerturbationSpec& spec,
                            const ObjectiveOptions& opt) {
  return pgd_attack(model, forest, features, leaf_idx, spec, opt, true, false);
}

AdversarialBatch pgd_text(const Model& model, const HierarchyForest& forest,
                          const std::vector<std::vector<double>>& features,
                          const std::vector<int>& leaf_idx,
                          const PerturbationSpec& spec,
                          const ObjectiveOptions& opt) {
  return pgd_attack(model, forest, features, leaf_idx, spec, opt, false, true);
}

std::vector<AdversarialBatch> generate_hierarchical_adversaries(
    const Model& model, const HierarchyForest& forest,
    const std::vector<std::vector<double>>& features,
    const std::vector<int>& leaf_idx, const PerturbationSpec& spec,
    const ObjectiveOptions& opt) {
  std::vector<AdversarialBatch> out;
  if (spec.strategy == "leaf-only") {
    ObjectiveOptions o = opt;
    o.only_level = 0;
    out.push_back(pgd_attack(model, forest, features, leaf_idx, spec, o, true, true));
  } else if (spec.strategy == "universal") {
    ObjectiveOptions o = opt;
    o.only_level = -1;
    out.push_back(pgd_attack(model, forest, features, leaf_idx, spec, o, true, true));
  } else if (spec.strategy == "per-level") {
    int max_depth = 0;
    for (const HierarchyTree& t : forest.trees)
      max_depth = std::max(max_depth, t.depth);
    for (int l = 0; l <= max_depth; ++l) {
      ObjectiveOptions o = opt;
      o.only_level = l;
      PerturbationSpec s = spec;
      s.seed = spec.seed + static_cast<std::uint64_t>(l);
      out.push_back(pgd_attack(model, forest, features, leaf_idx, s, o, true, true));
    }
  } else {
    throw std::invalid_argument("unknown adversary strategy '" + spec.strategy + "'");
  }
  return out;
}

ObjectiveOptions objective_options(const RunConfig& cfg) {
  ObjectiveOptions opt;
  opt.weighting = cfg.weighting;
  opt.use_negatives = cfg.negatives == "both";
  opt.temperature = cfg.temperature;
  opt.zeta_vic = cfg.zeta_vic;
  opt.zeta_gap = cfg.zeta_gap;
  opt.lambda1 = cfg.lambda1;
  opt.lambda2 = cfg.lambda2;
  return opt;
}

PerturbationSpec perturbation_spec(const RunConfig& cfg) {
  PerturbationSpec spec;
  spec.eps_x = cfg.eps_x;
  spec.alpha_x = cfg.alpha_x;
  spec.eps_t = cfg.eps_t;
  spec.alpha_t = cfg.alpha_t;
  spec.steps = cfg.pgd_steps_train;
  spec.init_noise = cfg.init_noise;
  spec.strategy = cfg.strategy;
  spec.seed = cfg.seed;
  return spec;
}

}  // namespace hypalign
