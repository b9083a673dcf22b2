#include "hypalign/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hypalign/losses.hpp"
#include "hypalign/threads.hpp"

namespace hypalign {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (a + 1) + 0xbf58476d1ce4e5b9ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic Fisher-Yates (std::shuffle is implementation-defined).
void shuffle_indices(std::vector<int>& idx, std::uint64_t seed) {
  SeededGaussian rng(seed);
  for (std::size_t i = idx.size(); i > 1; --i) {
    const std::size_t j = rng.raw() % i;
    std::swap(idx[i - 1], idx[j]);
  }
}

// Ancestor class index per level, per leaf, for trees[0].
std::vector<std::vector<int>> leaf_paths(const HierarchyTree& tree) {
  std::vector<std::vector<int>> paths(tree.class_count(0));
  for (int c = 0; c < tree.class_count(0); ++c)
    paths[c] = ancestor_path(tree, tree.classes[0][c]);
  return paths;
}

using Grid = TextGrid<double>;

Grid clean_texts(const Model& model, const HierarchyTree& tree, int tree_idx) {
  return tree_text_embeddings<double>(model, model.params, tree, tree_idx, {});
}

std::vector<double> embed_sample(const Model& model,
                                 const std::vector<double>& x) {
  return embed_to_ball(encode_image(model, model.params, x), model.r, model.xi);
}

int classify(const Model& model, const std::vector<double>& embedding,
             const Grid& texts, int level) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < texts[level].size(); ++c) {
    const double d = geom::distance(embedding, texts[level][c], model.r);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

// Per-sample l-inf PGD maximizing the level-`level` cross-entropy of the
// individual-embedding distance softmax (the evaluation protocol).
std::vector<double> attack_sample(const Model& model, const Grid& texts,
                                  const std::vector<double>& x, int target,
                                  int level, const PerturbationSpec& spec,
                                  double temperature, std::uint64_t seed) {
  std::vector<double> xhat = x;
  SeededGaussian rng(seed);
  for (std::size_t j = 0; j < xhat.size(); ++j) {
    xhat[j] = std::clamp(x[j] + spec.init_noise * rng.normal(), x[j] - spec.eps_x,
                         x[j] + spec.eps_x);
  }
  for (int it = 0; it < spec.steps; ++it) {
    Tape tape;
    std::vector<Var> params = make_constants(tape, model.params);
    std::vector<Var> xv = make_inputs(tape, xhat);
    std::vector<Var> phi =
        embed_to_ball(encode_image(model, params, xv), model.r, model.xi);
    // CE = lambda * d_target + log sum_c exp(-lambda * d_c)
    Var lse = tape.constant(0.0);
    Var d_target = tape.constant(0.0);
    for (std::size_t c = 0; c < texts[level].size(); ++c) {
      std::vector<Var> psi = make_constants(tape, texts[level][c]);
      const Var d = geom::distance(phi, psi, model.r);
      lse = lse + exp(-temperature * d);
      if (static_cast<int>(c) == target) d_target = d;
    }
    const Var loss = temperature * d_target + log(lse);
    const std::vector<double> adj = tape.gradient(loss);
    for (std::size_t j = 0; j < xhat.size(); ++j) {
      const double g = adj[xv[j].id];
      const double step = g > 0.0 ? spec.alpha_x : (g < 0.0 ? -spec.alpha_x : 0.0);
      xhat[j] = std::clamp(xhat[j] + step, x[j] - spec.eps_x, x[j] + spec.eps_x);
    }
  }
  return xhat;
}

}  // namespace

std::vector<int> leaf_indices(const HierarchyForest& forest,
                              const std::vector<LabeledFeature>& data) {
  std::vector<int> idx;
  idx.reserve(data.size());
  for (const LabeledFeature& rec : data)
    idx.push_back(forest.trees[0].leaf_index(rec.label));
  return idx;
}

double norm_order_fraction(const Model& model, const HierarchyForest& forest) {
  int pairs = 0, ordered = 0;
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const HierarchyTree& tree = forest.trees[t];
    const Grid texts = clean_texts(model, tree, static_cast<int>(t));
    for (int l = 0; l < tree.depth; ++l) {
      for (int c = 0; c < tree.class_count(l); ++c) {
        const double child = std::sqrt(geom::sq_norm(texts[l][c]));
        const double parent =
            std::sqrt(geom::sq_norm(texts[l + 1][tree.parent[l][c]]));
        ++pairs;
        if (parent < child) ++ordered;
      }
    }
  }
  return pairs ? static_cast<double>(ordered) / pairs : 1.0;
}

EvalReport evaluate(const Model& model, const HierarchyForest& forest,
                    const std::vector<LabeledFeature>& data,
                    const PerturbationSpec& spec, double temperature) {
  const HierarchyTree& tree = forest.trees[0];
  const Grid texts = clean_texts(model, tree, 0);
  const std::vector<std::vector<int>> paths = leaf_paths(tree);
  const std::vector<int> leaves = leaf_indices(forest, data);
  const int L = tree.depth;
  const int n = static_cast<int>(data.size());

  std::vector<std::vector<char>> clean_ok(L + 1, std::vector<char>(n, 0));
  std::vector<std::vector<char>> robust_ok(L + 1, std::vector<char>(n, 0));
  parallel_for(n, [&](int i) {
    const std::vector<double> phi = embed_sample(model, data[i].features);
    for (int l = 0; l <= L; ++l) {
      const int target = paths[leaves[i]][l];
      clean_ok[l][i] = classify(model, phi, texts, l) == target;
      const std::vector<double> xhat =
          attack_sample(model, texts, data[i].features, target, l, spec,
                        temperature, mix_seed(spec.seed, i, l));
      const std::vector<double> phihat = embed_sample(model, xhat);
      robust_ok[l][i] = classify(model, phihat, texts, l) == target;
    }
  });

  EvalReport rep;
  for (int l = 0; l <= L; ++l) {
    double c = 0, r = 0;
    for (int i = 0; i < n; ++i) {
      c += clean_ok[l][i];
      r += robust_ok[l][i];
    }
    rep.clean_acc.push_back(n ? c / n : 0.0);
    rep.robust_acc.push_back(n ? r / n : 0.0);
  }
  rep.norm_order_fraction = norm_order_fraction(model, forest);

  double img_norm = 0.0;
  for (const LabeledFeature& rec : data)
    img_norm += std::sqrt(geom::sq_norm(embed_sample(model, rec.features)));
  rep.mean_image_norm = data.empty() ? 0.0 : img_norm / data.size();
  double text_norm = 0.0;
  int text_count = 0;
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const Grid g = clean_texts(model, forest.trees[t], static_cast<int>(t));
    for (const auto& psi : g[0]) {
      text_norm += std::sqrt(geom::sq_norm(psi));
      ++text_count;
    }
  }
  rep.mean_leaf_text_norm = text_count ? text_norm / text_count : 0.0;
  return rep;
}

TransferMatrix transfer_attack_eval(const Model& model,
                                    const HierarchyForest& forest,
                                    const std::vector<LabeledFeature>& data,
                                    const PerturbationSpec& spec,
                                    double temperature) {
  const HierarchyTree& tree = forest.trees[0];
  if (tree.depth < 1)
    throw std::invalid_argument("transfer_attack_eval: needs depth >= 1");
  const Grid texts = clean_texts(model, tree, 0);
  const std::vector<std::vector<int>> paths = leaf_paths(tree);
  const std::vector<int> leaves = leaf_indices(forest, data);
  const int L = tree.depth;
  const int n = static_cast<int>(data.size());

  TransferMatrix tm;
  tm.success.assign(L + 1, std::vector<double>(L + 1, 0.0));
  // Attack success rate: of the samples the model classifies correctly on
  // clean inputs at level e, the fraction an attack built at level a flips.
  std::vector<std::vector<char>> clean_ok(L + 1, std::vector<char>(n, 0));
  std::vector<std::vector<std::vector<char>>> miss(
      L + 1, std::vector<std::vector<char>>(L + 1, std::vector<char>(n, 0)));
  parallel_for(n, [&](int i) {
    const std::vector<double> phi = embed_sample(model, data[i].features);
    for (int e = 0; e <= L; ++e)
      clean_ok[e][i] = classify(model, phi, texts, e) == paths[leaves[i]][e];
    for (int a = 0; a <= L; ++a) {
      const std::vector<double> xhat =
          attack_sample(model, texts, data[i].features, paths[leaves[i]][a], a,
                        spec, temperature, mix_seed(spec.seed, i, a));
      const std::vector<double> phihat = embed_sample(model, xhat);
      for (int e = 0; e <= L; ++e)
        miss[a][e][i] = classify(model, phihat, texts, e) != paths[leaves[i]][e];
    }
  });
  for (int a = 0; a <= L; ++a)
    for (int e = 0; e <= L; ++e) {
      double flipped = 0, eligible = 0;
      for (int i = 0; i < n; ++i) {
        if (!clean_ok[e][i]) continue;
        ++eligible;
        flipped += miss[a][e][i];
      }
      tm.success[a][e] = eligible > 0 ? flipped / eligible : 0.0;
    }
  return tm;
}

TrainResult train(const RunConfig& cfg, const HierarchyForest& forest,
                  const std::vector<LabeledFeature>& train_data,
                  const std::vector<LabeledFeature>& eval_data) {
  cfg.validate();
  if (train_data.empty()) throw std::invalid_argument("train: empty training set");
  const std::vector<int> leaves = leaf_indices(forest, train_data);
  leaf_indices(forest, eval_data);  // validate labels up front

  TrainResult result;
  result.model = Model::init(forest, cfg.feature_dim, cfg.embed_dim, cfg.r,
                             cfg.xi, cfg.seed);
  Model& model = result.model;
  for (const LabeledFeature& rec : train_data)
    if (static_cast<int>(rec.features.size()) != cfg.feature_dim)
      throw std::invalid_argument("train: feature dimension does not match config");

  ObjectiveOptions opt = objective_options(cfg);
  ObjectiveOptions attack_opt = opt;
  attack_opt.include_regularizers = cfg.attack_full_objective;
  PerturbationSpec spec = perturbation_spec(cfg);

  std::vector<double> velocity(model.trainable_end, 0.0);
  std::vector<int> order(train_data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  PerturbationSpec eval_spec = spec;
  eval_spec.steps = cfg.pgd_steps_train;
  eval_spec.seed = mix_seed(cfg.seed, 7777, 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_indices(order, mix_seed(cfg.seed, 1234, epoch));
    double sum_total = 0, sum_hita = 0, sum_vic = 0, sum_gl = 0, sum_gi = 0;
    int batches = 0;

    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<std::vector<double>> bx;
      std::vector<int> bleaf;
      for (std::size_t k = start; k < stop; ++k) {
        bx.push_back(train_data[order[k]].features);
        bleaf.push_back(leaves[order[k]]);
      }

      PerturbationSpec bspec = spec;
      bspec.seed = mix_seed(cfg.seed, epoch, batches);
      std::vector<AdversarialBatch> advs;
      try {
        advs = generate_hierarchical_adversaries(model, forest, bx, bleaf,
                                                 bspec, attack_opt);
      } catch (const GradError&) {
        result.diverged = true;
        return result;
      }

      try {
        Tape tape;
        tape.reserve(1 << 19);
        std::vector<Var> params;
        params.reserve(model.params.size());
        for (std::size_t i = 0; i < model.params.size(); ++i) {
          params.push_back(i < model.trainable_end ? tape.input(model.params[i])
                                                   : tape.constant(model.params[i]));
        }

        Var total = tape.constant(0.0);
        LossParts<Var> logged{};
        bool logged_set = false;
        auto add_batch = [&](const std::vector<std::vector<double>>& xs,
                             const std::vector<double>& dt,
                             const ObjectiveOptions& o) {
          std::vector<std::vector<Var>> xv(xs.size());
          for (std::size_t i = 0; i < xs.size(); ++i)
            xv[i] = make_constants(tape, xs[i]);
          std::vector<Var> dtv = make_constants(tape, dt);
          LossParts<Var> parts =
              batch_objective(model, forest, params, xv, bleaf, dtv, o);
          total = total + parts.total;
          if (!logged_set) {
            logged = parts;
            logged_set = true;
          }
        };

        if (cfg.strategy == "per-level") {
          for (std::size_t l = 0; l < advs.size(); ++l) {
            ObjectiveOptions o = opt;
            o.only_level = static_cast<int>(l);
            o.include_regularizers = l == 0;  // count vic/gap terms once
            add_batch(advs[l].features, advs[l].delta_t, o);
          }
        } else {
          add_batch(advs[0].features, advs[0].delta_t, opt);
        }
        if (!cfg.adversarial_only) {
          const std::vector<double> no_delta(model.d, 0.0);
          add_batch(bx, no_delta, opt);
        }

        const std::vector<double> adj = tape.gradient(total);
        sum_total += total.value();
        sum_hita += logged.hita.value();
        sum_vic += logged.vic.value();
        sum_gl += logged.gap_label.value();
        sum_gi += logged.gap_intra.value();

        for (std::size_t i = 0; i < model.trainable_end; ++i) {
          const double g = adj[params[i].id];
          if (!std::isfinite(g)) throw GradError("train: non-finite gradient");
          velocity[i] = cfg.momentum * velocity[i] + g;
          model.params[i] -= cfg.learning_rate * velocity[i];
        }
      } catch (const GradError&) {
        result.diverged = true;
        return result;
      }
      ++batches;
    }

    const EvalReport rep =
        evaluate(model, forest, eval_data, eval_spec, cfg.temperature);
    for (std::size_t l = 0; l < rep.clean_acc.size(); ++l) {
      MetricsRow row;
      row.epoch = epoch;
      row.split = "eval";
      row.level = static_cast<int>(l);
      row.clean_acc = rep.clean_acc[l];
      row.robust_acc = rep.robust_acc[l];
      row.loss_total = batches ? sum_total / batches : 0.0;
      row.loss_hita = batches ? sum_hita / batches : 0.0;
      row.loss_vic = batches ? sum_vic / batches : 0.0;
      row.loss_gap_label = batches ? sum_gl / batches : 0.0;
      row.loss_gap_intra = batches ? sum_gi / batches : 0.0;
      result.metrics.push_back(row);
    }
    result.completed_epochs = epoch + 1;
  }
  return result;
}

}  // namespace hypalign
