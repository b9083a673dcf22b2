#pragma once

#include <string>
#include <vector>

#include "hypalign/geometry.hpp"
#include "hypalign/hierarchy.hpp"
#include "hypalign/model.hpp"

namespace hypalign {

template <class T>
struct LossParts {
  T hita, vic, gap_label, gap_intra, total;
};

struct ObjectiveOptions {
  std::string weighting = "linear";  // equal | linear
  bool use_negatives = true;
  double temperature = 1.0;
  double zeta_vic = 5e-2;
  double zeta_gap = 1e-2;
  double lambda1 = 0.3;
  double lambda2 = 0.1;
  bool include_regularizers = true;  // vic/gap terms contribute to total
  int only_level = -1;               // >= 0: restrict HITA to a single level
};

namespace detail {
template <class T>
T typed_zero(const T& like) {
  return like * 0.0;
}
}  // namespace detail

/// All text embeddings of one tree: texts[level][class].
template <class T>
using TextGrid = std::vector<std::vector<geom::Vec<T>>>;

template <class T>
TextGrid<T> tree_text_embeddings(const Model& m, const std::vector<T>& params,
                                 const HierarchyTree& tree, int tree_idx,
                                 const geom::Vec<T>& delta_t) {
  TextGrid<T> texts(tree.depth + 1);
  for (int l = 0; l <= tree.depth; ++l) {
    texts[l].reserve(tree.class_count(l));
    for (int c = 0; c < tree.class_count(l); ++c)
      texts[l].push_back(text_embedding(m, params, tree_idx, l, c, delta_t));
  }
  return texts;
}

/// p_c^l with hierarchy-aware negative augmentation: the denominator carries
/// every class at the level plus the non-adjacent classes one level up and
/// down.
template <class T>
T hierarchical_prob(const HierarchyTree& tree, int level, int cls,
                    const geom::Vec<T>& phi, const TextGrid<T>& texts,
                    bool use_negatives, double temperature, double r) {
  const double lam = temperature;
  const T num = exp(-lam * geom::distance(phi, texts[level][cls], r));
  T den = detail::typed_zero(num);
  for (int c = 0; c < tree.class_count(level); ++c)
    den = den + exp(-lam * geom::distance(phi, texts[level][c], r));
  if (use_negatives) {
    const NegativeSets ns = negative_sets(tree, level, cls);
    for (int k : ns.above)
      den = den + exp(-lam * geom::distance(phi, texts[level + 1][k], r));
    for (int k : ns.below)
      den = den + exp(-lam * geom::distance(phi, texts[level - 1][k], r));
  }
  return num / den;
}

/// Level-weighted hierarchical cross-entropy over the class averages present
/// in the batch; the per-level CE is the mean over present classes.
template <class T>
T hita_loss(const HierarchyTree& tree, const ClassAverages<T>& averages,
            const TextGrid<T>& texts, const ObjectiveOptions& opt, double r) {
  T out = detail::typed_zero(texts[0][0][0]);
  for (int l = 0; l <= tree.depth; ++l) {
    if (opt.only_level >= 0 && l != opt.only_level) continue;
    const double omega =
        opt.weighting == "linear" ? level_weight(l, tree.depth) : 1.0;
    T level_ce = detail::typed_zero(out);
    int present = 0;
    for (int c = 0; c < tree.class_count(l); ++c) {
      if (!averages.present[l][c]) continue;
      const T p = hierarchical_prob(tree, l, c, averages.avg[l][c], texts,
                                    opt.use_negatives, opt.temperature, r);
      level_ce = level_ce - log(p);
      ++present;
    }
    if (present == 0) continue;
    out = out + omega / present * level_ce;
  }
  return out;
}

/// Sum over samples of | d(phi_i, psi_leaf(i)) - zeta_vic |.
template <class T>
T vicinity_loss(const std::vector<geom::Vec<T>>& image_embeddings,
                const std::vector<int>& leaf_idx, const TextGrid<T>& texts,
                double zeta_vic, double r) {
  T out = detail::typed_zero(texts[0][0][0]);
  for (std::size_t i = 0; i < image_embeddings.size(); ++i) {
    const T d = geom::distance(image_embeddings[i], texts[0][leaf_idx[i]], r);
    out = out + abs(d - zeta_vic);
  }
  return out;
}

/// Hinge on parent-vs-child text norms: parents must sit at least zeta_gap
/// closer to the center.
template <class T>
T label_gap_loss(const HierarchyTree& tree, const TextGrid<T>& texts,
                 double zeta_gap) {
  T out = detail::typed_zero(texts[0][0][0]);
  for (int l = 0; l < tree.depth; ++l) {
    for (int c = 0; c < tree.class_count(l); ++c) {
      const T child_norm = geom::norm(texts[l][c]);
      const T parent_norm = geom::norm(texts[l + 1][tree.parent[l][c]]);
      out = out + relu(parent_norm - child_norm + zeta_gap);
    }
  }
  return out;
}

/// Hinge keeping each image embedding outside its leaf text's norm shell.
template <class T>
T intra_gap_loss(const std::vector<geom::Vec<T>>& image_embeddings,
                 const std::vector<int>& leaf_idx, const TextGrid<T>& texts,
                 double zeta_gap) {
  T out = detail::typed_zero(texts[0][0][0]);
  for (std::size_t i = 0; i < image_embeddings.size(); ++i) {
    const T text_norm = geom::norm(texts[0][leaf_idx[i]]);
    const T img_norm = geom::norm(image_embeddings[i]);
    out = out + relu(text_norm - img_norm + zeta_gap);
  }
  return out;
}

/// Full objective on one batch, summed over forest trees:
/// total = hita + lambda1 * vic + lambda2 * (gap_label + gap_intra).
template <class T>
LossParts<T> batch_objective(const Model& m, const HierarchyForest& forest,
                             const std::vector<T>& params,
                             const std::vector<geom::Vec<T>>& features,
                             const std::vector<int>& leaf_idx,
                             const geom::Vec<T>& delta_t,
                             const ObjectiveOptions& opt) {
  if (features.empty())
    throw std::invalid_argument("batch_objective: empty batch");
  std::vector<geom::Vec<T>> embeddings;
  embeddings.reserve(features.size());
  for (const geom::Vec<T>& x : features)
    embeddings.push_back(embed_to_ball(encode_image(m, params, x), m.r, m.xi));

  const int n_leaves = forest.trees[0].class_count(0);
  std::vector<std::vector<geom::Vec<T>>> leaf_groups(n_leaves);
  for (std::size_t i = 0; i < embeddings.size(); ++i)
    leaf_groups[leaf_idx[i]].push_back(embeddings[i]);

  LossParts<T> out;
  bool first = true;
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const HierarchyTree& tree = forest.trees[t];
    const TextGrid<T> texts = tree_text_embeddings(m, params, tree,
                                                   static_cast<int>(t), delta_t);
    const ClassAverages<T> averages = class_level_averages(tree, leaf_groups, m.r);
    const T hita = hita_loss(tree, averages, texts, opt, m.r);
    const T vic = vicinity_loss(embeddings, leaf_idx, texts, opt.zeta_vic, m.r);
    const T gl = label_gap_loss(tree, texts, opt.zeta_gap);
    const T gi = intra_gap_loss(embeddings, leaf_idx, texts, opt.zeta_gap);
    if (first) {
      out.hita = hita;
      out.vic = vic;
      out.gap_label = gl;
      out.gap_intra = gi;
      first = false;
    } else {
      out.hita = out.hita + hita;
      out.vic = out.vic + vic;
      out.gap_label = out.gap_label + gl;
      out.gap_intra = out.gap_intra + gi;
    }
  }
  if (opt.include_regularizers) {
    out.total = out.hita + opt.lambda1 * out.vic +
                opt.lambda2 * (out.gap_label + out.gap_intra);
  } else {
    out.total = out.hita;
  }
  return out;
}

}  // namespace hypalign
