#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypalign/geometry.hpp"
#include "hypalign/hierarchy.hpp"

namespace hypalign {

/// Toy encoder + text table. All trainable tensors live in one flat parameter
/// vector so the tape can expose them uniformly:
///   W (d x n), b (d)        image encoder affine map
///   P (d x d)               text projection
///   ctx (d)                 shared context vector (perturbation carrier,
///                           not trained)
///   base[tree][level][cls]  per-class text base vectors (d each)
struct Model {
  int n = 0;  // feature dim
  int d = 0;  // embedding dim
  double r = 1.0;
  double xi = 1e-5;
  std::vector<std::vector<int>> shape;  // [tree][level] -> class count
  std::vector<double> params;

  std::size_t w_off = 0, b_off = 0, proj_off = 0, ctx_off = 0;
  std::vector<std::vector<std::vector<std::size_t>>> base_off;
  std::size_t trainable_end = 0;  // params[0, trainable_end) are optimized

  static Model init(const HierarchyForest& forest, int feature_dim, int embed_dim,
                    double r, double xi, std::uint64_t seed);

  std::size_t base_offset(int tree, int level, int cls) const {
    return base_off[tree][level][cls];
  }
  int tree_depth(int tree) const { return static_cast<int>(shape[tree].size()) - 1; }
};

void save_checkpoint(const Model& model, std::uint64_t config_hash,
                     const std::string& path);

struct Checkpoint {
  Model model;
  std::uint64_t config_hash = 0;
};

Checkpoint load_checkpoint(const std::string& path);

// ---- differentiable forward pieces (T is double or Var) --------------------

/// y = W x + b.
template <class T>
geom::Vec<T> encode_image(const Model& m, const std::vector<T>& p,
                          const geom::Vec<T>& x) {
  if (static_cast<int>(x.size()) != m.n)
    throw std::invalid_argument("encode_image: feature dimension mismatch");
  geom::Vec<T> y;
  y.reserve(m.d);
  for (int i = 0; i < m.d; ++i) {
    T acc = p[m.b_off + i];
    const std::size_t row = m.w_off + static_cast<std::size_t>(i) * m.n;
    for (int j = 0; j < m.n; ++j) acc = acc + p[row + j] * x[j];
    y.push_back(acc);
  }
  return y;
}

/// Proj(exp_0^r(e)): lift a Euclidean vector into the ball.
template <class T>
geom::Vec<T> embed_to_ball(const geom::Vec<T>& e, double r, double xi) {
  const T ee = geom::sq_norm(e);
  if (value_of(ee) == 0.0) return e;
  const double sr = std::sqrt(r);
  const T ne = sqrt(ee);
  const T scale = tanh(sr * ne) / (sr * ne);
  geom::Vec<T> z;
  z.reserve(e.size());
  for (const T& ei : e) z.push_back(scale * ei);
  return geom::project_to_ball(z, r, xi);
}

/// psi(t_c^l + delta): embed_to_ball(P (base + ctx + delta)).
template <class T>
geom::Vec<T> text_embedding(const Model& m, const std::vector<T>& p, int tree,
                            int level, int cls, const geom::Vec<T>& delta_t) {
  const std::size_t base = m.base_offset(tree, level, cls);
  geom::Vec<T> v;
  v.reserve(m.d);
  const bool perturbed = !delta_t.empty();
  for (int i = 0; i < m.d; ++i) {
    T vi = p[base + i] + p[m.ctx_off + i];
    if (perturbed) vi = vi + delta_t[i];
    v.push_back(vi);
  }
  geom::Vec<T> proj;
  proj.reserve(m.d);
  for (int i = 0; i < m.d; ++i) {
    const std::size_t row = m.proj_off + static_cast<std::size_t>(i) * m.d;
    T acc = p[row] * v[0];
    for (int j = 1; j < m.d; ++j) acc = acc + p[row + j] * v[j];
    proj.push_back(acc);
  }
  return embed_to_ball(proj, m.r, m.xi);
}

/// Recursive per-(level, class) image averages for one tree. Classes with no
/// samples in the batch are absent.
template <class T>
struct ClassAverages {
  std::vector<std::vector<geom::Vec<T>>> avg;  // [level][class]
  std::vector<std::vector<char>> present;
};

template <class T>
ClassAverages<T> class_level_averages(
    const HierarchyTree& tree,
    const std::vector<std::vector<geom::Vec<T>>>& leaf_groups, double r) {
  ClassAverages<T> out;
  const int L = tree.depth;
  out.avg.resize(L + 1);
  out.present.resize(L + 1);
  for (int l = 0; l <= L; ++l) {
    out.avg[l].resize(tree.class_count(l));
    out.present[l].assign(tree.class_count(l), 0);
  }
  for (int c = 0; c < tree.class_count(0); ++c) {
    if (leaf_groups[c].empty()) continue;
    out.avg[0][c] = geom::hyp_avg(leaf_groups[c], r);
    out.present[0][c] = 1;
  }
  for (int l = 1; l <= L; ++l) {
    for (int c = 0; c < tree.class_count(l); ++c) {
      std::vector<geom::Vec<T>> kids;
      for (int k : tree.children[l][c])
        if (out.present[l - 1][k]) kids.push_back(out.avg[l - 1][k]);
      if (kids.empty()) continue;
      out.avg[l][c] = geom::hyp_avg(kids, r);
      out.present[l][c] = 1;
    }
  }
  return out;
}

}  // namespace hypalign
