#include "hypalign/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "hypalign/dataio.hpp"

namespace hypalign {

Model Model::init(const HierarchyForest& forest, int feature_dim, int embed_dim,
                  double r, double xi, std::uint64_t seed) {
  if (feature_dim < 2 || embed_dim < 2)
    throw std::invalid_argument("Model::init: dimensions must be >= 2");
  Model m;
  m.n = feature_dim;
  m.d = embed_dim;
  m.r = r;
  m.xi = xi;

  for (const HierarchyTree& tree : forest.trees) {
    std::vector<int> counts;
    for (int l = 0; l <= tree.depth; ++l) counts.push_back(tree.class_count(l));
    m.shape.push_back(std::move(counts));
  }

  std::size_t off = 0;
  m.w_off = off;
  off += static_cast<std::size_t>(m.d) * m.n;
  m.b_off = off;
  off += m.d;
  m.proj_off = off;
  off += static_cast<std::size_t>(m.d) * m.d;
  m.base_off.resize(m.shape.size());
  for (std::size_t t = 0; t < m.shape.size(); ++t) {
    m.base_off[t].resize(m.shape[t].size());
    for (std::size_t l = 0; l < m.shape[t].size(); ++l) {
      for (int c = 0; c < m.shape[t][l]; ++c) {
        m.base_off[t][l].push_back(off);
        off += m.d;
      }
    }
  }
  m.trainable_end = off;
  m.ctx_off = off;  // context sits past the trainable range
  off += m.d;
  m.params.assign(off, 0.0);

  SeededGaussian rng(seed);
  // Encoder: random map scaled so initial embeddings sit mid-ball.
  const double w_gain = 0.5 / std::sqrt(static_cast<double>(m.n));
  for (int i = 0; i < m.d * m.n; ++i) m.params[m.w_off + i] = w_gain * rng.normal();
  // b stays zero.
  // Text projection: identity plus small noise.
  for (int i = 0; i < m.d; ++i)
    for (int j = 0; j < m.d; ++j)
      m.params[m.proj_off + static_cast<std::size_t>(i) * m.d + j] =
          (i == j ? 1.0 : 0.0) + 0.02 * rng.normal();
  for (int i = 0; i < m.d; ++i) m.params[m.ctx_off + i] = 0.01 * rng.normal();
  // Base vectors: random directions with a mild level-dependent norm so the
  // parent-below-child ordering starts plausible; training enforces it.
  for (std::size_t t = 0; t < m.shape.size(); ++t) {
    const int L = static_cast<int>(m.shape[t].size()) - 1;
    for (int l = 0; l <= L; ++l) {
      const double target = 0.6 - 0.25 * static_cast<double>(l) / std::max(L, 1);
      for (int c = 0; c < m.shape[t][l]; ++c) {
        const std::size_t b = m.base_off[t][l][c];
        double ss = 0.0;
        for (int i = 0; i < m.d; ++i) {
          m.params[b + i] = rng.normal();
          ss += m.params[b + i] * m.params[b + i];
        }
        const double scale = target / std::sqrt(ss);
        for (int i = 0; i < m.d; ++i) m.params[b + i] *= scale;
      }
    }
  }
  return m;
}

void save_checkpoint(const Model& model, std::uint64_t config_hash,
                     const std::string& path) {
  std::ostringstream out;
  out << "hypalign-checkpoint 1\n";
  out << "config_hash " << config_hash << "\n";
  out << "feature_dim " << model.n << "\n";
  out << "embed_dim " << model.d << "\n";
  out << "r " << format_double(model.r) << "\n";
  out << "xi " << format_double(model.xi) << "\n";
  out << "trees " << model.shape.size() << "\n";
  for (const auto& counts : model.shape) {
    out << "tree";
    for (int c : counts) out << ' ' << c;
    out << "\n";
  }
  out << "params " << model.params.size() << "\n";
  for (double v : model.params) out << format_double(v) << "\n";
  atomic_write(path, out.str());
}

Checkpoint load_checkpoint(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "hypalign-checkpoint" || version != 1)
    throw std::runtime_error("checkpoint: unrecognized format in " + path);

  Checkpoint ck;
  Model& m = ck.model;
  std::size_t n_trees = 0, n_params = 0;
  auto expect = [&in](const char* key) {
    std::string k;
    in >> k;
    if (k != key) throw std::runtime_error(std::string("checkpoint: expected '") + key + "', got '" + k + "'");
  };
  expect("config_hash");
  in >> ck.config_hash;
  expect("feature_dim");
  in >> m.n;
  expect("embed_dim");
  in >> m.d;
  expect("r");
  in >> m.r;
  expect("xi");
  in >> m.xi;
  expect("trees");
  in >> n_trees;
  std::vector<std::vector<int>> shape;
  in.ignore();
  for (std::size_t t = 0; t < n_trees; ++t) {
    std::string line;
    std::getline(in, line);
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word != "tree") throw std::runtime_error("checkpoint: malformed tree line");
    std::vector<int> counts;
    int c;
    while (ls >> c) counts.push_back(c);
    if (counts.empty()) throw std::runtime_error("checkpoint: empty tree shape");
    shape.push_back(std::move(counts));
  }
  expect("params");
  in >> n_params;
  if (!in) throw std::runtime_error("checkpoint: truncated header");

  // Rebuild the layout from the stored shape, then check the parameter count.
  Model laid;
  laid.n = m.n;
  laid.d = m.d;
  laid.r = m.r;
  laid.xi = m.xi;
  laid.shape = shape;
  std::size_t off = 0;
  laid.w_off = off;
  off += static_cast<std::size_t>(laid.d) * laid.n;
  laid.b_off = off;
  off += laid.d;
  laid.proj_off = off;
  off += static_cast<std::size_t>(laid.d) * laid.d;
  laid.base_off.resize(shape.size());
  for (std::size_t t = 0; t < shape.size(); ++t) {
    laid.base_off[t].resize(shape[t].size());
    for (std::size_t l = 0; l < shape[t].size(); ++l) {
      for (int c = 0; c < shape[t][l]; ++c) {
        laid.base_off[t][l].push_back(off);
        off += laid.d;
      }
    }
  }
  laid.trainable_end = off;
  laid.ctx_off = off;
  off += laid.d;
  if (off != n_params)
    throw std::runtime_error("checkpoint: parameter count does not match dimensions");
  laid.params.resize(n_params);
  for (std::size_t i = 0; i < n_params; ++i) {
    if (!(in >> laid.params[i]))
      throw std::runtime_error("checkpoint: truncated parameter block");
    if (!std::isfinite(laid.params[i]))
      throw std::runtime_error("checkpoint: non-finite parameter");
  }
  ck.model = std::move(laid);
  return ck;
}

}  // namespace hypalign
