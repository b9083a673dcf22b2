#include "hypalign/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hypalign {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

double parse_double(const std::string& s, const std::string& what) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument(what + ": non-numeric value '" + s + "'");
  return v;
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw std::invalid_argument(what + ": non-integer value '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s, const std::string& what) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument(what + ": expected true/false, got '" + s + "'");
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  for (;;) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(pos));
      break;
    }
    cells.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return cells;
}

}  // namespace

void RunConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument(std::string("config: ") + name + " must be positive");
  };
  positive(r, "r");
  if (xi < 0.0) throw std::invalid_argument("config: xi must be non-negative");
  if (zeta_vic < 0.0 || zeta_gap < 0.0)
    throw std::invalid_argument("config: zeta values must be non-negative");
  positive(eps_x, "eps_x");
  positive(alpha_x, "alpha_x");
  positive(eps_t, "eps_t");
  positive(alpha_t, "alpha_t");
  positive(learning_rate, "learning_rate");
  positive(temperature, "temperature");
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("config: momentum must be in [0, 1)");
  if (pgd_steps_train < 0 || pgd_steps_eval < 0)
    throw std::invalid_argument("config: PGD step counts must be non-negative");
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("config: epochs must be >= 0");
  if (strategy != "leaf-only" && strategy != "per-level" && strategy != "universal")
    throw std::invalid_argument("config: strategy must be leaf-only, per-level or universal");
  if (weighting != "equal" && weighting != "linear")
    throw std::invalid_argument("config: weighting must be equal or linear");
  if (negatives != "both" && negatives != "none")
    throw std::invalid_argument("config: negatives must be both or none");
  if (feature_dim < 2 || embed_dim < 2)
    throw std::invalid_argument("config: feature_dim and embed_dim must be >= 2");
  if (samples_per_leaf < 1)
    throw std::invalid_argument("config: samples_per_leaf must be >= 1");
  positive(level_spread, "level_spread");
  positive(leaf_noise, "leaf_noise");
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  out << "adversarial_only = " << (adversarial_only ? "true" : "false") << "\n";
  out << "alpha_t = " << format_double(alpha_t) << "\n";
  out << "alpha_x = " << format_double(alpha_x) << "\n";
  out << "attack_full_objective = " << (attack_full_objective ? "true" : "false") << "\n";
  out << "batch_size = " << batch_size << "\n";
  out << "embed_dim = " << embed_dim << "\n";
  out << "epochs = " << epochs << "\n";
  out << "eps_t = " << format_double(eps_t) << "\n";
  out << "eps_x = " << format_double(eps_x) << "\n";
  out << "feature_dim = " << feature_dim << "\n";
  out << "init_noise = " << format_double(init_noise) << "\n";
  out << "lambda1 = " << format_double(lambda1) << "\n";
  out << "lambda2 = " << format_double(lambda2) << "\n";
  out << "leaf_noise = " << format_double(leaf_noise) << "\n";
  out << "learning_rate = " << format_double(learning_rate) << "\n";
  out << "level_spread = " << format_double(level_spread) << "\n";
  out << "momentum = " << format_double(momentum) << "\n";
  out << "negatives = " << negatives << "\n";
  out << "pgd_steps_eval = " << pgd_steps_eval << "\n";
  out << "pgd_steps_train = " << pgd_steps_train << "\n";
  out << "r = " << format_double(r) << "\n";
  out << "samples_per_leaf = " << samples_per_leaf << "\n";
  out << "seed = " << seed << "\n";
  out << "strategy = " << strategy << "\n";
  out << "temperature = " << format_double(temperature) << "\n";
  out << "weighting = " << weighting << "\n";
  out << "xi = " << format_double(xi) << "\n";
  out << "zeta_gap = " << format_double(zeta_gap) << "\n";
  out << "zeta_vic = " << format_double(zeta_vic) << "\n";
  return out.str();
}

std::uint64_t RunConfig::hash() const {
  const std::string s = serialize();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "r") cfg.r = parse_double(value, key);
  else if (key == "xi") cfg.xi = parse_double(value, key);
  else if (key == "zeta_vic") cfg.zeta_vic = parse_double(value, key);
  else if (key == "zeta_gap") cfg.zeta_gap = parse_double(value, key);
  else if (key == "lambda1") cfg.lambda1 = parse_double(value, key);
  else if (key == "lambda2") cfg.lambda2 = parse_double(value, key);
  else if (key == "temperature") cfg.temperature = parse_double(value, key);
  else if (key == "eps_x") cfg.eps_x = parse_double(value, key);
  else if (key == "alpha_x") cfg.alpha_x = parse_double(value, key);
  else if (key == "eps_t") cfg.eps_t = parse_double(value, key);
  else if (key == "alpha_t") cfg.alpha_t = parse_double(value, key);
  else if (key == "pgd_steps_train") cfg.pgd_steps_train = static_cast<int>(parse_int(value, key));
  else if (key == "pgd_steps_eval") cfg.pgd_steps_eval = static_cast<int>(parse_int(value, key));
  else if (key == "init_noise") cfg.init_noise = parse_double(value, key);
  else if (key == "learning_rate") cfg.learning_rate = parse_double(value, key);
  else if (key == "momentum") cfg.momentum = parse_double(value, key);
  else if (key == "batch_size") cfg.batch_size = static_cast<int>(parse_int(value, key));
  else if (key == "epochs") cfg.epochs = static_cast<int>(parse_int(value, key));
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(value, key));
  else if (key == "strategy") cfg.strategy = value;
  else if (key == "weighting") cfg.weighting = value;
  else if (key == "negatives") cfg.negatives = value;
  else if (key == "adversarial_only") cfg.adversarial_only = parse_bool(value, key);
  else if (key == "attack_full_objective") cfg.attack_full_objective = parse_bool(value, key);
  else if (key == "feature_dim") cfg.feature_dim = static_cast<int>(parse_int(value, key));
  else if (key == "embed_dim") cfg.embed_dim = static_cast<int>(parse_int(value, key));
  else if (key == "samples_per_leaf") cfg.samples_per_leaf = static_cast<int>(parse_int(value, key));
  else if (key == "level_spread") cfg.level_spread = parse_double(value, key);
  else if (key == "leaf_noise") cfg.leaf_noise = parse_double(value, key);
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: malformed line '" + body + "'");
    apply_override(cfg, trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

std::vector<LabeledFeature> generate_synthetic(const HierarchyForest& forest,
                                               int samples_per_leaf,
                                               int feature_dim,
                                               double level_spread,
                                               double leaf_noise,
                                               std::uint64_t seed,
                                               std::uint64_t structure_seed) {
  if (feature_dim < 2) throw std::invalid_argument("generate_synthetic: feature_dim >= 2");
  if (!(level_spread >= 0.0) || !(leaf_noise >= 0.0))
    throw std::invalid_argument("generate_synthetic: invalid noise scales");
  const HierarchyTree& tree = forest.trees.front();
  const int L = tree.depth;

  // Means from the top band down: a node at level l offsets its parent's mean
  // by scale level_spread * (l+1) / max(L,1). The means are a property of the
  // task (structure_seed), not of the draw, so train and eval splits drawn
  // with different sampling seeds share the same class distributions.
  SeededGaussian mean_rng(structure_seed);
  std::vector<std::vector<std::vector<double>>> means(L + 1);
  for (int l = L; l >= 0; --l) {
    means[l].assign(tree.class_count(l), std::vector<double>(feature_dim, 0.0));
    const double scale = level_spread * (l + 1) / std::max(L, 1);
    for (int c = 0; c < tree.class_count(l); ++c) {
      std::vector<double>& m = means[l][c];
      if (l < L) m = means[l + 1][tree.parent[l][c]];
      for (int i = 0; i < feature_dim; ++i) m[i] += scale * mean_rng.normal();
    }
  }
  SeededGaussian rng(seed);

  std::vector<LabeledFeature> out;
  out.reserve(static_cast<std::size_t>(samples_per_leaf) * tree.class_count(0));
  for (int c = 0; c < tree.class_count(0); ++c) {
    for (int s = 0; s < samples_per_leaf; ++s) {
      LabeledFeature rec;
      rec.label = tree.classes[0][c];
      rec.features.resize(feature_dim);
      for (int i = 0; i < feature_dim; ++i)
        rec.features[i] = means[0][c][i] + leaf_noise * rng.normal();
      out.push_back(std::move(rec));
    }
  }
  return out;
}

std::vector<LabeledFeature> generate_synthetic(const HierarchyForest& forest,
                                               int samples_per_leaf,
                                               int feature_dim,
                                               double level_spread,
                                               double leaf_noise,
                                               std::uint64_t seed) {
  return generate_synthetic(forest, samples_per_leaf, feature_dim, level_spread,
                            leaf_noise, seed, seed);
}

std::vector<LabeledFeature> load_features_csv(const std::string& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("features csv: missing header in " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  if (header.empty() || header[0] != "label")
    throw std::invalid_argument("features csv: header must start with 'label'");
  const std::size_t n = header.size() - 1;
  for (std::size_t i = 0; i < n; ++i)
    if (header[i + 1] != "f" + std::to_string(i))
      throw std::invalid_argument("features csv: bad header column '" + header[i + 1] + "'");

  std::vector<LabeledFeature> out;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != n + 1)
      throw std::invalid_argument("features csv: ragged row '" + line + "'");
    LabeledFeature rec;
    rec.label = cells[0];
    rec.features.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      rec.features.push_back(parse_double(cells[i + 1], "features csv"));
    out.push_back(std::move(rec));
  }
  return out;
}

void write_features_csv(const std::vector<LabeledFeature>& records,
                        const std::string& path) {
  std::ostringstream out;
  const std::size_t n = records.empty() ? 0 : records[0].features.size();
  out << "label";
  for (std::size_t i = 0; i < n; ++i) out << ",f" << i;
  out << "\n";
  for (const LabeledFeature& rec : records) {
    if (rec.features.size() != n)
      throw std::invalid_argument("features csv: inconsistent feature dimension");
    out << rec.label;
    for (double v : rec.features) out << "," << format_double(v);
    out << "\n";
  }
  atomic_write(path, out.str());
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ostringstream out;
  out << "epoch,split,level,clean_acc,robust_acc,loss_total,loss_hita,"
         "loss_vic,loss_gap_label,loss_gap_intra\n";
  for (const MetricsRow& m : rows) {
    out << m.epoch << ',' << m.split << ',' << m.level << ','
        << format_double(m.clean_acc) << ',' << format_double(m.robust_acc) << ','
        << format_double(m.loss_total) << ',' << format_double(m.loss_hita) << ','
        << format_double(m.loss_vic) << ',' << format_double(m.loss_gap_label) << ','
        << format_double(m.loss_gap_intra) << "\n";
  }
  atomic_write(path, out.str());
}

void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path dir = target.parent_path();
  if (dir.empty()) dir = ".";
  fs::path tmp = dir / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

HierarchyForest load_forest(const std::string& path) {
  return parse_forest(read_file(path));
}

}  // namespace hypalign
