// hypalign command-line entry point.
//
// Exit codes: 0 success, 1 validation error (flags, config, file formats),
// 2 runtime failure (divergence, non-finite values, failed checks).

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hypalign/adversary.hpp"
#include "hypalign/dataio.hpp"
#include "hypalign/geometry.hpp"
#include "hypalign/losses.hpp"
#include "hypalign/margin.hpp"
#include "hypalign/model.hpp"
#include "hypalign/tape.hpp"
#include "hypalign/trainer.hpp"

namespace {

using namespace hypalign;

class CheckFailure : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

std::string join_out(const std::string& out_dir, const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  if (out_dir.empty() || out_dir == ".") return path;
  return out_dir + "/" + path;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Small fixed forest used by the self-contained check subcommands.
HierarchyForest check_forest() {
  return parse_forest(
      "== tree main ==\n"
      "ant\tinsect\nbee\tinsect\ncat\tmammal\ndog\tmammal\n"
      "insect\tanimal\nmammal\tanimal\n");
}

std::vector<double> random_ball_point(SeededGaussian& rng, int dim, double r) {
  std::vector<double> p(dim);
  double ss = 0.0;
  for (double& v : p) {
    v = rng.normal();
    ss += v * v;
  }
  const double radius = (0.02 + 0.93 * rng.uniform()) / std::sqrt(r);
  const double scale = radius / std::sqrt(ss);
  for (double& v : p) v *= scale;
  return p;
}

int cmd_geom_test(int cases, std::uint64_t seed) {
  const std::vector<double> rs = {0.5, 1.0, 2.0};
  double worst_rt = 0.0, worst_dual = 0.0, worst_mobius = 0.0, worst_tri = 0.0;
  SeededGaussian rng(seed);
  for (int k = 0; k < cases; ++k) {
    const double r = rs[k % rs.size()];
    const int dim = 2 + static_cast<int>(rng.raw() % 7);
    const std::vector<double> u = random_ball_point(rng, dim, r);
    const std::vector<double> v = random_ball_point(rng, dim, r);
    const std::vector<double> w = random_ball_point(rng, dim, r);

    const std::vector<double> t = geom::log_map(u, v, r);
    const std::vector<double> back = geom::exp_map(u, t, r);
    for (int i = 0; i < dim; ++i)
      worst_rt = std::max(worst_rt,
                          std::fabs(back[i] - v[i]) / std::max(1.0, std::fabs(v[i])));

    const double d1 = geom::distance(u, v, r);
    const double d2 = geom::distance_acosh_form(u, v, r);
    worst_dual = std::max(worst_dual, std::fabs(d1 - d2) / std::max(d1, 1e-12));

    worst_tri = std::max(
        worst_tri, d1 - (geom::distance(u, w, r) + geom::distance(w, v, r)));
    worst_tri = std::max(worst_tri,
                         std::fabs(d1 - geom::distance(v, u, r)) /
                             std::max(d1, 1e-12));

    std::vector<double> neg_u(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) neg_u[i] = -u[i];
    const std::vector<double> cancel =
        geom::mobius_add(neg_u, geom::mobius_add(u, v, r), r);
    const std::vector<double> zero(dim, 0.0);
    const std::vector<double> id_left = geom::mobius_add(zero, v, r);
    const std::vector<double> id_right = geom::mobius_add(v, zero, r);
    for (int i = 0; i < dim; ++i) {
      worst_mobius = std::max(worst_mobius, std::fabs(cancel[i] - v[i]));
      worst_mobius = std::max(worst_mobius, std::fabs(id_left[i] - v[i]));
      worst_mobius = std::max(worst_mobius, std::fabs(id_right[i] - v[i]));
    }
  }
  std::cout << "exp/log round trip max rel err: " << format_double(worst_rt) << "\n"
            << "distance dual-form max rel err: " << format_double(worst_dual) << "\n"
            << "mobius identity max abs err:    " << format_double(worst_mobius) << "\n"
            << "metric axiom max violation:     " << format_double(worst_tri) << "\n";
  if (worst_rt > 1e-9 || worst_dual > 1e-8 || worst_mobius > 1e-12 ||
      worst_tri > 1e-10)
    throw CheckFailure("geom-test: tolerance exceeded");
  std::cout << "geom-test: ok (" << cases << " cases)\n";
  return 0;
}

int cmd_gradcheck(int cases, std::uint64_t seed, double step, double tol) {
  const HierarchyForest forest = check_forest();
  const int n = 5, d = 4, batch = 6;
  double worst = 0.0;
  int excluded = 0;
  const char* names[] = {"hita", "vic", "gap_label", "gap_intra", "total"};
  for (int k = 0; k < cases; ++k) {
    Model model = Model::init(forest, n, d, 1.0, 1e-5, mix(seed, k));
    SeededGaussian rng(mix(seed, 1000 + k));
    std::vector<std::vector<double>> xs(batch, std::vector<double>(n));
    std::vector<int> leaves(batch);
    for (int i = 0; i < batch; ++i) {
      for (double& v : xs[i]) v = 0.5 * rng.normal();
      leaves[i] = static_cast<int>(rng.raw() % forest.leaves.size());
    }
    ObjectiveOptions opt;
    for (int part = 0; part < 5; ++part) {
      auto build = [&](Tape& tape, const std::vector<Var>& params) {
        std::vector<std::vector<Var>> xv(batch);
        for (int i = 0; i < batch; ++i) xv[i] = make_constants(tape, xs[i]);
        std::vector<Var> dt;
        LossParts<Var> parts =
            batch_objective(model, forest, params, xv, leaves, dt, opt);
        switch (part) {
          case 0: return parts.hita;
          case 1: return parts.vic;
          case 2: return parts.gap_label;
          case 3: return parts.gap_intra;
          default: return parts.total;
        }
      };
      const FiniteDiffReport rep =
          finite_diff_check(build, model.params, step, tol);
      worst = std::max(worst, rep.max_rel_err);
      excluded += static_cast<int>(rep.excluded.size());
      if (!rep.pass) {
        std::ostringstream msg;
        msg << "gradcheck: " << names[part] << " failed at case " << k
            << " (max rel err " << format_double(rep.max_rel_err) << ")";
        throw CheckFailure(msg.str());
      }
    }
  }
  std::cout << "gradcheck: ok (" << cases << " cases, max rel err "
            << format_double(worst) << ", " << excluded
            << " kink coordinates excluded)\n";
  return 0;
}

RunConfig config_from_flags(const std::string& config_path,
                            const std::vector<std::string>& sets) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = load_config(config_path);
  for (const std::string& s : sets) {
    const std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got '" + s + "'");
    apply_override(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

void write_eval_csv(const EvalReport& rep, const std::string& path) {
  std::ostringstream out;
  out << "level,clean_acc,robust_acc,norm_order_fraction,mean_image_norm,"
         "mean_leaf_text_norm\n";
  for (std::size_t l = 0; l < rep.clean_acc.size(); ++l) {
    out << l << ',' << format_double(rep.clean_acc[l]) << ','
        << format_double(rep.robust_acc[l]) << ','
        << format_double(rep.norm_order_fraction) << ','
        << format_double(rep.mean_image_norm) << ','
        << format_double(rep.mean_leaf_text_norm) << "\n";
  }
  atomic_write(path, out.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hypalign: hierarchically robust image-text alignment in the "
               "Poincare ball"};
  app.require_subcommand(1);
  std::string out_dir = ".";
  app.add_option("--out-dir", out_dir, "Directory for output files");

  int rc = 0;

  // geom-test
  {
    auto* sub = app.add_subcommand("geom-test", "Geometry property checks");
    auto cases = std::make_shared<int>(1000);
    auto seed = std::make_shared<std::uint64_t>(0);
    sub->add_option("--cases", *cases);
    sub->add_option("--seed", *seed);
    sub->callback([=, &rc]() { rc = cmd_geom_test(*cases, *seed); });
  }

  // gradcheck
  {
    auto* sub = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
    auto cases = std::make_shared<int>(20);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto step = std::make_shared<double>(1e-5);
    auto tol = std::make_shared<double>(1e-4);
    sub->add_option("--cases", *cases);
    sub->add_option("--seed", *seed);
    sub->add_option("--step", *step);
    sub->add_option("--tol", *tol);
    sub->callback([=, &rc]() { rc = cmd_gradcheck(*cases, *seed, *step, *tol); });
  }

  // margin-curve
  {
    auto* sub = app.add_subcommand("margin-curve", "Emit margin-vs-norm CSV");
    auto spec = std::make_shared<MarginCurveSpec>();
    auto out = std::make_shared<std::string>("margin.csv");
    sub->add_option("--r", spec->r);
    sub->add_option("--lambda", spec->lambda);
    sub->add_option("--beta-c", spec->beta_c);
    sub->add_option("--beta-cp", spec->beta_cp);
    sub->add_option("--grid", spec->grid_points);
    sub->add_option("--out", *out);
    sub->callback([=, &out_dir]() {
      write_margin_curve(*spec, join_out(out_dir, *out));
      std::cout << "wrote " << join_out(out_dir, *out) << "\n";
    });
  }

  // gen-data
  {
    auto* sub = app.add_subcommand("gen-data", "Generate synthetic features");
    auto forest_path = std::make_shared<std::string>();
    auto config_path = std::make_shared<std::string>();
    auto sets = std::make_shared<std::vector<std::string>>();
    auto out = std::make_shared<std::string>("features.csv");
    sub->add_option("--forest", *forest_path)->required();
    sub->add_option("--config", *config_path);
    sub->add_option("--set", *sets, "key=value config override (repeatable)");
    sub->add_option("--out", *out);
    sub->callback([=, &out_dir]() {
      const RunConfig cfg = config_from_flags(*config_path, *sets);
      const HierarchyForest forest = load_forest(*forest_path);
      // same stream as the training split of `train` for the same config
      const std::vector<LabeledFeature> data = generate_synthetic(
          forest, cfg.samples_per_leaf, cfg.feature_dim, cfg.level_spread,
          cfg.leaf_noise, mix(cfg.seed, 101), cfg.seed);
      write_features_csv(data, join_out(out_dir, *out));
      std::cout << "wrote " << data.size() << " samples to "
                << join_out(out_dir, *out) << "\n";
    });
  }

  // train
  {
    auto* sub = app.add_subcommand("train", "Adversarial training run");
    auto forest_path = std::make_shared<std::string>();
    auto config_path = std::make_shared<std::string>();
    auto sets = std::make_shared<std::vector<std::string>>();
    auto train_csv = std::make_shared<std::string>();
    auto eval_csv = std::make_shared<std::string>();
    auto ckpt = std::make_shared<std::string>("model.ckpt");
    auto metrics = std::make_shared<std::string>("metrics.csv");
    sub->add_option("--forest", *forest_path)->required();
    sub->add_option("--config", *config_path);
    sub->add_option("--set", *sets, "key=value config override (repeatable)");
    sub->add_option("--train-csv", *train_csv, "Training features (generated if absent)");
    sub->add_option("--eval-csv", *eval_csv, "Eval features (generated if absent)");
    sub->add_option("--checkpoint", *ckpt);
    sub->add_option("--metrics", *metrics);
    sub->callback([=, &out_dir, &rc]() {
      const RunConfig cfg = config_from_flags(*config_path, *sets);
      const HierarchyForest forest = load_forest(*forest_path);
      atomic_write(join_out(out_dir, "effective.cfg"), cfg.serialize());
      std::vector<LabeledFeature> train_data =
          train_csv->empty()
              ? generate_synthetic(forest, cfg.samples_per_leaf, cfg.feature_dim,
                                   cfg.level_spread, cfg.leaf_noise,
                                   mix(cfg.seed, 101), cfg.seed)
              : load_features_csv(*train_csv);
      std::vector<LabeledFeature> eval_data =
          eval_csv->empty()
              ? generate_synthetic(forest,
                                   std::max(2, cfg.samples_per_leaf / 3),
                                   cfg.feature_dim, cfg.level_spread,
                                   cfg.leaf_noise, mix(cfg.seed, 202), cfg.seed)
              : load_features_csv(*eval_csv);
      const TrainResult res = train(cfg, forest, train_data, eval_data);
      save_checkpoint(res.model, cfg.hash(), join_out(out_dir, *ckpt));
      write_metrics_csv(res.metrics, join_out(out_dir, *metrics));
      if (res.diverged) {
        std::cerr << "training diverged after " << res.completed_epochs
                  << " completed epochs; last finite checkpoint saved\n";
        rc = 2;
        return;
      }
      for (auto it = res.metrics.end() -
                     std::min<std::size_t>(res.metrics.size(),
                                           forest.trees[0].depth + 1);
           it != res.metrics.end(); ++it) {
        std::cout << "level " << it->level << ": clean "
                  << format_double(it->clean_acc) << " robust "
                  << format_double(it->robust_acc) << "\n";
      }
    });
  }

  // attack
  {
    auto* sub = app.add_subcommand("attack", "Generate adversarial features");
    auto ckpt = std::make_shared<std::string>();
    auto forest_path = std::make_shared<std::string>();
    auto features_path = std::make_shared<std::string>();
    auto config_path = std::make_shared<std::string>();
    auto sets = std::make_shared<std::vector<std::string>>();
    auto spec = std::make_shared<PerturbationSpec>();
    auto out = std::make_shared<std::string>("adversarial.csv");
    sub->add_option("--checkpoint", *ckpt)->required();
    sub->add_option("--forest", *forest_path)->required();
    sub->add_option("--features", *features_path)->required();
    sub->add_option("--config", *config_path);
    sub->add_option("--set", *sets, "key=value config override (repeatable)");
    sub->add_option("--strategy", spec->strategy);
    sub->add_option("--steps", spec->steps);
    sub->add_option("--eps-x", spec->eps_x);
    sub->add_option("--alpha-x", spec->alpha_x);
    sub->add_option("--eps-t", spec->eps_t);
    sub->add_option("--alpha-t", spec->alpha_t);
    sub->add_option("--seed", spec->seed);
    sub->add_option("--out", *out);
    sub->callback([=, &out_dir]() {
      const RunConfig cfg = config_from_flags(*config_path, *sets);
      const HierarchyForest forest = load_forest(*forest_path);
      const Model model = load_checkpoint(*ckpt).model;
      const std::vector<LabeledFeature> data = load_features_csv(*features_path);
      std::vector<std::vector<double>> xs;
      for (const LabeledFeature& rec : data) xs.push_back(rec.features);
      const std::vector<int> leaves = leaf_indices(forest, data);
      ObjectiveOptions opt = objective_options(cfg);
      opt.include_regularizers = cfg.attack_full_objective;
      const std::vector<AdversarialBatch> advs = generate_hierarchical_adversaries(
          model, forest, xs, leaves, *spec, opt);
      for (std::size_t k = 0; k < advs.size(); ++k) {
        std::string path = join_out(out_dir, *out);
        if (advs.size() > 1) {
          const std::size_t dot = path.rfind('.');
          const std::string stem = dot == std::string::npos ? path : path.substr(0, dot);
          const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
          path = stem + ".level" + std::to_string(k) + ext;
        }
        std::vector<LabeledFeature> pert = data;
        for (std::size_t i = 0; i < pert.size(); ++i)
          pert[i].features = advs[k].features[i];
        write_features_csv(pert, path);
        std::cout << "batch " << k << " loss trace:";
        for (double v : advs[k].loss_trace) std::cout << ' ' << format_double(v);
        std::cout << "\nwrote " << path << "\n";
      }
    });
  }

  // eval + transfer-eval share flags
  for (const bool transfer : {false, true}) {
    auto* sub = app.add_subcommand(
        transfer ? "transfer-eval" : "eval",
        transfer ? "Attack-level x eval-level transfer matrix"
                 : "Clean and PGD-robust accuracy per level");
    auto ckpt = std::make_shared<std::string>();
    auto forest_path = std::make_shared<std::string>();
    auto features_path = std::make_shared<std::string>();
    auto spec = std::make_shared<PerturbationSpec>();
    auto temperature = std::make_shared<double>(1.0);
    auto out = std::make_shared<std::string>(transfer ? "transfer.csv" : "eval.csv");
    spec->steps = 20;
    sub->add_option("--checkpoint", *ckpt)->required();
    sub->add_option("--forest", *forest_path)->required();
    sub->add_option("--features", *features_path)->required();
    sub->add_option("--steps", spec->steps);
    sub->add_option("--eps-x", spec->eps_x);
    sub->add_option("--alpha-x", spec->alpha_x);
    sub->add_option("--seed", spec->seed);
    sub->add_option("--temperature", *temperature);
    sub->add_option("--out", *out);
    sub->callback([=, &out_dir]() {
      const HierarchyForest forest = load_forest(*forest_path);
      const Model model = load_checkpoint(*ckpt).model;
      const std::vector<LabeledFeature> data = load_features_csv(*features_path);
      const std::string path = join_out(out_dir, *out);
      if (transfer) {
        const TransferMatrix tm =
            transfer_attack_eval(model, forest, data, *spec, *temperature);
        std::ostringstream os;
        os << "attack_level,eval_level,success_rate\n";
        for (std::size_t a = 0; a < tm.success.size(); ++a)
          for (std::size_t e = 0; e < tm.success[a].size(); ++e)
            os << a << ',' << e << ',' << format_double(tm.success[a][e]) << "\n";
        atomic_write(path, os.str());
      } else {
        write_eval_csv(evaluate(model, forest, data, *spec, *temperature), path);
      }
      std::cout << "wrote " << path << "\n";
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const GradError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CheckFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return rc;
}
