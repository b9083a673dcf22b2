#include <cmath>

#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "hypalign/trainer.hpp"

using namespace hypalign;

namespace {

RunConfig small_cfg() {
  RunConfig cfg;
  cfg.feature_dim = 6;
  cfg.embed_dim = 4;
  cfg.samples_per_leaf = 6;
  cfg.batch_size = 12;
  cfg.epochs = 4;
  cfg.eps_x = 0.1;
  cfg.alpha_x = 0.04;
  cfg.pgd_steps_train = 2;
  return cfg;
}

}  // namespace

TEST_CASE("zero epochs leave the parameters at their init") {
  const HierarchyForest f = testutil::small_forest();
  RunConfig cfg = small_cfg();
  cfg.epochs = 0;
  const auto data = generate_synthetic(f, 6, 6, 1.0, 0.25, 0);
  const TrainResult res = train(cfg, f, data, data);
  const Model fresh = Model::init(f, cfg.feature_dim, cfg.embed_dim, cfg.r,
                                  cfg.xi, cfg.seed);
  CHECK(res.model.params == fresh.params);
  CHECK(res.completed_epochs == 0);
  CHECK(res.metrics.empty());
  CHECK_FALSE(res.diverged);
}

TEST_CASE("unknown labels are rejected up front") {
  const HierarchyForest f = testutil::small_forest();
  std::vector<LabeledFeature> data(1);
  data[0].label = "unicorn";
  data[0].features.assign(6, 0.0);
  CHECK_THROWS_AS(leaf_indices(f, data), std::out_of_range);
  CHECK_THROWS_AS(train(small_cfg(), f, data, data), std::out_of_range);
}

TEST_CASE("clean hierarchical training reduces the loss") {
  // lambda1 = lambda2 = 0, zero-radius attack: plain hierarchical training
  const HierarchyForest f = testutil::small_forest();
  RunConfig cfg = small_cfg();
  cfg.lambda1 = 0.0;
  cfg.lambda2 = 0.0;
  cfg.eps_x = 1e-9;
  cfg.alpha_x = 1e-12;
  cfg.eps_t = 1e-12;
  cfg.alpha_t = 1e-13;
  cfg.init_noise = 0.0;
  cfg.pgd_steps_train = 0;
  cfg.epochs = 20;
  cfg.learning_rate = 0.03;
  const auto data = generate_synthetic(f, 6, 6, 1.5, 0.15, 0);
  const TrainResult res = train(cfg, f, data, data);
  REQUIRE_FALSE(res.diverged);
  REQUIRE_FALSE(res.metrics.empty());
  const double first = res.metrics.front().loss_total;
  const double last = res.metrics.back().loss_total;
  CHECK(last < first);
}

TEST_CASE("training and metrics are deterministic") {
  const HierarchyForest f = testutil::small_forest();
  const RunConfig cfg = small_cfg();
  const auto data = generate_synthetic(f, 6, 6, 1.0, 0.25, 3);
  const auto eval_data = generate_synthetic(f, 3, 6, 1.0, 0.25, 4);
  const TrainResult a = train(cfg, f, data, eval_data);
  const TrainResult b = train(cfg, f, data, eval_data);
  CHECK(a.model.params == b.model.params);
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    CHECK(a.metrics[i].clean_acc == b.metrics[i].clean_acc);
    CHECK(a.metrics[i].robust_acc == b.metrics[i].robust_acc);
    CHECK(a.metrics[i].loss_total == b.metrics[i].loss_total);
  }
  // metrics rows cover every (epoch, level)
  CHECK(a.metrics.size() ==
        static_cast<std::size_t>(cfg.epochs) * (f.trees[0].depth + 1));
}

TEST_CASE("zero-radius evaluation equals clean accuracy") {
  const HierarchyForest f = testutil::small_forest();
  RunConfig cfg = small_cfg();
  cfg.epochs = 2;
  const auto data = generate_synthetic(f, 6, 6, 1.0, 0.25, 5);
  const TrainResult res = train(cfg, f, data, data);

  PerturbationSpec spec;
  spec.eps_x = 0.0;
  spec.alpha_x = 0.0;
  spec.init_noise = 0.0;
  spec.steps = 5;
  const EvalReport rep = evaluate(res.model, f, data, spec, 1.0);
  REQUIRE(rep.clean_acc.size() == 3);
  for (std::size_t l = 0; l < rep.clean_acc.size(); ++l)
    CHECK(rep.robust_acc[l] == rep.clean_acc[l]);
  CHECK(rep.norm_order_fraction >= 0.0);
  CHECK(rep.norm_order_fraction <= 1.0);
}

TEST_CASE("an untrained model on two classes sits near chance") {
  // zero spread makes both classes draw from the same feature distribution
  const HierarchyForest f = testutil::minimal_forest();
  const Model m = Model::init(f, 6, 4, 1.0, 1e-5, 12345);
  const auto data = generate_synthetic(f, 40, 6, 0.0, 0.25, 6);
  PerturbationSpec spec;
  spec.eps_x = 0.0;
  spec.alpha_x = 0.0;
  spec.init_noise = 0.0;
  spec.steps = 0;
  const EvalReport rep = evaluate(m, f, data, spec, 1.0);
  CHECK(rep.clean_acc[0] >= 0.2);
  CHECK(rep.clean_acc[0] <= 0.8);
  CHECK(rep.clean_acc[1] == 1.0);  // single top-band class
}

TEST_CASE("transfer matrix with zero radius reports zero attack success") {
  const HierarchyForest f = testutil::small_forest();
  RunConfig cfg = small_cfg();
  cfg.epochs = 2;
  const auto data = generate_synthetic(f, 4, 6, 1.0, 0.25, 7);
  const TrainResult res = train(cfg, f, data, data);

  PerturbationSpec spec;
  spec.eps_x = 0.0;
  spec.alpha_x = 0.0;
  spec.init_noise = 0.0;
  spec.steps = 3;
  const TransferMatrix tm = transfer_attack_eval(res.model, f, data, spec, 1.0);
  REQUIRE(tm.success.size() == 3);
  for (int a = 0; a < 3; ++a)
    for (int e = 0; e < 3; ++e)
      CHECK(tm.success[a][e] == 0.0);  // no flip without a perturbation
}

TEST_CASE("superclass accuracy is at least leaf accuracy after training") {
  const HierarchyForest f = testutil::small_forest();
  RunConfig cfg = small_cfg();
  cfg.epochs = 8;
  const auto data = generate_synthetic(f, 8, 6, 1.5, 0.2, 9);
  const TrainResult res = train(cfg, f, data, data);
  REQUIRE_FALSE(res.diverged);
  PerturbationSpec spec;
  spec.eps_x = 0.0;
  spec.alpha_x = 0.0;
  spec.init_noise = 0.0;
  spec.steps = 0;
  const EvalReport rep = evaluate(res.model, f, data, spec, 1.0);
  CHECK(rep.clean_acc[1] >= rep.clean_acc[0] - 1e-12);
}

TEST_CASE("per-level strategy trains and stays within contract") {
  const HierarchyForest f = testutil::small_forest();
  RunConfig cfg = small_cfg();
  cfg.strategy = "per-level";
  cfg.epochs = 2;
  const auto data = generate_synthetic(f, 4, 6, 1.0, 0.25, 10);
  const TrainResult res = train(cfg, f, data, data);
  CHECK_FALSE(res.diverged);
  CHECK(res.completed_epochs == 2);
}
