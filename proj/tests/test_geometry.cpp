#include <cmath>

#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "hypalign/geometry.hpp"

using namespace hypalign;
using testutil::random_ball_point;

TEST_CASE("mobius addition identities and collinear value") {
  const std::vector<double> zero{0.0, 0.0};
  const std::vector<double> v{0.3, 0.0};
  auto res = geom::mobius_add(zero, v, 1.0);
  CHECK(res[0] == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(res[1] == doctest::Approx(0.0).epsilon(1e-15));

  auto inv = geom::mobius_add<double>({0.5, 0.0}, {-0.5, 0.0}, 1.0);
  CHECK(std::fabs(inv[0]) < 1e-15);
  CHECK(std::fabs(inv[1]) < 1e-15);

  // collinear case reduces to (a+b)/(1+r*a*b)
  auto col = geom::mobius_add<double>({0.5, 0.0}, {0.5, 0.0}, 1.0);
  CHECK(col[0] == doctest::Approx(0.8).epsilon(1e-14));

  SeededGaussian rng(7);
  for (int k = 0; k < 200; ++k) {
    const double r = (k % 3 == 0) ? 0.5 : (k % 3 == 1 ? 1.0 : 2.0);
    const auto u = random_ball_point(rng, 3, r);
    const auto w = random_ball_point(rng, 3, r);
    std::vector<double> nu{-u[0], -u[1], -u[2]};
    const auto cancel = geom::mobius_add(nu, geom::mobius_add(u, w, r), r);
    const auto left = geom::mobius_add({0, 0, 0}, w, r);
    const auto right = geom::mobius_add(w, {0, 0, 0}, r);
    const auto self = geom::mobius_add(u, nu, r);
    for (int i = 0; i < 3; ++i) {
      CHECK(std::fabs(cancel[i] - w[i]) < 1e-12);
      CHECK(std::fabs(left[i] - w[i]) < 1e-12);
      CHECK(std::fabs(right[i] - w[i]) < 1e-12);
      CHECK(std::fabs(self[i]) < 1e-12);
    }
  }
}

TEST_CASE("conformal factor values and blow-up") {
  CHECK(geom::conformal_factor<double>({0.0, 0.0}, 1.0) == doctest::Approx(2.0));
  CHECK(geom::conformal_factor<double>({0.5, 0.0}, 1.0) ==
        doctest::Approx(8.0 / 3.0).epsilon(1e-14));
  CHECK(geom::conformal_factor<double>({0.9999, 0.0}, 1.0) > 1e3);
  CHECK_THROWS_AS(geom::conformal_factor<double>({1.0, 0.0}, 1.0),
                  std::domain_error);
}

TEST_CASE("exp map at origin and zero tangent") {
  auto at_origin = geom::exp_map<double>({0.0, 0.0}, {0.25, 0.0}, 1.0);
  CHECK(at_origin[0] == doctest::Approx(std::tanh(0.25)).epsilon(1e-14));
  CHECK(at_origin[1] == doctest::Approx(0.0));

  auto fixed = geom::exp_map<double>({0.1, -0.2}, {0.0, 0.0}, 1.0);
  CHECK(fixed[0] == 0.1);
  CHECK(fixed[1] == -0.2);
}

TEST_CASE("log map inverse and coincident points") {
  auto lg = geom::log_map<double>({0.0, 0.0}, {std::tanh(0.25), 0.0}, 1.0);
  CHECK(lg[0] == doctest::Approx(0.25).epsilon(1e-12));

  auto zero = geom::log_map<double>({0.3, 0.1}, {0.3, 0.1}, 1.0);
  CHECK(zero[0] == 0.0);
  CHECK(zero[1] == 0.0);
}

TEST_CASE("exp/log round trip: 1000 cases, r in {0.5, 1, 2}, rel < 1e-9") {
  SeededGaussian rng(11);
  const double rs[] = {0.5, 1.0, 2.0};
  for (int k = 0; k < 1000; ++k) {
    const double r = rs[k % 3];
    const int dim = 2 + static_cast<int>(rng.raw() % 6);
    const auto u = random_ball_point(rng, dim, r, 0.9);
    const auto w = random_ball_point(rng, dim, r, 0.9);
    const auto t = geom::log_map(u, w, r);
    const auto back = geom::exp_map(u, t, r);
    double err = 0.0, norm = 0.0;
    for (int i = 0; i < dim; ++i) {
      err += (back[i] - w[i]) * (back[i] - w[i]);
      norm += w[i] * w[i];
    }
    CHECK(std::sqrt(err) / (std::sqrt(norm) + 1e-12) < 1e-9);

    // forward direction: log(exp(v)) = v
    const auto v = geom::log_map(u, random_ball_point(rng, dim, r, 0.9), r);
    const auto rt = geom::log_map(u, geom::exp_map(u, v, r), r);
    double verr = 0.0, vnorm = 0.0;
    for (int i = 0; i < dim; ++i) {
      verr += (rt[i] - v[i]) * (rt[i] - v[i]);
      vnorm += v[i] * v[i];
    }
    CHECK(std::sqrt(verr) / (std::sqrt(vnorm) + 1e-12) < 1e-9);
  }
}

TEST_CASE("distance values, metric axioms, dual form") {
  CHECK(geom::distance<double>({0.4, 0.2}, {0.4, 0.2}, 1.0) == 0.0);
  CHECK(geom::distance<double>({0.0, 0.0}, {0.5, 0.0}, 1.0) ==
        doctest::Approx(std::log(3.0)).epsilon(1e-14));

  SeededGaussian rng(13);
  const double rs[] = {0.5, 1.0, 2.0};
  for (int k = 0; k < 1000; ++k) {
    const double r = rs[k % 3];
    const auto u = random_ball_point(rng, 4, r);
    const auto v = random_ball_point(rng, 4, r);
    const auto w = random_ball_point(rng, 4, r);
    const double duv = geom::distance(u, v, r);
    CHECK(duv >= 0.0);
    CHECK(std::fabs(duv - geom::distance(v, u, r)) < 1e-10);
    CHECK(geom::distance(u, w, r) <=
          duv + geom::distance(v, w, r) + 1e-9);
    const double acosh_form = geom::distance_acosh_form(u, v, r);
    CHECK(std::fabs(duv - acosh_form) / std::max(duv, 1e-12) < 1e-8);
  }
}

TEST_CASE("project_to_ball branches and idempotence") {
  auto id = geom::project_to_ball<double>({0.9, 0.0}, 1.0, 1e-5);
  CHECK(id[0] == 0.9);

  auto clipped = geom::project_to_ball<double>({2.0, 0.0}, 1.0, 1e-5);
  CHECK(clipped[0] == doctest::Approx(0.99999).epsilon(1e-12));

  auto scaled = geom::project_to_ball<double>({0.0, 3.0}, 4.0, 0.0);
  CHECK(scaled[1] == doctest::Approx(0.5).epsilon(1e-12));

  auto twice = geom::project_to_ball(clipped, 1.0, 1e-5);
  CHECK(twice[0] == clipped[0]);
}

TEST_CASE("hyp_avg properties and Klein oracle") {
  auto single = geom::hyp_avg<double>({{0.6, 0.0}}, 1.0);
  CHECK(single[0] == doctest::Approx(0.6).epsilon(1e-12));

  auto anti = geom::hyp_avg<double>({{0.6, 0.0}, {-0.6, 0.0}}, 1.0);
  CHECK(std::fabs(anti[0]) < 1e-12);
  CHECK(std::fabs(anti[1]) < 1e-12);

  auto diag = geom::hyp_avg<double>({{0.6, 0.0}, {0.0, 0.6}}, 1.0);
  CHECK(diag[0] == doctest::Approx(diag[1]).epsilon(1e-12));
  CHECK(diag[0] > 0.0);
  // strict norm reduction for distinct equal-norm points
  CHECK(std::sqrt(geom::sq_norm(diag)) < 0.6);

  CHECK_THROWS_AS(geom::hyp_avg<double>({}, 1.0), std::invalid_argument);

  SeededGaussian rng(17);
  const double rs[] = {0.5, 1.0, 2.0};
  for (int k = 0; k < 500; ++k) {
    const double r = rs[k % 3];
    const int dim = 2 + static_cast<int>(rng.raw() % 5);
    const int m = 2 + static_cast<int>(rng.raw() % 5);
    std::vector<std::vector<double>> pts;
    double max_norm = 0.0;
    for (int i = 0; i < m; ++i) {
      pts.push_back(random_ball_point(rng, dim, r));
      max_norm = std::max(max_norm, std::sqrt(geom::sq_norm(pts.back())));
    }
    const auto avg = geom::hyp_avg(pts, r);
    const auto oracle = testutil::klein_oracle_avg(pts, r);
    for (int i = 0; i < dim; ++i)
      CHECK(std::fabs(avg[i] - oracle[i]) /
                std::max(std::fabs(oracle[i]), 1e-10) <
            1e-8);
    CHECK(std::sqrt(geom::sq_norm(avg)) <= max_norm + 1e-12);

    std::vector<std::vector<double>> permuted(pts.rbegin(), pts.rend());
    const auto avg2 = geom::hyp_avg(permuted, r);
    for (int i = 0; i < dim; ++i) CHECK(std::fabs(avg[i] - avg2[i]) < 1e-12);
  }
}

TEST_CASE("equal_norm_distance closed form") {
  CHECK(geom::equal_norm_distance(0.3, 0.0, 1.0) == doctest::Approx(0.0));
  const double expected = std::acosh(1.0 + 16.0 / 9.0);
  CHECK(geom::equal_norm_distance(0.5, M_PI / 2, 1.0) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(1.6809).epsilon(1e-4));
  // cross-check against the general distance
  CHECK(geom::equal_norm_distance(0.5, M_PI / 2, 1.0) ==
        doctest::Approx(geom::distance<double>({0.5, 0.0}, {0.0, 0.5}, 1.0))
            .epsilon(1e-8));
  // small-eta behaviour: result ~ sqrt(2 alpha beta) / sqrt(r)
  const double eta = 1e-5, beta = 1.0;
  const double alpha = 4.0 * eta * eta / ((1.0 - eta * eta) * (1.0 - eta * eta));
  CHECK(geom::equal_norm_distance(eta, M_PI / 2, 1.0) ==
        doctest::Approx(std::sqrt(2.0 * alpha * beta)).epsilon(1e-6));
}

TEST_CASE("checked point API validates the ball constraint") {
  const Curvature r(1.0);
  CHECK_THROWS_AS(BallPoint::checked({1.0, 0.0}, r), std::domain_error);
  CHECK_THROWS_AS(Curvature(0.0), std::domain_error);
  const BallPoint u = BallPoint::checked({0.2, 0.1}, r);
  const BallPoint v = BallPoint::checked({-0.1, 0.4}, r);
  CHECK(riemannian_distance(u, v, r) > 0.0);
  const TangentVector t = log_map(u, v, r);
  const BallPoint back = exp_map(u, t, r);
  CHECK(back.coords[0] == doctest::Approx(v.coords[0]).epsilon(1e-10));
  CHECK(back.coords[1] == doctest::Approx(v.coords[1]).epsilon(1e-10));
}
