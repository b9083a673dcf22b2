#include <cmath>

#include <stdexcept>

#include "doctest.h"
#include "helpers.hpp"
#include "hypalign/geometry.hpp"
#include "hypalign/tape.hpp"

using namespace hypalign;

TEST_CASE("quadratic gradients are exact") {
  auto build = [](Tape&, const std::vector<Var>& x) {
    return x[0] * x[0] + x[1] * x[1];
  };
  const std::vector<double> x{1.0, 2.0};
  const GradientReport rep = evaluate_with_gradients(build, x);
  CHECK(rep.loss == doctest::Approx(5.0));
  CHECK(rep.grads[0] == doctest::Approx(2.0));
  CHECK(rep.grads[1] == doctest::Approx(4.0));
}

TEST_CASE("linear map passes finite differences almost exactly") {
  auto build = [](Tape&, const std::vector<Var>& x) {
    return 3.0 * x[0] - 2.0 * x[1] + 0.5 * x[2];
  };
  const std::vector<double> x{0.3, -1.2, 4.0};
  const FiniteDiffReport rep = finite_diff_check(build, x, 1e-5, 1e-10);
  CHECK(rep.pass);
  CHECK(rep.max_rel_err < 1e-10);
}

TEST_CASE("riemannian distance gradient matches finite differences") {
  auto build = [](Tape& tape, const std::vector<Var>& x) {
    std::vector<Var> origin = make_constants(tape, std::vector<double>{0.0, 0.0});
    return geom::distance(origin, x, 1.0);
  };
  const std::vector<double> x{0.5, 0.0};
  const FiniteDiffReport rep = finite_diff_check(build, x, 1e-5, 1e-6);
  CHECK(rep.pass);
}

TEST_CASE("hyp_avg gradients w.r.t. every point pass at 1e-4") {
  auto build = [](Tape&, const std::vector<Var>& x) {
    std::vector<std::vector<Var>> pts = {
        {x[0], x[1]}, {x[2], x[3]}, {x[4], x[5]}};
    const std::vector<Var> avg = geom::hyp_avg(pts, 1.0);
    return geom::sq_norm(avg) + avg[0];
  };
  const std::vector<double> x{0.2, 0.1, -0.3, 0.25, 0.05, -0.4};
  const FiniteDiffReport rep = finite_diff_check(build, x, 1e-5, 1e-4);
  CHECK(rep.pass);
}

TEST_CASE("hinge kinks are excluded, not failed") {
  auto build = [](Tape&, const std::vector<Var>& x) { return relu(x[0]); };
  const std::vector<double> x{0.0};
  const FiniteDiffReport rep = finite_diff_check(build, x, 1e-5, 1e-6);
  CHECK(rep.pass);
  REQUIRE(rep.excluded.size() == 1);
  CHECK(rep.excluded[0] == 0);
}

TEST_CASE("abs and relu use subgradient zero at the origin") {
  Tape tape;
  Var x = tape.input(0.0);
  const std::vector<double> ga = tape.gradient(abs(x));
  CHECK(ga[x.id] == 0.0);
  const std::vector<double> gr = tape.gradient(relu(x));
  CHECK(gr[x.id] == 0.0);
}

TEST_CASE("non-finite intermediates name the offending primitive") {
  Tape tape;
  Var x = tape.input(-1.0);
  CHECK_THROWS_WITH_AS(log(x), doctest::Contains("log"), GradError);
  Var y = tape.input(2.0);
  CHECK_THROWS_WITH_AS(atanh(y), doctest::Contains("atanh"), GradError);
}

TEST_CASE("gradients are reproducible bit for bit") {
  SeededGaussian rng(3);
  std::vector<double> x(6);
  for (double& v : x) v = 0.3 * rng.normal();
  auto build = [](Tape&, const std::vector<Var>& in) {
    Var s = in[0] * in[1] + exp(in[2] * 0.1);
    s = s + tanh(in[3]) / (2.0 + in[4] * in[4]);
    return s * s + sqrt(1.0 + in[5] * in[5]);
  };
  const GradientReport a = evaluate_with_gradients(build, x);
  const GradientReport b = evaluate_with_gradients(build, x);
  CHECK(a.loss == b.loss);
  for (std::size_t i = 0; i < a.grads.size(); ++i)
    CHECK(a.grads[i] == b.grads[i]);
}

TEST_CASE("per-primitive gradient checks at interior points") {
  SeededGaussian rng(5);
  int checked = 0;
  for (int k = 0; k < 100; ++k) {
    std::vector<double> x(2);
    x[0] = 0.1 + 0.7 * rng.uniform();
    x[1] = 0.1 + 0.7 * rng.uniform();
    auto build = [k](Tape&, const std::vector<Var>& in) {
      switch (k % 8) {
        case 0: return sqrt(in[0]) + in[1];
        case 1: return exp(in[0]) * in[1];
        case 2: return log(in[0] + in[1]);
        case 3: return tanh(in[0] - in[1]);
        case 4: return atanh(in[0] * 0.9);
        case 5: return acosh(1.5 + in[0]);
        case 6: return abs(in[0] - 0.9) + relu(in[1] - 0.05);
        default: return in[0] / in[1] - in[1] / (in[0] + 1.0);
      }
    };
    const FiniteDiffReport rep = finite_diff_check(build, x, 1e-5, 1e-4);
    CHECK(rep.pass);
    ++checked;
  }
  CHECK(checked == 100);
}
