#include "hypalign/tape.hpp"

#include <algorithm>

namespace hypalign {

GradientReport evaluate_with_gradients(
    const std::function<Var(Tape&, const std::vector<Var>&)>& build,
    std::span<const double> x) {
  Tape tape;
  std::vector<Var> inputs = make_inputs(tape, x);
  Var loss = build(tape, inputs);
  std::vector<double> adj = tape.gradient(loss);
  GradientReport rep;
  rep.loss = loss.value();
  rep.grads.reserve(inputs.size());
  for (const Var& v : inputs) rep.grads.push_back(adj[v.id]);
  return rep;
}

FiniteDiffReport finite_diff_check(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, std::span<const double> analytic_grad,
    double step, double tolerance) {
  if (step <= 0.0) throw std::invalid_argument("finite_diff_check: step must be positive");
  if (x.size() != analytic_grad.size())
    throw std::invalid_argument("finite_diff_check: gradient size mismatch");

  FiniteDiffReport rep;
  std::vector<double> xp(x.begin(), x.end());
  const double f0 = f(xp);
  for (std::size_t i = 0; i < xp.size(); ++i) {
    const double xi = xp[i];
    xp[i] = xi + step;
    const double fp = f(xp);
    xp[i] = xi - step;
    const double fm = f(xp);
    xp[i] = xi;

    const double dplus = (fp - f0) / step;
    const double dminus = (f0 - fm) / step;
    // One-sided slopes that disagree mark a non-differentiable point.
    if (std::fabs(dplus - dminus) > 0.25 * std::max(1.0, std::fabs(dplus) + std::fabs(dminus))) {
      rep.excluded.push_back(static_cast<int>(i));
      continue;
    }
    const double fd = (fp - fm) / (2.0 * step);
    const double g = analytic_grad[i];
    const double rel = std::fabs(fd - g) / std::max({std::fabs(fd), std::fabs(g), 1e-8});
    rep.max_rel_err = std::max(rep.max_rel_err, rel);
    if (rel > tolerance) {
      rep.failing.push_back(static_cast<int>(i));
      rep.pass = false;
    }
  }
  return rep;
}

FiniteDiffReport finite_diff_check(
    const std::function<Var(Tape&, const std::vector<Var>&)>& build,
    std::span<const double> x, double step, double tolerance) {
  GradientReport g = evaluate_with_gradients(build, x);
  auto f = [&build](std::span<const double> xs) {
    Tape tape;
    std::vector<Var> inputs = make_inputs(tape, xs);
    return build(tape, inputs).value();
  };
  return finite_diff_check(f, x, g.grads, step, tolerance);
}

}  // namespace hypalign
