#pragma once

#include <cmath>
#include <vector>

#include "hypalign/dataio.hpp"
#include "hypalign/hierarchy.hpp"

namespace testutil {

inline std::vector<double> random_ball_point(hypalign::SeededGaussian& rng,
                                             int dim, double r,
                                             double max_frac = 0.95) {
  std::vector<double> p(dim);
  double ss = 0.0;
  for (double& v : p) {
    v = rng.normal();
    ss += v * v;
  }
  const double radius = (0.02 + (max_frac - 0.02) * rng.uniform()) / std::sqrt(r);
  const double scale = radius / std::sqrt(ss);
  for (double& v : p) v *= scale;
  return p;
}

// Independent Einstein-midpoint oracle: convert to Klein coordinates, take the
// Lorentz-factor-weighted average, convert back.
inline std::vector<double> klein_oracle_avg(
    const std::vector<std::vector<double>>& points, double r) {
  const std::size_t d = points[0].size();
  std::vector<double> num(d, 0.0);
  double den = 0.0;
  for (const std::vector<double>& z : points) {
    double zz = 0.0;
    for (double v : z) zz += v * v;
    const double kc = 2.0 / (1.0 + r * zz);
    double kk = 0.0;
    for (double v : z) kk += (kc * v) * (kc * v);
    const double gamma = 1.0 / std::sqrt(1.0 - r * kk);
    for (std::size_t i = 0; i < d; ++i) num[i] += gamma * kc * z[i];
    den += gamma;
  }
  std::vector<double> k(d);
  double kk = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    k[i] = num[i] / den;
    kk += k[i] * k[i];
  }
  // Klein -> Poincare: z = k / (1 + sqrt(1 - r|k|^2)).
  const double f = 1.0 + std::sqrt(std::max(0.0, 1.0 - r * kk));
  for (double& v : k) v /= f;
  return k;
}

// Two-superclass, four-leaf tree used across tests:
//   animal <- {insect <- {ant, bee}, mammal <- {cat, dog}}
inline hypalign::HierarchyForest small_forest() {
  return hypalign::parse_forest(
      "ant\tinsect\nbee\tinsect\ncat\tmammal\ndog\tmammal\n"
      "insect\tanimal\nmammal\tanimal\n");
}

// Minimal tree: cat, dog -> animal (L = 1).
inline hypalign::HierarchyForest minimal_forest() {
  return hypalign::parse_forest("cat\tanimal\ndog\tanimal\n");
}

}  // namespace testutil
