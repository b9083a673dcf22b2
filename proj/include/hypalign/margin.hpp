#pragma once

#include <string>
#include <vector>

namespace hypalign {

/// Equal-norm margin query: image and text embeddings share norm eta; the
/// target text sits at angle theta_c, the nearest rival at theta_cp.
struct MarginQuery {
  double eta = 0.0;      // in [0, 1/sqrt(r))
  double theta_c = 0.0;  // [0, pi]
  double theta_cp = 0.0;
  double lambda = 1.0;   // softmax temperature, > 0
  double r = 1.0;

  double beta_c() const;   // 1 - cos(theta_c)
  double beta_cp() const;
};

/// alpha(eta) = 4 r eta^2 / (1 - r eta^2)^2.
double alpha_factor(double eta, double r);

/// (lambda/sqrt(r)) [acosh(1 + alpha beta_cp) - acosh(1 + alpha beta_c)].
double hyperbolic_log_margin(const MarginQuery& q);

/// Euclidean comparator: 2 lambda eta^2 (beta_cp - beta_c).
double euclidean_margin(const MarginQuery& q);

/// Small-eta asymptote (lambda/sqrt(r)) sqrt(2 alpha) (sqrt(beta_cp) - sqrt(beta_c)).
double hyperbolic_margin_small_eta(const MarginQuery& q);

/// Large-eta asymptote (lambda/sqrt(r)) log(beta_cp / beta_c); +inf when
/// beta_c == 0.
double hyperbolic_margin_large_eta(const MarginQuery& q);

struct MarginCurveSpec {
  double r = 1.0;
  double lambda = 1.0;
  double beta_c = 1e-3;
  double beta_cp = 1.0;
  int grid_points = 400;  // log-spaced on [1e-4, (1 - 1e-6)/sqrt(r)]
};

/// CSV with columns eta,m_hyp,m_euc,m_hyp_small_asym,m_hyp_large_asym.
std::string margin_curve_csv(const MarginCurveSpec& spec);
void write_margin_curve(const MarginCurveSpec& spec, const std::string& path);

}  // namespace hypalign
