#include "hypalign/margin.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "hypalign/dataio.hpp"

namespace hypalign {

namespace {

void check_eta(double eta, double r) {
  if (eta < 0.0 || !(r * eta * eta < 1.0))
    throw std::domain_error("margin: eta must lie in [0, 1/sqrt(r))");
}

double margin_from_betas(double eta, double beta_c, double beta_cp, double lambda,
                         double r) {
  check_eta(eta, r);
  const double a = alpha_factor(eta, r);
  return lambda / std::sqrt(r) *
         (std::acosh(1.0 + a * beta_cp) - std::acosh(1.0 + a * beta_c));
}

double small_eta_from_betas(double eta, double beta_c, double beta_cp,
                            double lambda, double r) {
  check_eta(eta, r);
  const double a = alpha_factor(eta, r);
  return lambda / std::sqrt(r) * std::sqrt(2.0 * a) *
         (std::sqrt(beta_cp) - std::sqrt(beta_c));
}

double large_eta_from_betas(double beta_c, double beta_cp, double lambda, double r) {
  if (beta_c == 0.0) return std::numeric_limits<double>::infinity();
  return lambda / std::sqrt(r) * std::log(beta_cp / beta_c);
}

}  // namespace

double MarginQuery::beta_c() const { return 1.0 - std::cos(theta_c); }
double MarginQuery::beta_cp() const { return 1.0 - std::cos(theta_cp); }

double alpha_factor(double eta, double r) {
  check_eta(eta, r);
  const double g = 1.0 - r * eta * eta;
  return 4.0 * r * eta * eta / (g * g);
}

double hyperbolic_log_margin(const MarginQuery& q) {
  if (!(q.lambda > 0.0)) throw std::domain_error("margin: lambda must be positive");
  return margin_from_betas(q.eta, q.beta_c(), q.beta_cp(), q.lambda, q.r);
}

double euclidean_margin(const MarginQuery& q) {
  return 2.0 * q.lambda * q.eta * q.eta * (q.beta_cp() - q.beta_c());
}

double hyperbolic_margin_small_eta(const MarginQuery& q) {
  return small_eta_from_betas(q.eta, q.beta_c(), q.beta_cp(), q.lambda, q.r);
}

double hyperbolic_margin_large_eta(const MarginQuery& q) {
  return large_eta_from_betas(q.beta_c(), q.beta_cp(), q.lambda, q.r);
}

std::string margin_curve_csv(const MarginCurveSpec& spec) {
  if (spec.grid_points < 2)
    throw std::invalid_argument("margin curve: need at least 2 grid points");
  if (spec.beta_c < 0.0 || spec.beta_cp < 0.0 || spec.beta_c > 2.0 || spec.beta_cp > 2.0)
    throw std::invalid_argument("margin curve: betas must lie in [0, 2]");
  const double lo = 1e-4 / std::sqrt(spec.r);
  const double hi = (1.0 - 1e-6) / std::sqrt(spec.r);
  std::ostringstream out;
  out << "eta,m_hyp,m_euc,m_hyp_small_asym,m_hyp_large_asym\n";
  for (int i = 0; i < spec.grid_points; ++i) {
    const double f = static_cast<double>(i) / (spec.grid_points - 1);
    const double eta = lo * std::pow(hi / lo, f);
    const double m_hyp =
        margin_from_betas(eta, spec.beta_c, spec.beta_cp, spec.lambda, spec.r);
    const double m_euc =
        2.0 * spec.lambda * eta * eta * (spec.beta_cp - spec.beta_c);
    const double m_small =
        small_eta_from_betas(eta, spec.beta_c, spec.beta_cp, spec.lambda, spec.r);
    const double m_large =
        large_eta_from_betas(spec.beta_c, spec.beta_cp, spec.lambda, spec.r);
    out << format_double(eta) << ',' << format_double(m_hyp) << ','
        << format_double(m_euc) << ',' << format_double(m_small) << ','
        << format_double(m_large) << "\n";
  }
  return out.str();
}

void write_margin_curve(const MarginCurveSpec& spec, const std::string& path) {
  atomic_write(path, margin_curve_csv(spec));
}

}  // namespace hypalign
