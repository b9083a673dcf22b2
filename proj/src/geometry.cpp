#include "hypalign/geometry.hpp"

namespace hypalign {

namespace geom {

double equal_norm_distance(double eta, double theta, double r) {
  if (!(r * eta * eta < 1.0))
    throw std::domain_error("equal_norm_distance: eta at or beyond the ball boundary");
  if (eta < 0.0) throw std::domain_error("equal_norm_distance: negative norm");
  const double beta = 1.0 - std::cos(theta);
  const double g = 1.0 - r * eta * eta;
  const double alpha = 4.0 * r * eta * eta / (g * g);
  const double arg = std::max(1.0, 1.0 + alpha * beta);
  return std::acosh(arg) / std::sqrt(r);
}

double distance_acosh_form(const Vec<double>& u, const Vec<double>& v, double r) {
  double diff2 = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    diff2 += d * d;
  }
  const double gu = 1.0 - r * sq_norm(u);
  const double gv = 1.0 - r * sq_norm(v);
  const double arg = std::max(1.0, 1.0 + 2.0 * r * diff2 / (gu * gv));
  return std::acosh(arg) / std::sqrt(r);
}

}  // namespace geom

BallPoint BallPoint::checked(std::vector<double> coords, Curvature r) {
  double ss = 0.0;
  for (double c : coords) {
    if (!std::isfinite(c)) throw std::domain_error("BallPoint: non-finite coordinate");
    ss += c * c;
  }
  if (!(r.r * ss < 1.0))
    throw std::domain_error("BallPoint: point on or outside the ball boundary");
  return BallPoint{std::move(coords)};
}

BallPoint mobius_add(const BallPoint& u, const BallPoint& v, Curvature r) {
  return BallPoint::checked(geom::mobius_add(u.coords, v.coords, r.r), r);
}

double conformal_factor(const BallPoint& u, Curvature r) {
  return geom::conformal_factor(u.coords, r.r);
}

BallPoint exp_map(const BallPoint& u, const TangentVector& v, Curvature r) {
  if (v.base.coords != u.coords)
    throw std::invalid_argument("exp_map: tangent vector is not based at u");
  return BallPoint::checked(geom::exp_map(u.coords, v.coords, r.r), r);
}

TangentVector log_map(const BallPoint& u, const BallPoint& w, Curvature r) {
  return TangentVector{geom::log_map(u.coords, w.coords, r.r), u};
}

double riemannian_distance(const BallPoint& u, const BallPoint& v, Curvature r) {
  return geom::distance(u.coords, v.coords, r.r);
}

BallPoint project_to_ball(const std::vector<double>& z, Curvature r, double xi) {
  if (xi < 0.0) throw std::domain_error("project_to_ball: xi must be non-negative");
  for (double c : z)
    if (!std::isfinite(c)) throw std::domain_error("project_to_ball: non-finite input");
  return BallPoint{geom::project_to_ball(z, r.r, xi)};
}

BallPoint hyp_avg(const std::vector<BallPoint>& points, Curvature r) {
  if (points.empty()) throw std::invalid_argument("hyp_avg: empty point list");
  std::vector<std::vector<double>> raw;
  raw.reserve(points.size());
  for (const BallPoint& p : points) raw.push_back(p.coords);
  return BallPoint::checked(geom::hyp_avg(raw, r.r), r);
}

}  // namespace hypalign
