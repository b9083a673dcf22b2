#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "hypalign/tape.hpp"

namespace hypalign {

/// Positive curvature parameter; the Poincaré ball has radius 1/sqrt(r).
struct Curvature {
  double r;
  explicit Curvature(double r_) : r(r_) {
    if (!(r > 0.0) || !std::isfinite(r))
      throw std::domain_error("Curvature must be positive and finite");
  }
};

namespace geom {

// Guard for acosh/atanh arguments at the closed domain boundary.
inline constexpr double kDomainGuard = 1e-15;

template <class T>
using Vec = std::vector<T>;

template <class T>
T dot(const Vec<T>& a, const Vec<T>& b) {
  T acc = a[0] * b[0];
  for (std::size_t i = 1; i < a.size(); ++i) acc = acc + a[i] * b[i];
  return acc;
}

template <class T>
T sq_norm(const Vec<T>& a) {
  return dot(a, a);
}

// ||a|| with subgradient 0 at the origin (sqrt has an infinite derivative
// weight at exactly zero, which would poison the backward sweep).
template <class T>
T norm(const Vec<T>& a) {
  const T ss = sq_norm(a);
  if (value_of(ss) == 0.0) return ss;
  return sqrt(ss);
}

// Clamp-from-above with zero gradient past the boundary.
template <class T>
T clamp_max(const T& x, double hi) {
  if (value_of(x) > hi) return x * 0.0 + hi;
  return x;
}

template <class T>
T clamp_min(const T& x, double lo) {
  if (value_of(x) < lo) return x * 0.0 + lo;
  return x;
}

/// Möbius gyro-addition on the ball of curvature r.
template <class T>
Vec<T> mobius_add(const Vec<T>& u, const Vec<T>& v, double r) {
  const T uv = dot(u, v);
  const T uu = sq_norm(u);
  const T vv = sq_norm(v);
  const T cu = 1.0 + 2.0 * r * uv + r * vv;  // coefficient of u
  const T cv = 1.0 - r * uu;                 // coefficient of v
  const T den = 1.0 + 2.0 * r * uv + r * r * uu * vv;
  Vec<T> out;
  out.reserve(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    out.push_back((cu * u[i] + cv * v[i]) / den);
  return out;
}

/// lambda_u^r = 2 / (1 - r * |u|^2).
template <class T>
T conformal_factor(const Vec<T>& u, double r) {
  const T g = 1.0 - r * sq_norm(u);
  if (value_of(g) <= 0.0)
    throw std::domain_error("conformal_factor: point on or outside the ball");
  return 2.0 / g;
}

/// exp_u^r(v); the zero tangent maps exactly to u.
template <class T>
Vec<T> exp_map(const Vec<T>& u, const Vec<T>& v, double r) {
  const T vv = sq_norm(v);
  if (value_of(vv) == 0.0) return u;
  const double sr = std::sqrt(r);
  const T nv = sqrt(vv);
  const T lam = conformal_factor(u, r);
  const T scale = tanh(sr * lam * nv * 0.5) / (sr * nv);
  Vec<T> step;
  step.reserve(v.size());
  for (const T& vi : v) step.push_back(scale * vi);
  return mobius_add(u, step, r);
}

/// log_u^r(w); coincident points return the exact zero tangent.
template <class T>
Vec<T> log_map(const Vec<T>& u, const Vec<T>& w, double r) {
  Vec<T> neg_u;
  neg_u.reserve(u.size());
  for (const T& ui : u) neg_u.push_back(-ui);
  Vec<T> m = mobius_add(neg_u, w, r);
  const T mm = sq_norm(m);
  if (value_of(mm) == 0.0) {
    Vec<T> zero;
    zero.reserve(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) zero.push_back(w[i] - u[i]);
    return zero;
  }
  const double sr = std::sqrt(r);
  const T nm = sqrt(mm);
  const T lam = conformal_factor(u, r);
  const T arg = clamp_max(sr * nm, 1.0 - kDomainGuard);
  const T scale = 2.0 / (sr * lam) * atanh(arg) / nm;
  for (T& mi : m) mi = scale * mi;
  return m;
}

/// Riemannian distance d_r(u, v) = (2/sqrt(r)) atanh(sqrt(r) |(-u) + v|).
template <class T>
T distance(const Vec<T>& u, const Vec<T>& v, double r) {
  Vec<T> neg_u;
  neg_u.reserve(u.size());
  for (const T& ui : u) neg_u.push_back(-ui);
  const Vec<T> m = mobius_add(neg_u, v, r);
  const T mm = sq_norm(m);
  if (value_of(mm) == 0.0) return mm * 0.0;
  const double sr = std::sqrt(r);
  const T arg = clamp_max(sr * sqrt(mm), 1.0 - kDomainGuard);
  return 2.0 / sr * atanh(arg);
}

/// Safe projection into the ball; identity below the (1-xi)/sqrt(r) shell.
template <class T>
Vec<T> project_to_ball(const Vec<T>& z, double r, double xi) {
  const T zz = sq_norm(z);
  const double thresh = (1.0 - xi) / std::sqrt(r);
  if (value_of(zz) <= thresh * thresh) return z;
  const T nz = sqrt(zz);
  const T scale = (1.0 - xi) / (std::sqrt(r) * nz);
  Vec<T> out;
  out.reserve(z.size());
  for (const T& zi : z) out.push_back(scale * zi);
  return out;
}

/// Einstein-midpoint average in Poincaré coordinates.
template <class T>
Vec<T> hyp_avg(const std::vector<Vec<T>>& points, double r) {
  if (points.empty())
    throw std::invalid_argument("hyp_avg: empty point list");
  const std::size_t d = points[0].size();
  std::vector<T> weighted_sum;  // sum_i gamma_i * k_i
  T rho = points[0][0] * 0.0;   // typed zero
  bool first = true;
  for (const Vec<T>& z : points) {
    const T zz = sq_norm(z);
    const T kc = 2.0 / (1.0 + r * zz);  // Klein coordinate factor
    // gamma = 1 / sqrt(1 - r |k|^2)
    const T kk = kc * kc * zz;
    const T gamma = 1.0 / sqrt(clamp_min(1.0 - r * kk, kDomainGuard));
    if (first) {
      weighted_sum.reserve(d);
      for (std::size_t i = 0; i < d; ++i) weighted_sum.push_back(gamma * kc * z[i]);
      rho = gamma;
      first = false;
    } else {
      for (std::size_t i = 0; i < d; ++i)
        weighted_sum[i] = weighted_sum[i] + gamma * kc * z[i];
      rho = rho + gamma;
    }
  }
  T ss = weighted_sum[0] * weighted_sum[0];
  for (std::size_t i = 1; i < d; ++i) ss = ss + weighted_sum[i] * weighted_sum[i];
  const T mm = clamp_min(1.0 - r * ss / (rho * rho), 0.0);
  const T den = rho * (1.0 + sqrt(mm));
  Vec<T> out;
  out.reserve(d);
  for (std::size_t i = 0; i < d; ++i) out.push_back(weighted_sum[i] / den);
  return out;
}

/// Distance between two points of common norm eta separated by angle theta,
/// in closed acosh form.
double equal_norm_distance(double eta, double theta, double r);

/// acosh form of the Riemannian distance (classical identity); used to
/// cross-validate the atanh form.
double distance_acosh_form(const Vec<double>& u, const Vec<double>& v, double r);

}  // namespace geom

// ---- checked point types ---------------------------------------------------

/// A point strictly inside the Poincaré ball.
struct BallPoint {
  std::vector<double> coords;

  static BallPoint checked(std::vector<double> coords, Curvature r);
  std::size_t dim() const { return coords.size(); }
};

struct TangentVector {
  std::vector<double> coords;
  BallPoint base;
};

BallPoint mobius_add(const BallPoint& u, const BallPoint& v, Curvature r);
double conformal_factor(const BallPoint& u, Curvature r);
BallPoint exp_map(const BallPoint& u, const TangentVector& v, Curvature r);
TangentVector log_map(const BallPoint& u, const BallPoint& w, Curvature r);
double riemannian_distance(const BallPoint& u, const BallPoint& v, Curvature r);
BallPoint project_to_ball(const std::vector<double>& z, Curvature r, double xi);
BallPoint hyp_avg(const std::vector<BallPoint>& points, Curvature r);

}  // namespace hypalign
