#pragma once

// Brute-force reference for the minimum distance of separated ellipsoids:
// an exact point-to-ellipsoid projection evaluated over a refined lattice on
// the first surface.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "surfslide/geometry.hpp"

namespace surfslide {

struct OracleConfig {
  int grid_theta = 64;
  int grid_phi = 32;
  int refine_levels = 6;
  double refine_shrink = 0.25;
  double point_tol = 1e-12;

  void validate() const {
    if (grid_theta < 8 || grid_phi < 8) throw std::invalid_argument("oracle grid counts must be at least 8");
    if (refine_levels < 0) throw std::invalid_argument("refine_levels must be non-negative");
    if (!(refine_shrink > 0.0 && refine_shrink < 1.0)) throw std::invalid_argument("refine_shrink must lie in (0, 1)");
    if (!(point_tol > 0.0)) throw std::invalid_argument("point_tol must be positive");
  }
};

class OverlapSuspected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PointProjection {
  double distance = 0.0;
  SurfaceParam foot;
  Vec3 foot_global = Vec3::Zero();
};

/// Closest surface point to an exterior point. In the body frame the foot
/// is x_i = a_i^2 q_i / (a_i^2 + t) where t > 0 puts x on the surface; t is
/// found by Newton iteration safeguarded by bisection.
inline PointProjection point_to_ellipsoid(const Ellipsoid& e, const Vec3& q_global, double point_tol = 1e-12) {
  if (!(implicit_value(e, q_global) > 0.0)) {
    throw std::domain_error("point_to_ellipsoid requires an exterior point");
  }
  const Vec3 q = to_local_point(e, q_global);
  const Vec3 a2 = e.semi_axes().cwiseProduct(e.semi_axes());
  const Vec3 aq = e.semi_axes().cwiseProduct(q);

  auto residual = [&](double t, double* slope) {
    double f = -1.0, df = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double s = aq[i] / (a2[i] + t);
      f += s * s;
      df += -2.0 * s * s / (a2[i] + t);
    }
    if (slope) *slope = df;
    return f;
  };

  double lo = 0.0;
  double hi = e.semi_axes().maxCoeff() * q.norm();
  while (residual(hi, nullptr) > 0.0) hi *= 2.0;

  // F is convex and decreasing on t >= 0, so Newton from the left approaches
  // the root monotonically; the bracket only guards round-off.
  double t = lo;
  for (int it = 0; it < 200; ++it) {
    double df = 0.0;
    const double f = residual(t, &df);
    if (f == 0.0) break;
    if (f > 0.0) lo = t; else hi = t;
    double next = (df < 0.0) ? t - f / df : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - t);
    t = next;
    // |dx/dt| <= |q| / (a_min^2 + t), so this bounds the foot movement.
    if (q.norm() * step / (a2.minCoeff() + t) < 1e-3 * point_tol || hi <= lo) break;
  }

  Vec3 x = a2.cwiseProduct(q).cwiseQuotient((a2.array() + t).matrix());
  x /= x.cwiseQuotient(e.semi_axes()).norm();
  PointProjection out;
  out.distance = (q - x).norm();
  out.foot = param_from_local_point(e, x);
  out.foot_global = to_global_point(e, x);
  return out;
}

struct OracleResult {
  double distance = 0.0;
  std::pair<SurfaceParam, SurfaceParam> params;
  long evaluations = 0;
};

/// Minimum over a lattice of points on e1 of the exact distance to e2; the
/// lattice is re-centered on the best sample and shrunk refine_levels times.
/// Throws OverlapSuspected when a sample on e1 lies inside e2.
inline OracleResult oracle_min_distance(const Ellipsoid& e1, const Ellipsoid& e2, const OracleConfig& cfg = {}) {
  cfg.validate();
  OracleResult best;
  best.distance = std::numeric_limits<double>::infinity();
  SurfaceParam best_raw;

  auto visit = [&](double theta, double phi) {
    const Vec3 x = surface_point(e1, {theta, phi});
    if (implicit_value(e2, x) <= 0.0) {
      throw OverlapSuspected("a lattice point on the first ellipsoid lies inside the second");
    }
    const PointProjection pr = point_to_ellipsoid(e2, x, cfg.point_tol);
    ++best.evaluations;
    if (pr.distance < best.distance) {
      best.distance = pr.distance;
      best_raw = {theta, phi};
      best.params = {canonicalize(theta, phi), pr.foot};
    }
  };

  const int nt = cfg.grid_theta, np = cfg.grid_phi;
  for (int i = 0; i < nt; ++i) {
    for (int j = 0; j < np; ++j) {
      visit((i + 0.5) * kTwoPi / nt, (j + 0.5) * kPi / np);
    }
  }

  double half_theta = kPi, half_phi = 0.5 * kPi;
  for (int level = 1; level <= cfg.refine_levels; ++level) {
    half_theta *= cfg.refine_shrink;
    half_phi *= cfg.refine_shrink;
    const SurfaceParam c = best_raw;
    for (int i = 0; i <= nt; ++i) {
      for (int j = 0; j <= np; ++j) {
        visit(c.theta + half_theta * (2.0 * i / nt - 1.0), c.phi + half_phi * (2.0 * j / np - 1.0));
      }
    }
  }
  return best;
}

}  // namespace surfslide
