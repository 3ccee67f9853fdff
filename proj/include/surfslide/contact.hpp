#pragma once

// Contact and overlap handling: classification of sub-threshold point pairs
// and the penetration-depth continuation for interpenetrating ellipsoids.

#include <array>
#include <cmath>
#include <string_view>

#include "surfslide/geometry.hpp"
#include "surfslide/slider_core.hpp"

namespace surfslide {

enum class ContactKind { separated, in_contact, overlapping };

inline std::string_view to_string(ContactKind k) {
  switch (k) {
    case ContactKind::separated: return "separated";
    case ContactKind::in_contact: return "in-contact";
    case ContactKind::overlapping: return "overlapping";
  }
  return "unknown";
}

struct ContactReport {
  ContactKind kind = ContactKind::separated;
  // Positive: separation. Near zero: touching. Negative: penetration depth.
  double distance_or_depth = 0.0;
  std::array<SurfaceParam, 2> witness_params;
  std::array<Vec3, 2> witness_normals;
  Status status = Status::converged;
  int iterations = 0;
};

namespace detail {

// Implicit values below this count as strictly inside.
inline constexpr double kInsideMargin = 1e-9;

inline bool strictly_inside(const Ellipsoid& e, const Vec3& x) { return implicit_value(e, x) < -kInsideMargin; }

// Looks for a point interior to both ellipsoids just below a near-coincident
// point pair, stepping inward along the bisector of the two normals.
inline bool probe_common_interior(const SolverState& s, const Ellipsoid& e1, const Ellipsoid& e2, double sigma) {
  const Vec3 inward = -(s.normals[0] + s.normals[1]);
  if (inward.norm() < 1e-12) return false;
  const Vec3 dir = inward.normalized();
  const Vec3 mid = 0.5 * (s.points[0] + s.points[1]);
  const double h_max = 0.5 * std::min(e1.semi_axes().minCoeff(), e2.semi_axes().minCoeff());
  for (double h = 4.0 * sigma; h <= h_max; h *= 4.0) {
    const Vec3 q = mid + h * dir;
    if (implicit_value(e1, q) < 0.0 && implicit_value(e2, q) < 0.0) return true;
  }
  return false;
}

inline Vec3 normal_at(const Ellipsoid& e, const SurfaceParam& p) { return surface_frame(e, p).normal; }

// Derivatives of the global unit normal with respect to theta and phi.
inline std::array<Vec3, 2> normal_derivatives(const Ellipsoid& e, const SurfaceParam& p) {
  const double st = std::sin(p.theta), ct = std::cos(p.theta);
  const double sp = std::sin(p.phi), cp = std::cos(p.phi);
  const double a = e.a(), b = e.b(), c = e.c();
  const Vec3 big_n{b * c * sp * ct, a * c * sp * st, a * b * cp};
  const double len = big_n.norm();
  const Vec3 n = big_n / len;
  const Vec3 dn_theta{-b * c * sp * st, a * c * sp * ct, 0.0};
  const Vec3 dn_phi{b * c * cp * ct, a * c * cp * st, -a * b * sp};
  auto unit_derivative = [&](const Vec3& dn) { return to_global_vector(e, (dn - n * n.dot(dn)) / len); };
  return {unit_derivative(dn_theta), unit_derivative(dn_phi)};
}

}  // namespace detail

/// Classifies a point pair. Below sigma the pair is in contact when the
/// normals are anti-parallel within align_tol, overlapping when a witness
/// lies inside the other ellipsoid or a common interior point sits just
/// below the pair, and separated otherwise.
inline ContactKind classify(const SolverState& state, const Ellipsoid& e1, const Ellipsoid& e2, double sigma,
                            double align_tol) {
  const bool inside = detail::strictly_inside(e2, state.points[0]) || detail::strictly_inside(e1, state.points[1]);
  if (state.distance < sigma) {
    if (std::abs(state.normals[0].dot(state.normals[1]) + 1.0) < align_tol) return ContactKind::in_contact;
    if (inside || detail::probe_common_interior(state, e1, e2, sigma)) return ContactKind::overlapping;
    return ContactKind::separated;
  }
  return inside ? ContactKind::overlapping : ContactKind::separated;
}

/// Maximum-overlap pair of two interpenetrating ellipsoids.
///
/// The pair is first pushed apart with each point sliding along the other
/// surface's negated normal until both points sit strictly inside the other
/// ellipsoid. The second stage slides the E1 point in its own (theta, phi)
/// space, keeping the E2 point at the E2 support point opposite to n1, so
/// that the overlap (P1 - P2) . n1 decreases; steps are normalized to the
/// current increment and halved whenever the overlap grows. At the fixed
/// point the segment is anti-parallel to both outward normals.
inline ContactReport penetration_depth(const Ellipsoid& e1, const Ellipsoid& e2, const SolverState& entry,
                                       const SolverConfig& cfg) {
  const double sigma = contact_sigma(cfg, e1, e2);
  ContactReport report;
  if (entry.distance < sigma &&
      classify(entry, e1, e2, sigma, cfg.align_tol) == ContactKind::in_contact) {
    report.kind = ContactKind::in_contact;
    report.distance_or_depth = entry.distance;
    report.witness_params = entry.params;
    report.witness_normals = entry.normals;
    return report;
  }

  // Stage 1: continuation under the other surface's negated normal.
  SolverState s = entry;
  int iterations = 0;
  const int push_limit = std::min(cfg.max_iter, 2000);
  while (iterations < push_limit) {
    const bool both_inside = detail::strictly_inside(e2, s.points[0]) && detail::strictly_inside(e1, s.points[1]);
    if (s.distance > sigma && both_inside) break;
    const SurfaceFrame f1 = surface_frame(e1, s.params[0]);
    const SurfaceFrame f2 = surface_frame(e2, s.params[1]);
    const TensionProjection t1 = project_tension(f1, -f2.normal);
    const TensionProjection t2 = project_tension(f2, -f1.normal);
    const ParamIncrement i1 = step_increments(t1.delta_theta, t1.delta_phi, cfg.lambda0, 1e-12);
    const ParamIncrement i2 = step_increments(t2.delta_theta, t2.delta_phi, cfg.lambda0, 1e-12);
    if (i1.d_theta == 0.0 && i1.d_phi == 0.0 && i2.d_theta == 0.0 && i2.d_phi == 0.0) break;
    s = make_state(e1, e2, advance_param(s.params[0], i1.d_theta, i1.d_phi),
                   advance_param(s.params[1], i2.d_theta, i2.d_phi), cfg.lambda0);
    ++iterations;
  }

  // Stage 2: overlap descent.
  struct Eval {
    SurfaceParam p1, p2;
    Vec3 x1, x2, n1;
    double depth;
  };
  auto evaluate = [&](const SurfaceParam& p1) {
    Eval ev;
    ev.p1 = p1;
    ev.x1 = surface_point(e1, p1);
    ev.n1 = detail::normal_at(e1, p1);
    ev.p2 = support_param(e2, -ev.n1);
    ev.x2 = surface_point(e2, ev.p2);
    ev.depth = (ev.x1 - ev.x2).dot(ev.n1);
    return ev;
  };

  Eval cur = evaluate(s.params[0]);
  double lambda = cfg.lambda0;
  report.status = Status::max_iter;
  const int descent_limit = cfg.max_iter;
  for (int it = 0; it < descent_limit; ++it, ++iterations) {
    const Vec3 w = cur.x1 - cur.x2;
    const double seg = w.norm();
    if (seg > 0.0 && 1.0 - w.dot(cur.n1) / seg < cfg.tol_n) {
      report.status = Status::converged;
      break;
    }
    if (lambda < cfg.tol_lambda) {
      report.status = Status::converged;
      break;
    }
    SurfaceParam p = cur.p1;
    const SurfaceFrame f = surface_frame(e1, p);
    if (f.at_pole()) {
      // Choose the meridian along which the normal turns against w.
      const Vec3 wl = to_local_vector(e1, w);
      const bool north = std::cos(p.phi) > 0.0;
      const double sx = north ? -wl.x() : wl.x();
      const double sy = north ? -wl.y() : wl.y();
      if (std::hypot(sx, sy) > 0.0) p.theta = wrap_two_pi(std::atan2(sy * e1.b(), sx * e1.a()));
      cur.p1 = p;
    }
    const auto dn = detail::normal_derivatives(e1, p);
    const double g_theta = w.dot(dn[0]);
    const double g_phi = w.dot(dn[1]);
    const ParamIncrement inc = step_increments(-g_theta, -g_phi, lambda, cfg.stationary_rel_tol * seg);
    if (inc.d_theta == 0.0 && inc.d_phi == 0.0) {
      report.status = Status::converged;
      break;
    }
    const Eval next = evaluate(advance_param(p, inc.d_theta, inc.d_phi));
    if (next.depth > cur.depth) {
      lambda *= 0.5;
      continue;
    }
    cur = next;
  }

  report.iterations = iterations;
  report.witness_params = {cur.p1, cur.p2};
  report.witness_normals = {cur.n1, detail::normal_at(e2, cur.p2)};
  report.distance_or_depth = -cur.depth;
  report.kind = cur.depth > 0.0 ? ContactKind::overlapping : ContactKind::separated;
  return report;
}

}  // namespace surfslide
