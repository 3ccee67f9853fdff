#pragma once

// The surface-sliding minimum-distance iteration.

#include <algorithm>
#include <array>
#include <optional>
#include <stdexcept>
#include <utility>

#include "surfslide/contact.hpp"
#include "surfslide/geometry.hpp"
#include "surfslide/slider_core.hpp"

namespace surfslide {

using ParamPair = std::pair<SurfaceParam, SurfaceParam>;

/// Halves one step size when the distance grew. In revert-and-retry mode
/// the pair is also moved back to `before`.
inline SolverState apply_overshoot_schedule(const SolverState& before, SolverState after, const SolverConfig& cfg) {
  after.overshoot = after.distance > before.distance;
  after.reverted = false;
  if (!after.overshoot) return after;
  after.lambdas[after.halve_next] *= 0.5;
  after.halve_next ^= 1;
  if (cfg.overshoot_mode == OvershootMode::revert_and_retry) {
    after.params = before.params;
    after.points = before.points;
    after.normals = before.normals;
    after.d12 = before.d12;
    after.distance = before.distance;
    after.reverted = true;
  }
  return after;
}

namespace detail {

// Body-axis permutations that put the polar axis on body axis `polar`
// (2 is the native parametrization). The permutation is cyclic, so it is a
// proper rotation and outward normals stay outward.
inline Vec3 body_to_chart(int polar, const Vec3& v) {
  return {v[(polar + 1) % 3], v[(polar + 2) % 3], v[polar]};
}

inline Vec3 chart_to_body(int polar, const Vec3& v) {
  Vec3 out;
  out[(polar + 1) % 3] = v[0];
  out[(polar + 2) % 3] = v[1];
  out[polar] = v[2];
  return out;
}

// Native parametrization unless the point is within asin(switch_sin) of a
// native pole; then the body axis the point is most perpendicular to.
inline int chart_for(const Ellipsoid& e, const SurfaceParam& p, double switch_sin) {
  if (!(switch_sin > 0.0) || std::abs(std::sin(p.phi)) >= switch_sin) return 2;
  const Vec3 u = surface_point_local(e, p).cwiseQuotient(e.semi_axes());
  return std::abs(u.x()) <= std::abs(u.y()) ? 0 : 1;
}

struct Slide {
  SurfaceParam next;
  ParamIncrement increment;
};

// Moves one point along the tangential projection of `pull`.
inline Slide slide_point(const Ellipsoid& e, SurfaceParam p, const Vec3& pull, double lambda, double zero_length,
                         double switch_sin) {
  const int polar = chart_for(e, p, switch_sin);
  if (polar == 2) {
    SurfaceFrame f = surface_frame(e, p);
    if (f.at_pole()) {
      p = pole_gauge(e, p, pull);
      f = surface_frame(e, p);
    }
    const TensionProjection t = project_tension(f, pull);
    const ParamIncrement inc = step_increments(t.delta_theta, t.delta_phi, lambda, zero_length);
    return {advance_param(p, inc.d_theta, inc.d_phi), inc};
  }

  const Ellipsoid chart(body_to_chart(polar, e.semi_axes()), Vec3::Zero());
  Vec3 xc = body_to_chart(polar, surface_point_local(e, p));
  xc /= xc.cwiseQuotient(chart.semi_axes()).norm();
  const SurfaceParam pc = param_from_local_point(chart, xc);
  const SurfaceFrame f = surface_frame(chart, pc, Frame::local);
  SurfaceFrame g = f;
  g.frame = Frame::global;
  g.normal = to_global_vector(e, chart_to_body(polar, f.normal));
  g.tangent_phi = to_global_vector(e, chart_to_body(polar, f.tangent_phi));
  if (f.tangent_theta) g.tangent_theta = to_global_vector(e, chart_to_body(polar, *f.tangent_theta));
  const TensionProjection t = project_tension(g, pull);
  const ParamIncrement inc = step_increments(t.delta_theta, t.delta_phi, lambda, zero_length);
  if (inc.d_theta == 0.0 && inc.d_phi == 0.0) return {p, inc};
  Vec3 x = chart_to_body(polar, surface_point_local(chart, advance_param(pc, inc.d_theta, inc.d_phi)));
  x /= x.cwiseQuotient(e.semi_axes()).norm();
  return {param_from_local_point(e, x), inc};
}

}  // namespace detail

/// One simultaneous update of both surface points, both driven by the
/// iteration-k connecting vector, followed by the overshoot schedule.
inline SolverState iterate_once(const SolverState& state, const SolverConfig& cfg, const Ellipsoid& e1,
                                const Ellipsoid& e2) {
  const double zero_length = cfg.stationary_rel_tol * state.distance;
  const auto s1 = detail::slide_point(e1, state.params[0], state.d12, state.lambdas[0], zero_length, cfg.chart_switch_sin);
  const auto s2 = detail::slide_point(e2, state.params[1], -state.d12, state.lambdas[1], zero_length, cfg.chart_switch_sin);

  SolverState next = make_state(e1, e2, s1.next, s2.next, 0.0);
  next.k = state.k + 1;
  next.lambdas = state.lambdas;
  next.halve_next = state.halve_next;
  next.prev_distance = state.distance;
  return apply_overshoot_schedule(state, std::move(next), cfg);
}

/// True when neither point would move from this state.
inline bool is_stationary(const SolverState& state, const SolverConfig& cfg, const Ellipsoid& e1,
                          const Ellipsoid& e2) {
  const double zero_length = cfg.stationary_rel_tol * state.distance;
  const auto s1 = detail::slide_point(e1, state.params[0], state.d12, 1.0, zero_length, cfg.chart_switch_sin);
  const auto s2 = detail::slide_point(e2, state.params[1], -state.d12, 1.0, zero_length, cfg.chart_switch_sin);
  auto zero = [](const ParamIncrement& i) { return i.d_theta == 0.0 && i.d_phi == 0.0; };
  return zero(s1.increment) && zero(s2.increment);
}

/// Entry points of the center-to-center line into each surface. When the
/// other center lies inside, the ray is followed past it.
inline ParamPair center_line_init(const Ellipsoid& e1, const Ellipsoid& e2) {
  Vec3 dir = e2.center() - e1.center();
  if (dir.norm() == 0.0) dir = e1.rotation().col(0);
  const double far = 1e300;
  const auto p1 = ray_surface_entry(e1, e1.center(), dir, far);
  const auto p2 = ray_surface_entry(e2, e2.center(), -dir, far);
  if (!p1 || !p2) throw std::logic_error("center ray failed to reach the surface");
  return {*p1, *p2};
}

/// When the segment P1 -> P2 passes through E2 before reaching P2 (or
/// through E1 before reaching P1), the far-side point is replaced by the
/// entry point, which is strictly closer. Such pairs can be stationary for
/// the sliding update when a body is flat: the far face is then locally a
/// closest surface although its normal points away from the other body.
/// Returns false when neither segment end crosses a body.
inline bool jump_to_near_side(SolverState& state, const Ellipsoid& e1, const Ellipsoid& e2, double lambda0,
                              int halve_first) {
  constexpr double kEntryMargin = 1e-9;
  std::array<SurfaceParam, 2> p = state.params;
  bool moved = false;
  if (auto q = ray_surface_entry(e2, state.points[0], state.d12, 1.0 - kEntryMargin)) {
    p[1] = *q;
    moved = true;
  }
  const Vec3 x2 = surface_point(e2, p[1]);
  if (auto q = ray_surface_entry(e1, x2, state.points[0] - x2, 1.0 - kEntryMargin)) {
    p[0] = *q;
    moved = true;
  }
  if (!moved) return false;
  const int k = state.k;
  const double prev = state.distance;
  state = make_state(e1, e2, p[0], p[1], lambda0, halve_first);
  state.k = k;
  state.prev_distance = prev;
  return true;
}

struct StopFlags {
  bool eps_d = false;
  bool eps_n = false;
  bool eps_lambda = false;
};

struct SolveResult : DistanceResult {
  StopFlags stop;
  int restarts = 0;  // far-side jumps taken
  SolverState final_state;
};

inline SolveResult solve(const Ellipsoid& e1, const Ellipsoid& e2, const std::optional<ParamPair>& init,
                         const SolverConfig& cfg) {
  cfg.validate();
  ParamPair start = init ? *init : center_line_init(e1, e2);
  if (!start.first.is_canonical() || !start.second.is_canonical()) {
    throw std::invalid_argument("initial surface parameters must be canonical");
  }
  const double sigma = contact_sigma(cfg, e1, e2);

  SolveResult r;
  if (cfg.record_trace) r.trace.emplace();
  SolverState state = make_state(e1, e2, start.first, start.second, cfg.lambda0, cfg.halve_first);

  auto finish = [&](Status status, const ConvergenceMetrics& m) {
    r.status = status;
    r.distance = state.distance;
    r.params = state.params;
    r.closest_points = state.points;
    r.normals = state.normals;
    r.iterations = state.k;
    r.final_eps = m;
    r.final_state = state;
    return r;
  };
  auto contact_status = [&]() -> std::optional<Status> {
    switch (classify(state, e1, e2, sigma, cfg.align_tol)) {
      case ContactKind::in_contact: return Status::contact;
      case ContactKind::overlapping: return Status::overlap;
      case ContactKind::separated: return std::nullopt;
    }
    return std::nullopt;
  };

  if (auto c = contact_status()) return finish(*c, {});
  ConvergenceMetrics m = convergence_metrics(state, std::nullopt);
  if (m.eps_n < cfg.tol_n) {
    r.stop.eps_n = true;
    return finish(Status::converged, m);
  }

  while (state.k < cfg.max_iter) {
    const double before = state.distance;
    state = iterate_once(state, cfg, e1, e2);

    m = convergence_metrics(state, state.reverted ? std::nullopt : std::optional<double>(before));
    if (r.trace) {
      r.trace->push_back({state.k, state.params[0].theta, state.params[0].phi, state.params[1].theta,
                          state.params[1].phi, state.distance, state.lambdas[0], state.lambdas[1],
                          m.eps_d.value_or(std::numeric_limits<double>::quiet_NaN()), m.eps_n, state.overshoot});
    }
    if (auto c = contact_status()) return finish(*c, m);

    r.stop = {m.eps_d && *m.eps_d < cfg.tol_d, m.eps_n < cfg.tol_n, m.eps_lambda < cfg.tol_lambda};
    const bool stationary = m.eps_d && *m.eps_d == 0.0 && is_stationary(state, cfg, e1, e2);
    if (r.stop.eps_n) return finish(Status::converged, m);
    // A distance plateau or exhausted step without normal alignment is not a
    // solution. A pair with a far-side point is moved across in both cases;
    // otherwise a plateau keeps iterating and an exhausted step stops.
    const bool exhausted = r.stop.eps_lambda || stationary ||
                           std::min(state.lambdas[0], state.lambdas[1]) < cfg.lambda_floor;
    if (exhausted || r.stop.eps_d) {
      if (jump_to_near_side(state, e1, e2, cfg.lambda0, cfg.halve_first)) {
        ++r.restarts;
        r.stop = {};
        continue;
      }
      if (exhausted) return finish(Status::lambda_floor, m);
    }
  }
  return finish(Status::max_iter, m);
}

inline ParamPair warm_start_from(const DistanceResult& result) { return {result.params[0], result.params[1]}; }

}  // namespace surfslide
