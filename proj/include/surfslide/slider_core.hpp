#pragma once

// Building blocks of the surface-sliding iteration: configuration, state,
// tension projection, normalized increments and convergence indicators.

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "surfslide/geometry.hpp"

namespace surfslide {

enum class OvershootMode { accept_and_continue, revert_and_retry };

enum class Status { converged, max_iter, lambda_floor, contact, overlap };

inline std::string_view to_string(Status s) {
  switch (s) {
    case Status::converged: return "converged";
    case Status::max_iter: return "max-iter";
    case Status::lambda_floor: return "lambda-floor";
    case Status::contact: return "contact";
    case Status::overlap: return "overlap";
  }
  return "unknown";
}

inline std::string_view to_string(OvershootMode m) {
  return m == OvershootMode::accept_and_continue ? "accept" : "revert";
}

struct SolverConfig {
  double lambda0 = 0.05;  // initial angle increment, shared by both surfaces
  int max_iter = 10000;
  double tol_d = 1e-12;
  double tol_n = 1e-10;
  double tol_lambda = 1e-8;
  double lambda_floor = 1e-12;
  OvershootMode overshoot_mode = OvershootMode::accept_and_continue;
  // Contact threshold; unset means 1e-6 times the mean of the six semi-axes.
  std::optional<double> contact_sigma;
  double align_tol = 1e-6;
  bool record_trace = false;
  // Which step size (0 or 1) the first overshoot halves.
  int halve_first = 0;
  // Projections shorter than this fraction of |d12| count as zero.
  double stationary_rel_tol = 1e-15;
  // Steps for a point with |sin phi| below this are taken in a permuted
  // parametrization whose poles are far from the point. Zero disables.
  double chart_switch_sin = 0.1;

  void validate() const {
    if (!(lambda0 > 0.0)) throw std::invalid_argument("lambda0 must be positive");
    if (!(tol_d > 0.0) || !(tol_n > 0.0) || !(tol_lambda > 0.0)) {
      throw std::invalid_argument("tolerances must be positive");
    }
    if (max_iter < 1) throw std::invalid_argument("max_iter must be at least 1");
    if (!(lambda_floor > 0.0) || !(lambda_floor < lambda0)) {
      throw std::invalid_argument("lambda_floor must lie in (0, lambda0)");
    }
    if (contact_sigma && !(*contact_sigma > 0.0)) throw std::invalid_argument("contact_sigma must be positive");
    if (!(align_tol > 0.0)) throw std::invalid_argument("align_tol must be positive");
    if (!(chart_switch_sin >= 0.0 && chart_switch_sin < 0.8)) {
      throw std::invalid_argument("chart_switch_sin must lie in [0, 0.8)");
    }
    if (halve_first != 0 && halve_first != 1) throw std::invalid_argument("halve_first must be 0 or 1");
  }
};

inline double default_contact_sigma(const Ellipsoid& e1, const Ellipsoid& e2) {
  return 1e-6 * (e1.semi_axes().sum() + e2.semi_axes().sum()) / 6.0;
}

inline double contact_sigma(const SolverConfig& cfg, const Ellipsoid& e1, const Ellipsoid& e2) {
  return cfg.contact_sigma ? *cfg.contact_sigma : default_contact_sigma(e1, e2);
}

struct SolverState {
  int k = 0;
  std::array<SurfaceParam, 2> params;
  std::array<Vec3, 2> points;
  std::array<Vec3, 2> normals;
  Vec3 d12 = Vec3::Zero();  // points[1] - points[0]
  double distance = 0.0;
  std::array<double, 2> lambdas{0.0, 0.0};
  double prev_distance = std::numeric_limits<double>::quiet_NaN();
  int halve_next = 0;
  bool overshoot = false;  // the last iteration increased the distance
  bool reverted = false;   // ... and was rolled back (revert-and-retry)
};

/// Evaluates points, normals and the connecting vector for a parameter pair.
inline SolverState make_state(const Ellipsoid& e1, const Ellipsoid& e2, const SurfaceParam& p1,
                              const SurfaceParam& p2, double lambda0, int halve_first = 0) {
  SolverState s;
  s.params = {p1, p2};
  s.points = {surface_point(e1, p1), surface_point(e2, p2)};
  s.normals = {surface_frame(e1, p1).normal, surface_frame(e2, p2).normal};
  s.d12 = s.points[1] - s.points[0];
  s.distance = s.d12.norm();
  s.lambdas = {lambda0, lambda0};
  s.halve_next = halve_first;
  return s;
}

struct StepRecord {
  int k = 0;
  double theta1 = 0.0, phi1 = 0.0, theta2 = 0.0, phi2 = 0.0;
  double distance = 0.0;
  double lambda1 = 0.0, lambda2 = 0.0;
  double eps_d = std::numeric_limits<double>::quiet_NaN();
  double eps_n = 0.0;
  bool overshoot = false;
};

using Trace = std::vector<StepRecord>;

struct ConvergenceMetrics {
  std::optional<double> eps_d;  // unavailable before the first step
  double eps_n = 0.0;
  double eps_lambda = 0.0;
};

struct DistanceResult {
  Status status = Status::max_iter;
  double distance = 0.0;
  std::array<SurfaceParam, 2> params;
  std::array<Vec3, 2> closest_points;
  std::array<Vec3, 2> normals;
  int iterations = 0;
  ConvergenceMetrics final_eps;
  std::optional<Trace> trace;
};

struct TensionProjection {
  double delta_theta = 0.0;
  double delta_phi = 0.0;
};

/// Components of the connecting vector along the unit tangents of a global
/// frame. delta_theta is zero at a pole.
inline TensionProjection project_tension(const SurfaceFrame& frame, const Vec3& d_ij) {
  TensionProjection t;
  if (frame.tangent_theta) t.delta_theta = d_ij.dot(*frame.tangent_theta);
  t.delta_phi = d_ij.dot(frame.tangent_phi);
  return t;
}

struct ParamIncrement {
  double d_theta = 0.0;
  double d_phi = 0.0;
};

/// Rescales (delta_theta, delta_phi) to length lambda. Returns zero when the
/// projection is shorter than zero_length.
inline ParamIncrement step_increments(double delta_theta, double delta_phi, double lambda,
                                      double zero_length = 0.0) {
  const double norm2 = delta_theta * delta_theta + delta_phi * delta_phi;
  if (norm2 == 0.0 || norm2 <= zero_length * zero_length) return {};
  const double scale = lambda / std::sqrt(norm2);
  return {delta_theta * scale, delta_phi * scale};
}

inline SurfaceParam advance_param(const SurfaceParam& p, double d_theta, double d_phi) {
  return canonicalize(p.theta + d_theta, p.phi + d_phi);
}

/// Misalignment of the connecting segment with both outward normals.
inline double normal_alignment_error(const Vec3& d12, const Vec3& n1, const Vec3& n2) {
  const double len = d12.norm();
  if (len == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const Vec3 u = d12 / len;
  return std::max(1.0 - u.dot(n1), 1.0 + u.dot(n2));
}

inline ConvergenceMetrics convergence_metrics(const SolverState& state,
                                              const std::optional<double>& prev_distance) {
  ConvergenceMetrics m;
  if (prev_distance && state.distance > 0.0) {
    m.eps_d = std::abs((state.distance - *prev_distance) / state.distance);
  }
  m.eps_n = normal_alignment_error(state.d12, state.normals[0], state.normals[1]);
  m.eps_lambda = std::max(state.lambdas[0], state.lambdas[1]);
  return m;
}

inline ConvergenceMetrics convergence_metrics(const SolverState& state, const SolverState& prev_state) {
  return convergence_metrics(state, std::optional<double>(prev_state.distance));
}

/// At a pole theta does not move the point; pick the meridian whose phi
/// tangent points along the local tangential direction `toward` so the
/// first step can leave the pole in any direction.
inline SurfaceParam pole_gauge(const Ellipsoid& e, const SurfaceParam& p, const Vec3& toward_global) {
  const Vec3 v = to_local_vector(e, toward_global);
  if (std::hypot(v.x(), v.y()) == 0.0) return p;
  // r_phi at the north pole is (a cos t, b sin t, 0); at the south pole it
  // is the negative of that.
  const bool north = std::cos(p.phi) > 0.0;
  const double sx = north ? v.x() : -v.x();
  const double sy = north ? v.y() : -v.y();
  return {wrap_two_pi(std::atan2(sy / e.b(), sx / e.a())), p.phi};
}

}  // namespace surfslide
