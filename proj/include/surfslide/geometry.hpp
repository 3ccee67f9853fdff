#pragma once

// Ellipsoid primitive, Euler rotation, parametric surface and frames.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace surfslide {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct EulerAngles {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

/// Body-to-global rotation Rx(alpha) * Ry(beta) * Rz(gamma).
inline Mat3 rotation_matrix(double alpha, double beta, double gamma) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  const double cg = std::cos(gamma), sg = std::sin(gamma);
  Mat3 rx, ry, rz;
  rx << 1, 0, 0, 0, ca, -sa, 0, sa, ca;
  ry << cb, 0, sb, 0, 1, 0, -sb, 0, cb;
  rz << cg, -sg, 0, sg, cg, 0, 0, 0, 1;
  return rx * ry * rz;
}

inline Mat3 rotation_matrix(const EulerAngles& e) {
  return rotation_matrix(e.alpha, e.beta, e.gamma);
}

/// Inverse of rotation_matrix for |beta| < pi/2. Near gimbal lock the
/// split between alpha and gamma is arbitrary and alpha is set to zero.
inline EulerAngles euler_from_rotation(const Mat3& r) {
  const double sb = std::clamp(r(0, 2), -1.0, 1.0);
  EulerAngles e;
  e.beta = std::asin(sb);
  if (std::abs(sb) < 1.0 - 1e-12) {
    e.alpha = std::atan2(-r(1, 2), r(2, 2));
    e.gamma = std::atan2(-r(0, 1), r(0, 0));
  } else {
    e.alpha = 0.0;
    e.gamma = std::atan2(r(1, 0), r(1, 1));
  }
  return e;
}

/// Immutable ellipsoid: semi-axes along the body x, y, z axes, a center
/// and an orientation. The rotation matrix is derived from the Euler angles
/// on construction.
class Ellipsoid {
 public:
  Ellipsoid(const Vec3& semi_axes, const Vec3& center, const EulerAngles& euler = {})
      : semi_axes_(semi_axes), center_(center), euler_(euler), rotation_(rotation_matrix(euler)) {
    for (int i = 0; i < 3; ++i) {
      if (!(semi_axes_[i] > 0.0) || !std::isfinite(semi_axes_[i])) {
        throw std::invalid_argument("semi-axis must be positive");
      }
      if (!std::isfinite(center_[i])) throw std::invalid_argument("center must be finite");
    }
    if (!std::isfinite(euler.alpha) || !std::isfinite(euler.beta) || !std::isfinite(euler.gamma)) {
      throw std::invalid_argument("euler angles must be finite");
    }
  }

  const Vec3& semi_axes() const { return semi_axes_; }
  double a() const { return semi_axes_[0]; }
  double b() const { return semi_axes_[1]; }
  double c() const { return semi_axes_[2]; }
  const Vec3& center() const { return center_; }
  const EulerAngles& euler() const { return euler_; }
  const Mat3& rotation() const { return rotation_; }

  Ellipsoid with_center(const Vec3& center) const { return {semi_axes_, center, euler_}; }
  Ellipsoid with_euler(const EulerAngles& euler) const { return {semi_axes_, center_, euler}; }

  Ellipsoid scaled(double s) const { return {semi_axes_ * s, center_ * s, euler_}; }

 private:
  Vec3 semi_axes_;
  Vec3 center_;
  EulerAngles euler_;
  Mat3 rotation_;
};

/// Surface parameters: theta is the azimuth in the body x-y plane, phi the
/// polar angle from the body z axis.
struct SurfaceParam {
  double theta = 0.0;
  double phi = 0.0;

  bool is_canonical() const { return theta >= 0.0 && theta < kTwoPi && phi >= 0.0 && phi <= kPi; }

  friend bool operator==(const SurfaceParam&, const SurfaceParam&) = default;
};

inline double wrap_two_pi(double x) {
  double w = std::fmod(x, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;  // fmod of tiny negatives rounds up to 2pi
  return w;
}

/// Maps any (theta, phi) to the canonical range describing the same surface
/// point. phi outside [0, pi] is reflected across the pole and theta moves
/// to the opposite meridian.
inline SurfaceParam canonicalize(double theta, double phi) {
  double p = wrap_two_pi(phi);
  if (p > kPi) {
    p = kTwoPi - p;
    theta += kPi;
  }
  return {wrap_two_pi(theta), p};
}

inline SurfaceParam canonicalize(const SurfaceParam& p) { return canonicalize(p.theta, p.phi); }

inline Vec3 surface_point_local(const Ellipsoid& e, const SurfaceParam& p) {
  const double sp = std::sin(p.phi);
  return {e.a() * sp * std::cos(p.theta), e.b() * sp * std::sin(p.theta), e.c() * std::cos(p.phi)};
}

inline Vec3 to_global_point(const Ellipsoid& e, const Vec3& x_local) {
  return e.rotation() * x_local + e.center();
}

inline Vec3 to_global_vector(const Ellipsoid& e, const Vec3& v_local) { return e.rotation() * v_local; }

inline Vec3 to_local_point(const Ellipsoid& e, const Vec3& x_global) {
  return e.rotation().transpose() * (x_global - e.center());
}

inline Vec3 to_local_vector(const Ellipsoid& e, const Vec3& v_global) {
  return e.rotation().transpose() * v_global;
}

inline Vec3 surface_point(const Ellipsoid& e, const SurfaceParam& p) {
  return to_global_point(e, surface_point_local(e, p));
}

enum class Frame { local, global };

struct SurfaceFrame {
  Vec3 position;
  Vec3 normal;
  std::optional<Vec3> tangent_theta;  // absent at the poles
  Vec3 tangent_phi;
  Frame frame = Frame::local;

  bool at_pole() const { return !tangent_theta.has_value(); }
};

/// |r_theta| below this fraction of max(a, b) marks a pole.
inline constexpr double kPoleRelTol = 1e-12;

/// Unnormalized outward normal N and the two surface derivatives in the
/// body frame.
struct SurfaceDerivatives {
  Vec3 normal;
  Vec3 r_theta;
  Vec3 r_phi;
};

inline SurfaceDerivatives surface_derivatives_local(const Ellipsoid& e, const SurfaceParam& p) {
  const double st = std::sin(p.theta), ct = std::cos(p.theta);
  const double sp = std::sin(p.phi), cp = std::cos(p.phi);
  const double a = e.a(), b = e.b(), c = e.c();
  return {
      Vec3{b * c * sp * ct, a * c * sp * st, a * b * cp},
      Vec3{-a * sp * st, b * sp * ct, 0.0},
      Vec3{a * cp * ct, b * cp * st, -c * sp},
  };
}

inline bool is_pole(const Ellipsoid& e, const Vec3& r_theta) {
  return r_theta.norm() < kPoleRelTol * std::max(e.a(), e.b());
}

inline SurfaceFrame surface_frame(const Ellipsoid& e, const SurfaceParam& p, Frame frame = Frame::global) {
  const SurfaceDerivatives d = surface_derivatives_local(e, p);
  SurfaceFrame f;
  f.position = surface_point_local(e, p);
  f.normal = d.normal.normalized();
  f.tangent_phi = d.r_phi.normalized();
  if (!is_pole(e, d.r_theta)) f.tangent_theta = d.r_theta.normalized();
  f.frame = frame;
  if (frame == Frame::global) {
    f.position = to_global_point(e, f.position);
    f.normal = to_global_vector(e, f.normal);
    f.tangent_phi = to_global_vector(e, f.tangent_phi);
    if (f.tangent_theta) f.tangent_theta = to_global_vector(e, *f.tangent_theta);
  }
  return f;
}

/// (x/a)^2 + (y/b)^2 + (z/c)^2 - 1 in body coordinates: negative inside.
inline double implicit_value(const Ellipsoid& e, const Vec3& x_global) {
  const Vec3 x = to_local_point(e, x_global);
  return x.cwiseQuotient(e.semi_axes()).squaredNorm() - 1.0;
}

/// Outward unit normal at a surface point given in global coordinates.
inline Vec3 implicit_gradient(const Ellipsoid& e, const Vec3& x_global) {
  const Vec3 x = to_local_point(e, x_global);
  const Vec3 inv2 = e.semi_axes().cwiseProduct(e.semi_axes()).cwiseInverse();
  return to_global_vector(e, 2.0 * x.cwiseProduct(inv2));
}

/// Inverts the parametrization. Points at the poles get theta = 0.
inline SurfaceParam param_from_local_point(const Ellipsoid& e, const Vec3& x_local, double tol = 1e-8) {
  const Vec3 u = x_local.cwiseQuotient(e.semi_axes());
  const double residual = u.squaredNorm() - 1.0;
  if (!(std::abs(residual) <= tol)) {
    throw std::invalid_argument("point is not on the ellipsoid surface (residual " +
                                std::to_string(residual) + ")");
  }
  // atan2 keeps phi accurate near the poles, where acos loses half the digits.
  const double rho = std::hypot(u.x(), u.y());
  const double phi = std::atan2(rho, u.z());
  double theta = 0.0;
  if (rho > kPoleRelTol) theta = wrap_two_pi(std::atan2(u.y(), u.x()));
  return {theta, phi};
}

/// Intersection of the ray origin + t * direction (t >= 0) with the surface,
/// taking the smallest non-negative root. Empty when the ray misses.
inline std::optional<SurfaceParam> ray_surface_entry(const Ellipsoid& e, const Vec3& origin,
                                                     const Vec3& direction, double t_max) {
  const Vec3 inv = e.semi_axes().cwiseInverse();
  const Vec3 o = to_local_point(e, origin).cwiseProduct(inv);
  const Vec3 d = to_local_vector(e, direction).cwiseProduct(inv);
  const double qa = d.squaredNorm();
  if (qa == 0.0) return std::nullopt;
  const double qb = 2.0 * o.dot(d);
  const double qc = o.squaredNorm() - 1.0;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) return std::nullopt;
  // Numerically stable roots.
  const double sq = std::sqrt(disc);
  const double q = -0.5 * (qb + std::copysign(sq, qb));
  double t0 = q / qa;
  double t1 = (q != 0.0) ? qc / q : t0;
  if (t0 > t1) std::swap(t0, t1);
  double t = t0 >= 0.0 ? t0 : t1;
  if (t < 0.0 || t > t_max) return std::nullopt;
  Vec3 x = to_local_point(e, origin + t * direction);
  // Project back onto the surface to remove round-off before inversion.
  x /= x.cwiseQuotient(e.semi_axes()).norm();
  return param_from_local_point(e, x);
}

/// Surface point whose outward normal is `direction` (the support point).
inline SurfaceParam support_param(const Ellipsoid& e, const Vec3& direction_global) {
  const Vec3 w = to_local_vector(e, direction_global);
  const Vec3 aw = e.semi_axes().cwiseProduct(w);
  Vec3 x = e.semi_axes().cwiseProduct(aw) / aw.norm();
  x /= x.cwiseQuotient(e.semi_axes()).norm();
  return param_from_local_point(e, x);
}

/// Entry point of the segment from a to b into the ellipsoid, seen from a.
inline std::optional<SurfaceParam> line_surface_entry(const Ellipsoid& e, const Vec3& a, const Vec3& b) {
  return ray_surface_entry(e, a, b - a, 1.0);
}

}  // namespace surfslide
