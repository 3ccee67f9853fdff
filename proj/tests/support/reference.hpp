#pragma once

// Reference computations for the tests, written independently of the
// library code paths they check.

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "surfslide/geometry.hpp"

namespace ref {

using surfslide::Ellipsoid;
using surfslide::EulerAngles;
using surfslide::Mat3;
using surfslide::SurfaceParam;
using surfslide::Vec3;

inline constexpr double kPi = 3.14159265358979323846;

// Rx(alpha) Ry(beta) Rz(gamma) composed from axis-angle factors.
inline Mat3 rotation(double alpha, double beta, double gamma) {
  return (Eigen::AngleAxisd(alpha, Vec3::UnitX()) * Eigen::AngleAxisd(beta, Vec3::UnitY()) *
          Eigen::AngleAxisd(gamma, Vec3::UnitZ()))
      .toRotationMatrix();
}

inline Vec3 surface_point(const Ellipsoid& e, double theta, double phi) {
  const Vec3 local{e.a() * std::sin(phi) * std::cos(theta), e.b() * std::sin(phi) * std::sin(theta),
                   e.c() * std::cos(phi)};
  return rotation(e.euler().alpha, e.euler().beta, e.euler().gamma) * local + e.center();
}

// Gradient of the implicit function, normalized.
inline Vec3 outward_normal(const Ellipsoid& e, double theta, double phi) {
  const Vec3 local{std::sin(phi) * std::cos(theta) / e.a(), std::sin(phi) * std::sin(theta) / e.b(),
                   std::cos(phi) / e.c()};
  return (rotation(e.euler().alpha, e.euler().beta, e.euler().gamma) * local).normalized();
}

// Distance from an exterior point, by plain bisection on the multiplier t
// of x_i = a_i^2 q_i / (a_i^2 + t).
inline double point_distance(const Ellipsoid& e, const Vec3& q_global) {
  const Mat3 r = rotation(e.euler().alpha, e.euler().beta, e.euler().gamma);
  const Vec3 q = r.transpose() * (q_global - e.center());
  const Vec3 a = e.semi_axes();
  auto f = [&](double t) {
    double s = -1.0;
    for (int i = 0; i < 3; ++i) s += std::pow(a[i] * q[i] / (a[i] * a[i] + t), 2);
    return s;
  };
  double lo = 0.0, hi = 1.0;
  while (f(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 400 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  const double t = 0.5 * (lo + hi);
  Vec3 x;
  for (int i = 0; i < 3; ++i) x[i] = a[i] * a[i] * q[i] / (a[i] * a[i] + t);
  return (q - x).norm();
}

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
  double log_uniform(double lo, double hi) { return lo * std::pow(hi / lo, uniform(0.0, 1.0)); }

  Vec3 unit() {
    std::normal_distribution<double> g(0.0, 1.0);
    Vec3 v;
    do v = {g(gen), g(gen), g(gen)};
    while (v.norm() < 1e-9);
    return v.normalized();
  }

  EulerAngles euler() { return {uniform(-kPi, kPi), uniform(-kPi, kPi), uniform(-kPi, kPi)}; }

  // Semi-axes log-uniform in [lo, hi] with at most the given aspect ratio.
  Vec3 semi_axes(double lo = 0.02, double hi = 2.0, double max_aspect = 30.0) {
    Vec3 s;
    do s = {log_uniform(lo, hi), log_uniform(lo, hi), log_uniform(lo, hi)};
    while (s.maxCoeff() / s.minCoeff() > max_aspect);
    return s;
  }

  Ellipsoid ellipsoid() { return Ellipsoid(semi_axes(), {uniform(-3, 3), uniform(-3, 3), uniform(-3, 3)}, euler()); }

  SurfaceParam param() { return {uniform(0.0, 2.0 * kPi), std::acos(uniform(-1.0, 1.0))}; }

  // Two ellipsoids whose bounding spheres are disjoint.
  std::pair<Ellipsoid, Ellipsoid> separated_pair() {
    const Ellipsoid e1(semi_axes(), Vec3::Zero(), euler());
    const Vec3 a2 = semi_axes();
    const double gap = log_uniform(0.01, 1.0);
    const Vec3 c2 = (e1.semi_axes().maxCoeff() + a2.maxCoeff() + gap) * unit();
    return {e1, Ellipsoid(a2, c2, euler())};
  }
};

}  // namespace ref
