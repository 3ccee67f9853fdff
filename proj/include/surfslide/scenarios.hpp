#pragma once

// Named test configurations and the scenario file format.
//
// A scenario file is one flat JSON object:
//
//   name               string, required
//   e1_semi_axes       [a, b, c], required (likewise e2_semi_axes)
//   e1_center          [x, y, z], required (likewise e2_center)
//   e1_euler           [alpha, beta, gamma], optional, default zeros
//   init               [theta1, phi1, theta2, phi2], optional
//   lambda0, max_iter, tol_d, tol_n, tol_lambda, lambda_floor   optional
//   overshoot_mode     "accept" | "revert", optional
//   expected_distance  number, optional; requires expected_note
//   expected_note      string
//
// Unknown keys are rejected.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "surfslide/geometry.hpp"
#include "surfslide/slider_core.hpp"

namespace surfslide {

struct ConfigOverrides {
  std::optional<double> lambda0;
  std::optional<int> max_iter;
  std::optional<double> tol_d;
  std::optional<double> tol_n;
  std::optional<double> tol_lambda;
  std::optional<double> lambda_floor;
  std::optional<OvershootMode> overshoot_mode;

  SolverConfig apply(SolverConfig cfg) const {
    if (lambda0) cfg.lambda0 = *lambda0;
    if (max_iter) cfg.max_iter = *max_iter;
    if (tol_d) cfg.tol_d = *tol_d;
    if (tol_n) cfg.tol_n = *tol_n;
    if (tol_lambda) cfg.tol_lambda = *tol_lambda;
    if (lambda_floor) cfg.lambda_floor = *lambda_floor;
    if (overshoot_mode) cfg.overshoot_mode = *overshoot_mode;
    return cfg;
  }

  friend bool operator==(const ConfigOverrides&, const ConfigOverrides&) = default;
};

struct Expectation {
  double distance = 0.0;
  std::string note;

  friend bool operator==(const Expectation&, const Expectation&) = default;
};

struct Scenario {
  std::string name;
  Ellipsoid e1;
  Ellipsoid e2;
  std::optional<std::pair<SurfaceParam, SurfaceParam>> init;
  ConfigOverrides overrides;
  std::optional<Expectation> expected;

  SolverConfig config(const SolverConfig& base = {}) const { return overrides.apply(base); }
};

inline bool same_ellipsoid(const Ellipsoid& x, const Ellipsoid& y) {
  return x.semi_axes() == y.semi_axes() && x.center() == y.center() && x.euler().alpha == y.euler().alpha &&
         x.euler().beta == y.euler().beta && x.euler().gamma == y.euler().gamma;
}

inline bool operator==(const Scenario& x, const Scenario& y) {
  return x.name == y.name && same_ellipsoid(x.e1, y.e1) && same_ellipsoid(x.e2, y.e2) && x.init == y.init &&
         x.overrides == y.overrides && x.expected == y.expected;
}

/// The seven demonstration configurations. System II and III centers sit
/// at 1.5 / sqrt(2) on both axes, which the tables round to 1.0607.
inline std::vector<Scenario> builtin_scenarios() {
  const double s = 1.5 / std::sqrt(2.0);
  const std::pair<SurfaceParam, SurfaceParam> init_one{{7.0 * kPi / 6.0, 2.0 * kPi / 3.0}, {11.0 * kPi / 6.0, kPi / 2.0}};
  const std::pair<SurfaceParam, SurfaceParam> init_three{{4.0 * kPi / 3.0, kPi / 3.0}, {7.0 * kPi / 4.0, kPi / 2.0}};
  ConfigOverrides working;
  working.lambda0 = 0.05;

  const Vec3 big{1.0, 0.6, 0.4};
  const std::string support_note = "support-point distance |X02 - X01| - a1 - c2";

  std::vector<Scenario> out;
  out.push_back({"system-I", Ellipsoid(big, {-1.5, 0, 0}, {0, kPi / 6.0, 0}),
                 Ellipsoid({0.6, 0.7, 0.5}, {1, 0.5, 0.5}, {0, 0, kPi / 4.0}), init_one, working,
                 Expectation{1.2856, "quoted reference value, 4 decimals"}});
  out.push_back({"system-II-aligned", Ellipsoid(big, {-1.5, 0, 0}), Ellipsoid(big, {1.5, 0, 0}, {0, kPi / 2.0, 0}),
                 init_three, working, Expectation{1.6, support_note}});
  out.push_back({"system-II-rotated", Ellipsoid(big, {-s, 0, -s}, {0, -kPi / 4.0, 0}),
                 Ellipsoid(big, {s, 0, s}, {0, kPi / 4.0, 0}), init_three, working, Expectation{1.6, support_note}});

  struct Shape {
    const char* tag;
    Vec3 axes;
    double expected;
  };
  const Shape shapes[] = {{"ABC", {0.2, 0.4, 0.6}, 2.2},
                          {"aBC", {0.02, 0.4, 0.6}, 2.2},
                          {"abC", {0.02, 0.04, 0.6}, 2.2},
                          {"abc", {0.02, 0.04, 0.06}, 2.74}};
  for (const Shape& sh : shapes) {
    out.push_back({std::string("system-III-") + sh.tag, Ellipsoid({0.2, 0.4, 0.6}, {-s, 0, -s}, {0, -kPi / 4.0, 0}),
                   Ellipsoid(sh.axes, {s, 0, s}, {0, kPi / 4.0, 0}), init_three, working,
                   Expectation{sh.expected, support_note + ", confirmed by the lattice reference"}});
  }
  return out;
}

inline std::optional<Scenario> find_builtin(const std::string& name) {
  for (Scenario& s : builtin_scenarios()) {
    if (s.name == name) return std::move(s);
  }
  return std::nullopt;
}

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& field, int line, const std::string& what)
      : std::runtime_error(format(field, line, what)), field_(field), line_(line) {}

  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  static std::string format(const std::string& field, int line, const std::string& what) {
    std::string s;
    if (line > 0) s += "line " + std::to_string(line) + ": ";
    if (!field.empty()) s += field + ": ";
    return s + what;
  }

  std::string field_;
  int line_;
};

namespace detail {

inline int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  int line = 1;
  for (std::size_t i = 0; i < offset; ++i) line += text[i] == '\n';
  return line;
}

// nlohmann/json keeps no source positions, so a field's line is the line of
// its first quoted key.
inline int line_of_key(const std::string& text, const std::string& key) {
  const std::size_t at = text.find('"' + key + '"');
  return at == std::string::npos ? 0 : line_of_offset(text, at);
}

}  // namespace detail

inline nlohmann::ordered_json scenario_to_json(const Scenario& s) {
  nlohmann::ordered_json j;
  auto vec = [](const Vec3& v) { return nlohmann::ordered_json::array({v.x(), v.y(), v.z()}); };
  auto euler = [](const EulerAngles& e) { return nlohmann::ordered_json::array({e.alpha, e.beta, e.gamma}); };
  j["name"] = s.name;
  j["e1_semi_axes"] = vec(s.e1.semi_axes());
  j["e1_center"] = vec(s.e1.center());
  j["e1_euler"] = euler(s.e1.euler());
  j["e2_semi_axes"] = vec(s.e2.semi_axes());
  j["e2_center"] = vec(s.e2.center());
  j["e2_euler"] = euler(s.e2.euler());
  if (s.init) {
    j["init"] = {s.init->first.theta, s.init->first.phi, s.init->second.theta, s.init->second.phi};
  }
  const ConfigOverrides& o = s.overrides;
  if (o.lambda0) j["lambda0"] = *o.lambda0;
  if (o.max_iter) j["max_iter"] = *o.max_iter;
  if (o.tol_d) j["tol_d"] = *o.tol_d;
  if (o.tol_n) j["tol_n"] = *o.tol_n;
  if (o.tol_lambda) j["tol_lambda"] = *o.tol_lambda;
  if (o.lambda_floor) j["lambda_floor"] = *o.lambda_floor;
  if (o.overshoot_mode) j["overshoot_mode"] = std::string(to_string(*o.overshoot_mode));
  if (s.expected) {
    j["expected_distance"] = s.expected->distance;
    j["expected_note"] = s.expected->note;
  }
  return j;
}

inline std::string serialize_scenario(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

inline Scenario parse_scenario(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError("", detail::line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1), "malformed document");
  }
  if (!j.is_object()) throw ScenarioError("", 1, "expected a single object");

  static const char* const known[] = {"name",     "e1_semi_axes", "e1_center",  "e1_euler",     "e2_semi_axes",
                                      "e2_center", "e2_euler",    "init",       "lambda0",      "max_iter",
                                      "tol_d",    "tol_n",        "tol_lambda", "lambda_floor", "overshoot_mode",
                                      "expected_distance",        "expected_note"};
  for (const auto& item : j.items()) {
    if (std::find(std::begin(known), std::end(known), item.key()) == std::end(known)) {
      throw ScenarioError(item.key(), detail::line_of_key(text, item.key()), "unknown key");
    }
  }

  auto fail = [&](const std::string& key, const std::string& what) -> ScenarioError {
    return ScenarioError(key, detail::line_of_key(text, key), what);
  };
  auto number = [&](const std::string& key) {
    const auto& v = j.at(key);
    if (!v.is_number()) throw fail(key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw fail(key, "expected a finite number");
    return x;
  };
  auto numbers = [&](const std::string& key, std::size_t count) {
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != count) throw fail(key, "expected an array of " + std::to_string(count) + " numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw fail(key, "expected an array of " + std::to_string(count) + " numbers");
      out.push_back(x.get<double>());
    }
    return out;
  };
  auto required = [&](const std::string& key) {
    if (!j.contains(key)) throw ScenarioError(key, 0, "missing required field");
  };

  Scenario s{"", Ellipsoid({1, 1, 1}, {0, 0, 0}), Ellipsoid({1, 1, 1}, {0, 0, 0}), std::nullopt, {}, std::nullopt};
  required("name");
  if (!j["name"].is_string() || j["name"].get<std::string>().empty()) throw fail("name", "expected a non-empty string");
  s.name = j["name"].get<std::string>();

  auto ellipsoid = [&](const std::string& prefix) {
    required(prefix + "_semi_axes");
    required(prefix + "_center");
    const auto ax = numbers(prefix + "_semi_axes", 3);
    const auto c = numbers(prefix + "_center", 3);
    std::vector<double> eu{0, 0, 0};
    if (j.contains(prefix + "_euler")) eu = numbers(prefix + "_euler", 3);
    try {
      return Ellipsoid({ax[0], ax[1], ax[2]}, {c[0], c[1], c[2]}, {eu[0], eu[1], eu[2]});
    } catch (const std::invalid_argument& e) {
      const std::string what = e.what();
      const std::string key = what.rfind("semi-axis", 0) == 0 ? "_semi_axes"
                              : what.rfind("center", 0) == 0  ? "_center"
                                                              : "_euler";
      throw fail(prefix + key, what);
    }
  };
  s.e1 = ellipsoid("e1");
  s.e2 = ellipsoid("e2");

  if (j.contains("init")) {
    const auto v = numbers("init", 4);
    const SurfaceParam p1{v[0], v[1]}, p2{v[2], v[3]};
    if (!p1.is_canonical() || !p2.is_canonical()) {
      throw fail("init", "surface parameters out of range (theta in [0, 2pi), phi in [0, pi])");
    }
    s.init = std::make_pair(p1, p2);
  }

  ConfigOverrides& o = s.overrides;
  if (j.contains("lambda0")) o.lambda0 = number("lambda0");
  if (j.contains("max_iter")) {
    if (!j["max_iter"].is_number_integer()) throw fail("max_iter", "expected an integer");
    o.max_iter = j["max_iter"].get<int>();
  }
  if (j.contains("tol_d")) o.tol_d = number("tol_d");
  if (j.contains("tol_n")) o.tol_n = number("tol_n");
  if (j.contains("tol_lambda")) o.tol_lambda = number("tol_lambda");
  if (j.contains("lambda_floor")) o.lambda_floor = number("lambda_floor");
  if (j.contains("overshoot_mode")) {
    const auto& v = j["overshoot_mode"];
    if (v == "accept") o.overshoot_mode = OvershootMode::accept_and_continue;
    else if (v == "revert") o.overshoot_mode = OvershootMode::revert_and_retry;
    else throw fail("overshoot_mode", "expected \"accept\" or \"revert\"");
  }
  try {
    o.apply({}).validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("", 0, e.what());
  }

  if (j.contains("expected_distance")) {
    if (!j.contains("expected_note") || !j["expected_note"].is_string()) {
      throw fail("expected_distance", "an expected distance needs an expected_note string");
    }
    s.expected = Expectation{number("expected_distance"), j["expected_note"].get<std::string>()};
  } else if (j.contains("expected_note")) {
    throw fail("expected_note", "expected_note without expected_distance");
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open scenario file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace surfslide
