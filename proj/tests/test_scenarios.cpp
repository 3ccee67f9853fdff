#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "surfslide/oracle.hpp"
#include "surfslide/scenarios.hpp"
#include "surfslide/slider.hpp"

using namespace surfslide;

namespace {

std::string aligned_text() { return serialize_scenario(*find_builtin("system-II-aligned")); }

// Replaces the first occurrence of `from` in the serialized System II file.
std::string edited(const std::string& from, const std::string& to) {
  std::string t = aligned_text();
  const auto at = t.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return t.replace(at, from.size(), to);
}

ScenarioError parse_error(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ScenarioError& e) {
    return e;
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return ScenarioError("", 0, "");
}

}  // namespace

TEST(Builtins, SevenUniquelyNamed) {
  const auto all = builtin_scenarios();
  ASSERT_EQ(all.size(), 7u);
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) EXPECT_NE(all[i].name, all[j].name);
    ASSERT_TRUE(all[i].expected);
    EXPECT_FALSE(all[i].expected->note.empty());
    ASSERT_TRUE(all[i].init);
    EXPECT_EQ(all[i].config().lambda0, 0.05);
  }
}

TEST(Builtins, Lookups) {
  EXPECT_EQ(find_builtin("system-I")->e1.semi_axes(), Vec3(1, 0.6, 0.4));
  EXPECT_NEAR(find_builtin("system-II-rotated")->e1.center().x(), -1.0607, 5e-5);
  EXPECT_NEAR(find_builtin("system-II-rotated")->e1.center().z(), -1.0607, 5e-5);
  EXPECT_EQ(find_builtin("system-III-abc")->e2.semi_axes(), Vec3(0.02, 0.04, 0.06));
  EXPECT_EQ(find_builtin("system-III-aBC")->e2.semi_axes(), Vec3(0.02, 0.4, 0.6));
  EXPECT_FALSE(find_builtin("does-not-exist"));
}

TEST(Builtins, SystemOneTable) {
  const Scenario sc = *find_builtin("system-I");
  EXPECT_EQ(sc.e1.center(), Vec3(-1.5, 0, 0));
  EXPECT_NEAR(sc.e1.euler().beta, kPi / 6, 0.0);
  EXPECT_EQ(sc.e2.semi_axes(), Vec3(0.6, 0.7, 0.5));
  EXPECT_EQ(sc.e2.center(), Vec3(1, 0.5, 0.5));
  EXPECT_NEAR(sc.e2.euler().gamma, kPi / 4, 0.0);
  EXPECT_NEAR(sc.init->first.theta, 7 * kPi / 6, 1e-15);
  EXPECT_NEAR(sc.init->first.phi, 2 * kPi / 3, 1e-15);
  EXPECT_NEAR(sc.init->second.theta, 11 * kPi / 6, 1e-15);
  EXPECT_NEAR(sc.init->second.phi, kPi / 2, 1e-15);
}

TEST(Builtins, AllConvergeUnderDefaults) {
  for (const Scenario& sc : builtin_scenarios()) {
    const SolveResult r = solve(sc.e1, sc.e2, sc.init, sc.config());
    EXPECT_EQ(r.status, Status::converged) << sc.name;
  }
}

TEST(Builtins, SupportPointExpectationsMatchTheLatticeReference) {
  for (const Scenario& sc : builtin_scenarios()) {
    if (sc.name == "system-I") continue;
    EXPECT_NEAR(oracle_min_distance(sc.e1, sc.e2).distance, sc.expected->distance, 1e-6) << sc.name;
  }
}

TEST(ScenarioFile, RoundTripsEveryBuiltin) {
  for (const Scenario& sc : builtin_scenarios()) {
    EXPECT_EQ(parse_scenario(serialize_scenario(sc)), sc) << sc.name;
  }
}

TEST(ScenarioFile, RoundTripsOverrides) {
  Scenario sc = *find_builtin("system-I");
  sc.overrides.max_iter = 50;
  sc.overrides.tol_n = 1e-9;
  sc.overrides.overshoot_mode = OvershootMode::revert_and_retry;
  sc.expected.reset();
  sc.init.reset();
  const Scenario back = parse_scenario(serialize_scenario(sc));
  EXPECT_EQ(back, sc);
  EXPECT_EQ(back.config().overshoot_mode, OvershootMode::revert_and_retry);
  EXPECT_EQ(back.config().max_iter, 50);
}

TEST(ScenarioFile, ShippedFilesMatchBuiltins) {
  const std::filesystem::path dir = std::filesystem::path(SURFSLIDE_SOURCE_DIR) / "scenarios";
  for (const Scenario& sc : builtin_scenarios()) {
    const auto path = dir / (sc.name + ".json");
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    EXPECT_EQ(load_scenario(path.string()), sc) << path;
  }
}

TEST(ScenarioFile, EulerDefaultsToZero) {
  const Scenario sc = parse_scenario(R"({"name": "x", "e1_semi_axes": [1, 1, 1], "e1_center": [0, 0, 0],
    "e2_semi_axes": [1, 1, 1], "e2_center": [3, 0, 0]})");
  EXPECT_TRUE(sc.e2.rotation().isApprox(Mat3::Identity(), 0.0));
  EXPECT_FALSE(sc.init);
}

TEST(ScenarioFile, ZeroSemiAxis) {
  const ScenarioError e = parse_error(edited("\"e1_semi_axes\": [\n    1.0", "\"e1_semi_axes\": [\n    0.0"));
  EXPECT_EQ(e.field(), "e1_semi_axes");
  EXPECT_NE(std::string(e.what()).find("semi-axis must be positive"), std::string::npos);
  EXPECT_GT(e.line(), 0);
}

TEST(ScenarioFile, PhiOutOfRange) {
  const Scenario sc = *find_builtin("system-II-aligned");
  auto j = scenario_to_json(sc);
  j["init"][1] = 4.0;
  const ScenarioError e = parse_error(j.dump(2));
  EXPECT_EQ(e.field(), "init");
  EXPECT_NE(std::string(e.what()).find("out of range"), std::string::npos);
}

TEST(ScenarioFile, UnknownKeyReportsItsLine) {
  const ScenarioError e = parse_error(edited("\"name\"", "\"colour\": \"red\",\n  \"name\""));
  EXPECT_EQ(e.field(), "colour");
  EXPECT_EQ(e.line(), 2);
  EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
}

TEST(ScenarioFile, MalformedDocumentReportsLine) {
  const ScenarioError e = parse_error("{\n  \"name\": \"x\",\n  \"e1_center\": [1, 2,,\n}");
  EXPECT_EQ(e.line(), 3);
}

TEST(ScenarioFile, MissingField) {
  const ScenarioError e = parse_error(R"({"name": "x", "e1_semi_axes": [1, 1, 1]})");
  EXPECT_EQ(e.field(), "e1_center");
}

TEST(ScenarioFile, WrongShapes) {
  EXPECT_EQ(parse_error(edited("\"e2_center\": [", "\"e2_center\": [7, ")).field(), "e2_center");
  EXPECT_EQ(parse_error(edited("\"lambda0\": 0.05", "\"lambda0\": \"big\"")).field(), "lambda0");
  EXPECT_EQ(parse_error(edited("\"lambda0\": 0.05", "\"lambda0\": 0.05, \"max_iter\": 2.5")).field(), "max_iter");
  EXPECT_EQ(parse_error(edited("\"lambda0\": 0.05", "\"lambda0\": 0.05, \"overshoot_mode\": \"maybe\"")).field(),
            "overshoot_mode");
}

TEST(ScenarioFile, InvalidOverride) {
  const ScenarioError e = parse_error(edited("\"lambda0\": 0.05", "\"lambda0\": -1"));
  EXPECT_NE(std::string(e.what()).find("lambda0 must be positive"), std::string::npos);
}

TEST(ScenarioFile, ExpectationNeedsANote) {
  Scenario sc = *find_builtin("system-I");
  auto j = scenario_to_json(sc);
  j.erase("expected_note");
  EXPECT_EQ(parse_error(j.dump()).field(), "expected_distance");
}

TEST(ScenarioFile, UnreadablePath) {
  EXPECT_THROW(load_scenario("/nonexistent/dir/x.json"), std::ios_base::failure);
}
