#pragma once

// Command-line front end: solve, sweep, bench and list.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "surfslide/contact.hpp"
#include "surfslide/oracle.hpp"
#include "surfslide/scenarios.hpp"
#include "surfslide/slider.hpp"

namespace surfslide::cli {

enum ExitCode : int {
  kOk = 0,
  kBenchMismatch = 1,
  kMaxIter = 2,
  kLambdaFloor = 3,
  kUnknownScenario = 4,
  kBenchOverlap = 5,
  kBadFile = 6,
  kBadFlag = 7,
};

inline int exit_code_for(Status s) {
  switch (s) {
    case Status::max_iter: return kMaxIter;
    case Status::lambda_floor: return kLambdaFloor;
    default: return kOk;
  }
}

using Json = nlohmann::ordered_json;

struct InputError {
  int code;
  std::string message;
};

inline Scenario resolve_scenario(const std::string& ref) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::is_regular_file(ref, ec)) {
    try {
      return load_scenario(ref);
    } catch (const ScenarioError& e) {
      throw InputError{kBadFile, ref + ": " + e.what()};
    } catch (const std::exception& e) {
      throw InputError{kBadFile, ref + ": " + e.what()};
    }
  }
  if (auto s = find_builtin(ref)) return *s;
  if (ref.find('/') != std::string::npos || ref.ends_with(".json")) {
    throw InputError{kBadFile, "cannot read scenario file " + ref};
  }
  throw InputError{kUnknownScenario, "unknown scenario '" + ref + "' (see `list`)"};
}

/// Uniform over the surface parameter box with phi = acos(u), u uniform in
/// [-1, 1], so points do not bunch at the poles.
inline std::pair<SurfaceParam, SurfaceParam> random_init(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> theta(0.0, kTwoPi), u(-1.0, 1.0);
  auto one = [&] {
    const double t = theta(rng);
    return SurfaceParam{t, std::acos(u(rng))};
  };
  const SurfaceParam p1 = one();
  return {p1, one()};
}

inline Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Json eps_json(const ConvergenceMetrics& m) {
  Json j;
  j["eps_d"] = m.eps_d ? Json(*m.eps_d) : Json(nullptr);
  j["eps_n"] = m.eps_n;
  j["eps_lambda"] = m.eps_lambda;
  return j;
}

inline Json result_record(const std::string& name, const DistanceResult& r, std::optional<double> wall_time_s) {
  Json j;
  j["scenario"] = name;
  j["status"] = std::string(to_string(r.status));
  j["distance"] = r.distance;
  j["final_params"] = Json::array({Json::array({r.params[0].theta, r.params[0].phi}),
                                   Json::array({r.params[1].theta, r.params[1].phi})});
  j["closest_points"] = Json::array({vec_json(r.closest_points[0]), vec_json(r.closest_points[1])});
  j["normals"] = Json::array({vec_json(r.normals[0]), vec_json(r.normals[1])});
  j["iterations"] = r.iterations;
  j["final_eps"] = eps_json(r.final_eps);
  if (wall_time_s) j["wall_time_s"] = *wall_time_s;
  return j;
}

inline void write_trace_csv(std::ostream& os, const Trace& trace) {
  os << "k,theta1,phi1,theta2,phi2,distance,lambda1,lambda2,eps_d,eps_n,overshoot\n";
  char buf[512];
  for (const StepRecord& s : trace) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", s.k, s.theta1,
                  s.phi1, s.theta2, s.phi2, s.distance, s.lambda1, s.lambda2, s.eps_d, s.eps_n, s.overshoot ? 1 : 0);
    os << buf;
  }
}

struct SolverFlags {
  std::optional<double> lambda0, tol_d, tol_n, tol_lambda;
  std::optional<int> max_iter;
  std::string mode;

  void attach(CLI::App* app) {
    app->add_option("--lambda0", lambda0, "initial angle increment");
    app->add_option("--max-iter", max_iter, "iteration cap");
    app->add_option("--tol-d", tol_d, "relative distance change tolerance");
    app->add_option("--tol-n", tol_n, "normal alignment tolerance");
    app->add_option("--tol-lambda", tol_lambda, "step size tolerance");
    app->add_option("--mode", mode, "overshoot handling")->check(CLI::IsMember({"accept", "revert"}));
  }

  SolverConfig apply(SolverConfig cfg) const {
    if (lambda0) cfg.lambda0 = *lambda0;
    if (max_iter) cfg.max_iter = *max_iter;
    if (tol_d) cfg.tol_d = *tol_d;
    if (tol_n) cfg.tol_n = *tol_n;
    if (tol_lambda) cfg.tol_lambda = *tol_lambda;
    if (mode == "accept") cfg.overshoot_mode = OvershootMode::accept_and_continue;
    if (mode == "revert") cfg.overshoot_mode = OvershootMode::revert_and_retry;
    try {
      cfg.validate();
    } catch (const std::invalid_argument& e) {
      throw InputError{kBadFlag, e.what()};
    }
    return cfg;
  }
};

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct SolveOptions {
  std::string ref;
  std::string trace_path;
  bool verify = false;
  std::optional<std::uint64_t> seed;
  bool json = false;
  bool no_timing = false;
  SolverFlags solver;
};

inline int cmd_solve(const SolveOptions& opt, std::ostream& out, std::ostream& err) {
  const Scenario sc = resolve_scenario(opt.ref);
  SolverConfig cfg = opt.solver.apply(sc.config());
  cfg.record_trace = !opt.trace_path.empty();
  auto init = sc.init;
  if (opt.seed) {
    std::mt19937_64 rng(*opt.seed);
    init = random_init(rng);
  }

  const auto t0 = std::chrono::steady_clock::now();
  const SolveResult r = solve(sc.e1, sc.e2, init, cfg);
  const double wall = seconds_since(t0);
  Json rec = result_record(sc.name, r, opt.no_timing ? std::nullopt : std::optional<double>(wall));
  rec["far_face_jumps"] = r.restarts;

  if (r.status == Status::contact || r.status == Status::overlap) {
    const ContactReport c = penetration_depth(sc.e1, sc.e2, r.final_state, cfg);
    rec["contact"] = {{"kind", std::string(to_string(c.kind))}, {"distance_or_depth", c.distance_or_depth}};
  }
  if (opt.verify) {
    try {
      const OracleResult o = oracle_min_distance(sc.e1, sc.e2);
      rec["oracle_distance"] = o.distance;
      rec["oracle_gap"] = std::abs(r.distance - o.distance);
    } catch (const OverlapSuspected& e) {
      rec["oracle_error"] = e.what();
    }
  }
  if (sc.expected) rec["expected"] = {{"distance", sc.expected->distance}, {"note", sc.expected->note}};

  if (!opt.trace_path.empty()) {
    std::ofstream f(opt.trace_path);
    if (!f) {
      err << "cannot write trace file " << opt.trace_path << "\n";
      return kBadFlag;
    }
    write_trace_csv(f, *r.trace);
  }
  out << rec.dump(2) << "\n";
  return exit_code_for(r.status);
}

struct SweepOptions {
  std::string ref;
  std::string param;
  std::vector<double> values;
  int count = 8;
  std::uint64_t seed = 1;
  bool no_timing = false;
  SolverFlags solver;
};

inline int cmd_sweep(const SweepOptions& opt, std::ostream& out, std::ostream&) {
  const Scenario sc = resolve_scenario(opt.ref);
  const SolverConfig base = opt.solver.apply(sc.config());

  Json records = Json::array();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  int worst = kOk;
  auto run = [&](const SolverConfig& cfg, const std::optional<ParamPair>& init, Json tag) {
    const auto t0 = std::chrono::steady_clock::now();
    const SolveResult r = solve(sc.e1, sc.e2, init, cfg);
    const double wall = seconds_since(t0);
    Json rec = result_record(sc.name, r, opt.no_timing ? std::nullopt : std::optional<double>(wall));
    rec["far_face_jumps"] = r.restarts;
    rec["sweep_value"] = std::move(tag);
    records.push_back(std::move(rec));
    lo = std::min(lo, r.distance);
    hi = std::max(hi, r.distance);
    worst = std::max(worst, exit_code_for(r.status));
  };

  if (opt.param == "lambda0") {
    if (opt.values.empty()) throw InputError{kBadFlag, "--param lambda0 needs --values"};
    for (double v : opt.values) {
      SolverConfig cfg = base;
      cfg.lambda0 = v;
      try {
        cfg.validate();
      } catch (const std::invalid_argument& e) {
        throw InputError{kBadFlag, e.what()};
      }
      run(cfg, sc.init, v);
    }
  } else {
    if (opt.count < 1) throw InputError{kBadFlag, "--count must be at least 1"};
    std::mt19937_64 rng(opt.seed);
    for (int i = 0; i < opt.count; ++i) {
      const ParamPair init = random_init(rng);
      run(base, init, Json::array({init.first.theta, init.first.phi, init.second.theta, init.second.phi}));
    }
  }

  Json j;
  j["scenario"] = sc.name;
  j["parameter"] = opt.param;
  j["records"] = std::move(records);
  j["distance_min"] = lo;
  j["distance_max"] = hi;
  j["distance_spread"] = hi - lo;
  out << j.dump(2) << "\n";
  return worst;
}

struct BenchOptions {
  std::string ref;
  int steps = 1000;
  double perturbation = 1e-3;
  std::optional<double> warm_lambda0;
  std::uint64_t seed = 1;
  bool no_timing = false;
  SolverFlags solver;
};

/// Rotation by `angle` about a unit axis, applied on the global side.
inline Mat3 axis_rotation(const Vec3& axis, double angle) { return Eigen::AngleAxisd(angle, axis).toRotationMatrix(); }

struct BenchReport {
  int steps = 0;
  double cold_mean_iterations = 0.0;
  double warm_mean_iterations = 0.0;
  int warm_max_iterations = 0;
  double cold_wall_s = 0.0;
  double warm_wall_s = 0.0;
  double max_gap = 0.0;
  int mismatches = 0;
  bool overlap = false;
  int overlap_step = -1;
};

inline constexpr double kBenchAgreementTol = 1e-8;

/// Initial step for warm restarts: ten times the per-step motion, since the
/// previous closest points are already within that neighbourhood.
inline double default_warm_lambda0(const SolverConfig& cfg, double perturbation) {
  return std::clamp(10.0 * perturbation, 100.0 * cfg.lambda_floor, cfg.lambda0);
}

/// Random walk of rigid perturbations applied to E2; every step is solved
/// cold from the center-line start and warm from the previous warm result.
inline BenchReport run_bench(const Scenario& sc, const SolverConfig& cfg, int steps, double perturbation,
                             std::uint64_t seed, std::optional<double> warm_lambda0 = std::nullopt) {
  SolverConfig warm_cfg = cfg;
  warm_cfg.lambda0 = warm_lambda0 ? *warm_lambda0 : default_warm_lambda0(cfg, perturbation);
  warm_cfg.validate();
  BenchReport rep;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_unit = [&] {
    Vec3 v;
    do {
      v = {gauss(rng), gauss(rng), gauss(rng)};
    } while (v.norm() < 1e-12);
    return v.normalized();
  };

  Ellipsoid e2 = sc.e2;
  SolveResult prev = solve(sc.e1, e2, sc.init, cfg);
  long cold_total = 0, warm_total = 0;
  for (int i = 0; i < steps; ++i) {
    const Vec3 shift = perturbation * random_unit();
    const Mat3 rot = axis_rotation(random_unit(), perturbation) * e2.rotation();
    e2 = Ellipsoid(e2.semi_axes(), e2.center() + shift, euler_from_rotation(rot));

    auto t0 = std::chrono::steady_clock::now();
    const SolveResult cold = solve(sc.e1, e2, std::nullopt, cfg);
    rep.cold_wall_s += seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const SolveResult warm = solve(sc.e1, e2, warm_start_from(prev), warm_cfg);
    rep.warm_wall_s += seconds_since(t0);

    for (const SolveResult* r : {&cold, &warm}) {
      if (r->status == Status::overlap || r->status == Status::contact) {
        rep.overlap = true;
        rep.overlap_step = i;
        return rep;
      }
    }
    ++rep.steps;
    cold_total += cold.iterations;
    warm_total += warm.iterations;
    rep.warm_max_iterations = std::max(rep.warm_max_iterations, warm.iterations);
    const double gap = std::abs(warm.distance - cold.distance);
    rep.max_gap = std::max(rep.max_gap, gap);
    if (!(gap <= kBenchAgreementTol)) ++rep.mismatches;
    prev = warm;
  }
  if (rep.steps > 0) {
    rep.cold_mean_iterations = static_cast<double>(cold_total) / rep.steps;
    rep.warm_mean_iterations = static_cast<double>(warm_total) / rep.steps;
  }
  return rep;
}

inline int cmd_bench(const BenchOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.steps < 0) throw InputError{kBadFlag, "--steps must be non-negative"};
  if (!(opt.perturbation >= 0.0) || !std::isfinite(opt.perturbation)) {
    throw InputError{kBadFlag, "--perturbation must be a non-negative number"};
  }
  const Scenario sc = resolve_scenario(opt.ref);
  const SolverConfig cfg = opt.solver.apply(sc.config());
  if (opt.warm_lambda0) {
    SolverConfig w = cfg;
    w.lambda0 = *opt.warm_lambda0;
    try {
      w.validate();
    } catch (const std::invalid_argument& e) {
      throw InputError{kBadFlag, std::string("--warm-lambda0: ") + e.what()};
    }
  }
  const BenchReport rep = run_bench(sc, cfg, opt.steps, opt.perturbation, opt.seed, opt.warm_lambda0);

  Json j;
  j["scenario"] = sc.name;
  j["steps"] = rep.steps;
  j["perturbation"] = opt.perturbation;
  j["seed"] = opt.seed;
  j["warm_lambda0"] = opt.warm_lambda0 ? *opt.warm_lambda0 : default_warm_lambda0(cfg, opt.perturbation);
  j["cold_mean_iterations"] = rep.cold_mean_iterations;
  j["warm_mean_iterations"] = rep.warm_mean_iterations;
  j["warm_max_iterations"] = rep.warm_max_iterations;
  if (!opt.no_timing) {
    j["cold_wall_s"] = rep.cold_wall_s;
    j["warm_wall_s"] = rep.warm_wall_s;
  }
  j["max_warm_cold_gap"] = rep.max_gap;
  j["mismatches"] = rep.mismatches;
  if (rep.overlap) j["overlap_at_step"] = rep.overlap_step;
  out << j.dump(2) << "\n";

  if (rep.overlap) {
    err << "perturbation drove the pair into contact at step " << rep.overlap_step << "\n";
    return kBenchOverlap;
  }
  if (rep.mismatches > 0) {
    err << rep.mismatches << " warm results differ from cold by more than " << kBenchAgreementTol << "\n";
    return kBenchMismatch;
  }
  return kOk;
}

inline int cmd_list(const std::string& export_dir, std::ostream& out, std::ostream& err) {
  const auto all = builtin_scenarios();
  if (!export_dir.empty()) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(export_dir, ec);
    for (const Scenario& s : all) {
      const fs::path p = fs::path(export_dir) / (s.name + ".json");
      std::ofstream f(p);
      if (!f) {
        err << "cannot write " << p.string() << "\n";
        return kBadFlag;
      }
      f << serialize_scenario(s);
    }
  }
  for (const Scenario& s : all) out << s.name << "\n";
  return kOk;
}

/// Runs the tool on argv-style arguments (without the program name).
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Minimum distance between two ellipsoids by surface sliding"};
  app.require_subcommand(1);

  SolveOptions so;
  std::uint64_t solve_seed = 0;
  auto* solve_cmd = app.add_subcommand("solve", "solve one scenario");
  solve_cmd->add_option("scenario", so.ref, "builtin name or scenario file")->required();
  solve_cmd->add_option("--trace", so.trace_path, "write the per-iteration trace as CSV");
  solve_cmd->add_flag("--verify", so.verify, "also run the lattice reference");
  auto* seed_opt = solve_cmd->add_option("--seed", solve_seed, "start from seeded random surface parameters");
  solve_cmd->add_flag("--json", so.json, "emit the JSON record (the default)");
  solve_cmd->add_flag("--no-timing", so.no_timing, "omit wall-clock fields");
  so.solver.attach(solve_cmd);

  SweepOptions sw;
  std::string values_csv;
  auto* sweep_cmd = app.add_subcommand("sweep", "solve a scenario over a parameter list");
  sweep_cmd->add_option("scenario", sw.ref, "builtin name or scenario file")->required();
  sweep_cmd->add_option("--param", sw.param, "swept quantity")->required()->check(CLI::IsMember({"lambda0", "init-seed"}));
  sweep_cmd->add_option("--values", values_csv, "comma-separated lambda0 values");
  sweep_cmd->add_option("--count", sw.count, "number of random starts");
  sweep_cmd->add_option("--seed", sw.seed, "seed for the random starts");
  sweep_cmd->add_flag("--no-timing", sw.no_timing, "omit wall-clock fields");
  sw.solver.attach(sweep_cmd);

  BenchOptions bo;
  auto* bench_cmd = app.add_subcommand("bench", "warm versus cold starts on a perturbed sequence");
  bench_cmd->add_option("scenario", bo.ref, "builtin name or scenario file")->required();
  bench_cmd->add_option("--steps", bo.steps, "number of perturbation steps");
  bench_cmd->add_option("--perturbation", bo.perturbation, "translation length and rotation angle per step");
  bench_cmd->add_option("--warm-lambda0", bo.warm_lambda0, "initial step for warm restarts (default 10 x perturbation)");
  bench_cmd->add_option("--seed", bo.seed, "seed for the perturbation walk");
  bench_cmd->add_flag("--no-timing", bo.no_timing, "omit wall-clock fields");
  bo.solver.attach(bench_cmd);

  std::string export_dir;
  auto* list_cmd = app.add_subcommand("list", "print builtin scenario names");
  list_cmd->add_option("--export", export_dir, "also write each builtin as DIR/<name>.json");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kBadFlag;
  }

  try {
    if (*solve_cmd) {
      if (seed_opt->count() > 0) so.seed = solve_seed;
      return cmd_solve(so, out, err);
    }
    if (*sweep_cmd) {
      std::stringstream ss(values_csv);
      for (std::string item; std::getline(ss, item, ',');) {
        try {
          std::size_t used = 0;
          sw.values.push_back(std::stod(item, &used));
          if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
          throw InputError{kBadFlag, "bad --values entry '" + item + "'"};
        }
      }
      return cmd_sweep(sw, out, err);
    }
    if (*bench_cmd) return cmd_bench(bo, out, err);
    return cmd_list(export_dir, out, err);
  } catch (const InputError& e) {
    err << e.message << "\n";
    return e.code;
  }
}

}  // namespace surfslide::cli
