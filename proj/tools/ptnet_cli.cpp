// Command-line front end: fixture scaffolding, the Lagrangian solver, the
// exhaustive oracle, MILP export, validation and report emission.
//
// Exit codes: 0 success, 2 validation failure / refusal, 3 infeasible.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ptnet/exact.hpp"
#include "ptnet/fixtures.hpp"
#include "ptnet/lagrangian.hpp"
#include "ptnet/loader.hpp"
#include "ptnet/report.hpp"
#include "ptnet/scenario.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ptnet;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitInfeasible = 3;

struct CommonOpts {
  std::string scenario_dir;
  std::string out_dir = ".";
  std::string policy;  // empty: as configured in phases.json
  double delta = -1.0;
  double rho_y = -1.0;
};

ScenarioOverrides overrides_of(const CommonOpts& c) {
  ScenarioOverrides ov;
  if (!c.policy.empty()) ov.policy_mode = c.policy;
  if (c.delta >= 0.0) ov.delta = c.delta;
  if (c.rho_y >= 0.0) ov.rho_yellow = c.rho_y;
  return ov;
}

std::optional<Scenario> load_or_complain(const CommonOpts& c) {
  ScenarioResult r = load_scenario_dir(c.scenario_dir, overrides_of(c));
  if (!r.ok()) {
    for (const auto& e : r.errors) std::cerr << "error: " << e << "\n";
    return std::nullopt;
  }
  return std::move(r.scenario);
}

void emit_config(const std::string& out_dir, const std::string& subcommand,
                 const json& args) {
  json j{{"subcommand", subcommand}, {"args", args}};
  write_file((fs::path(out_dir) / "resolved_config.json").string(),
             j.dump(2) + "\n");
}

UpdateRule rule_of(const std::string& s) {
  return s == "paper" ? UpdateRule::Monotone
                      : UpdateRule::ProjectedSubgradient;
}

int run_solve(const CommonOpts& c, int iters, double gap_tol,
              const std::string& rule, int workers, bool local_max_green) {
  auto sc = load_or_complain(c);
  if (!sc) return kExitValidation;
  fs::create_directories(c.out_dir);
  emit_config(c.out_dir, "solve",
              json{{"scenario", c.scenario_dir},
                   {"policy", c.policy.empty() ? "(from phases.json)" : c.policy},
                   {"iters", iters},
                   {"gap_tol", gap_tol},
                   {"rule", rule},
                   {"workers", workers},
                   {"local_max_green", local_max_green},
                   {"delta", sc->doc.delta},
                   {"rho_yellow", sc->doc.rho_yellow},
                   {"out", c.out_dir}});

  SolveConfig cfg;
  cfg.max_iter = iters;
  cfg.gap_tol = gap_tol;
  cfg.rule = rule_of(rule);
  cfg.workers = workers;
  cfg.max_green = local_max_green ? MaxGreenMode::Enforce : MaxGreenMode::Ignore;
  SolveResult res = solve(*sc, cfg);

  write_file((fs::path(c.out_dir) / "history.csv").string(),
             history_csv(res.history));
  if (!res.has_solution) {
    std::cerr << "infeasible: no iteration produced a feasible loading\n";
    return kExitInfeasible;
  }
  write_file((fs::path(c.out_dir) / "plan.json").string(),
             plan_json(res.best_plan, sc->pset));
  write_file((fs::path(c.out_dir) / "trajectories.csv").string(),
             trajectories_csv(res.best_traj, sc->net, sc->vehicles));
  write_file((fs::path(c.out_dir) / "moe.json").string(),
             moe_json(res.best_moe));
  std::cout << "best objective " << res.best_moe.objective << " (delay "
            << res.best_moe.total_delay << " + " << res.best_moe.transitions
            << " transitions), best LB " << res.max_lb << ", iterations "
            << res.history.size() << "\n";
  return 0;
}

int run_oracle(const CommonOpts& c, int horizon, OracleLimits limits) {
  auto sc = load_or_complain(c);
  if (!sc) return kExitValidation;
  fs::create_directories(c.out_dir);
  if (horizon <= 0) horizon = sc->net.horizon;
  emit_config(c.out_dir, "oracle",
              json{{"scenario", c.scenario_dir},
                   {"policy", c.policy.empty() ? "(from phases.json)" : c.policy},
                   {"horizon", horizon},
                   {"max_phases", limits.max_phases},
                   {"max_horizon", limits.max_horizon},
                   {"max_vehicles", limits.max_vehicles},
                   {"node_cap", limits.node_cap},
                   {"out", c.out_dir}});
  OracleResult r = brute_force_optimum(*sc, horizon, limits);
  write_file((fs::path(c.out_dir) / "oracle.json").string(), oracle_json(r));
  if (r.status == OracleResult::Status::Ok)
    write_file((fs::path(c.out_dir) / "plan.json").string(),
               plan_json(r.plan, sc->pset));
  std::cout << oracle_json(r);
  if (r.status == OracleResult::Status::Refused) return kExitValidation;
  if (r.status == OracleResult::Status::Infeasible) return kExitInfeasible;
  return 0;
}

int run_export(const CommonOpts& c, int horizon, long long var_cap) {
  auto sc = load_or_complain(c);
  if (!sc) return kExitValidation;
  fs::create_directories(c.out_dir);
  if (horizon <= 0) horizon = sc->net.horizon;
  emit_config(c.out_dir, "export-milp",
              json{{"scenario", c.scenario_dir},
                   {"horizon", horizon},
                   {"var_cap", var_cap},
                   {"out", c.out_dir}});
  MilpBuild b = build_milp(*sc, horizon, var_cap);
  if (!b.ok) {
    std::cerr << "refused: " << b.refusal << "\n";
    return kExitValidation;
  }
  write_file((fs::path(c.out_dir) / "model.lp").string(),
             to_lp_text(b.instance));
  MilpCounts counts = b.instance.counts();
  write_file((fs::path(c.out_dir) / "counts.json").string(),
             counts_json(counts));
  std::cout << "exported " << counts.rows << " rows, " << counts.cols
            << " cols, " << counts.nonzeros << " nonzeros\n";
  return 0;
}

int run_validate(const CommonOpts& c, const std::string& plan_file,
                 const std::string& traj_file) {
  ScenarioResult r = load_scenario_dir(c.scenario_dir, overrides_of(c));
  if (!r.ok()) {
    for (const auto& e : r.errors) std::cerr << "error: " << e << "\n";
    return kExitValidation;
  }
  Scenario& sc = *r.scenario;
  // Transition counts under the configured policy and, for comparison, the
  // fully adaptive rule.
  long long policy_pairs = 0;
  for (const auto& succ : sc.pgraph.succ) policy_pairs += succ.size();
  long long n = static_cast<long long>(sc.pset.phases.size());
  std::cout << "scenario ok: " << sc.net.nodes.size() << " nodes, "
            << sc.net.links.size() << " links (" << sc.map.n_ctrl()
            << " controlled), " << sc.vehicles.size() << " vehicles, "
            << sc.pset.phases.size() << " generalized phases, "
            << policy_pairs << " feasible transitions (fully adaptive: "
            << n * (n - 1) << ")\n";
  for (const auto& d : sc.pset.dropped) std::cout << "warning: " << d << "\n";
  if (plan_file.empty() || traj_file.empty()) return 0;
  SignalPlan plan = parse_plan_json(read_file_or_throw(plan_file), sc.pset);
  TrajectorySet traj = parse_trajectories_csv(read_file_or_throw(traj_file),
                                              sc.net, sc.vehicles);
  auto violations = validate_feasible(traj, plan, sc.net, sc.aux, sc.map,
                                      sc.factors, sc.vehicles);
  for (const auto& v : violations)
    std::cout << "violation " << v.constraint << " link=" << v.link
              << " t=" << v.t << " " << v.detail << "\n";
  std::cout << violations.size() << " violations\n";
  return violations.empty() ? 0 : kExitValidation;
}

int run_moe(const CommonOpts& c, const std::string& plan_file,
            const std::string& traj_file, bool dump_gamma) {
  auto sc = load_or_complain(c);
  if (!sc) return kExitValidation;
  fs::create_directories(c.out_dir);
  SignalPlan plan = parse_plan_json(read_file_or_throw(plan_file), sc->pset);
  TrajectorySet traj = parse_trajectories_csv(read_file_or_throw(traj_file),
                                              sc->net, sc->vehicles);
  emit_config(c.out_dir, "moe",
              json{{"scenario", c.scenario_dir},
                   {"plan", plan_file},
                   {"trajectories", traj_file},
                   {"dump_gamma", dump_gamma},
                   {"out", c.out_dir}});
  MoeReport moe = compute_moe(traj, plan, sc->net, sc->map, sc->vehicles,
                              sc->aux);
  write_file((fs::path(c.out_dir) / "moe.json").string(), moe_json(moe));
  if (dump_gamma)
    write_file((fs::path(c.out_dir) / "gamma.csv").string(),
               gamma_csv(plan_to_gamma(plan, sc->map, sc->net, sc->factors),
                         sc->net));
  for (const auto& d : time_space_diagrams(*sc, plan, traj)) {
    write_file((fs::path(c.out_dir) / ("tsd_" + d.key + ".svg")).string(),
               d.svg);
    write_file((fs::path(c.out_dir) / ("tsd_" + d.key + ".csv")).string(),
               d.csv);
  }
  std::cout << moe_json(moe);
  return 0;
}

int run_bench(const CommonOpts& c, std::vector<int> workers, int iters,
              int repeats) {
  auto sc = load_or_complain(c);
  if (!sc) return kExitValidation;
  fs::create_directories(c.out_dir);
  emit_config(c.out_dir, "bench",
              json{{"scenario", c.scenario_dir},
                   {"workers", workers},
                   {"iters", iters},
                   {"repeats", repeats},
                   {"out", c.out_dir}});
  std::ostringstream csv;
  csv << "workers,iterations,mean_ms_per_iter,content_hash\n";
  std::string reference;
  bool identical = true;
  for (int w : workers) {
    double best_mean = 0.0;
    std::string content;
    for (int rep = 0; rep < repeats; ++rep) {
      SolveConfig cfg;
      cfg.max_iter = iters;
      cfg.gap_tol = 0.0;  // run the full budget for stable timing
      cfg.workers = w;
      auto t0 = std::chrono::steady_clock::now();
      SolveResult res = solve(*sc, cfg);
      auto t1 = std::chrono::steady_clock::now();
      double mean =
          std::chrono::duration<double, std::milli>(t1 - t0).count() /
          std::max<size_t>(1, res.history.size());
      if (rep == 0 || mean < best_mean) best_mean = mean;
      content = history_content(res.history);
    }
    size_t hash = std::hash<std::string>{}(content);
    if (reference.empty())
      reference = content;
    else if (content != reference)
      identical = false;
    csv << w << "," << iters << "," << best_mean << "," << hash << "\n";
  }
  write_file((fs::path(c.out_dir) / "bench.csv").string(), csv.str());
  std::cout << csv.str();
  std::cout << (identical ? "histories identical across worker counts\n"
                          : "HISTORY MISMATCH across worker counts\n");
  return identical ? 0 : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Centralized adaptive signal control over vehicle path flows"};
  app.require_subcommand(1);

  // scaffold
  auto* scaffold = app.add_subcommand("scaffold", "write a bundled fixture");
  std::string fixture_name, scaffold_out = ".";
  scaffold->add_option("name", fixture_name, "fixture name")->required();
  scaffold->add_option("--out", scaffold_out, "output directory");

  // common options helper
  auto add_common = [](CLI::App* cmd, CommonOpts& c, bool needs_out = true) {
    cmd->add_option("--scenario", c.scenario_dir, "scenario directory")
        ->required();
    if (needs_out) cmd->add_option("--out", c.out_dir, "output directory");
    cmd->add_option("--policy", c.policy, "full|semi|groups (override)");
    cmd->add_option("--delta", c.delta, "permissive capacity factor");
    cmd->add_option("--rho-y", c.rho_y, "yellow capacity factor");
  };

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Lagrangian decomposition solver");
  CommonOpts solve_c;
  int iters = 200, workers = 1;
  double gap_tol = 0.01;
  std::string rule = "projected";
  bool local_max_green = false;
  add_common(solve_cmd, solve_c);
  solve_cmd->add_option("--iters", iters, "max iterations");
  solve_cmd->add_option("--gap-tol", gap_tol, "relative LB/UB gap tolerance");
  solve_cmd->add_option("--rule", rule, "paper|projected multiplier update");
  solve_cmd->add_option("--workers", workers, "worker threads");
  solve_cmd->add_flag("--local-max-green", local_max_green,
                      "enforce local maximum greens in the plan search");

  // oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "exhaustive optimum search");
  CommonOpts oracle_c;
  int oracle_h = 0;
  OracleLimits limits;
  add_common(oracle_cmd, oracle_c);
  oracle_cmd->add_option("--horizon", oracle_h, "search horizon (default: scenario H)");
  oracle_cmd->add_option("--max-phases", limits.max_phases, "phase limit");
  oracle_cmd->add_option("--max-horizon", limits.max_horizon, "horizon limit");
  oracle_cmd->add_option("--max-vehicles", limits.max_vehicles, "vehicle limit");
  oracle_cmd->add_option("--node-cap", limits.node_cap, "search node cap");

  // export-milp
  auto* export_cmd = app.add_subcommand("export-milp", "LP-format model export");
  CommonOpts export_c;
  int export_h = 0;
  long long var_cap = 2'000'000;
  add_common(export_cmd, export_c);
  export_cmd->add_option("--horizon", export_h, "model horizon (default: scenario H)");
  export_cmd->add_option("--var-cap", var_cap, "refuse beyond this variable count");

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "scenario / solution checks");
  CommonOpts validate_c;
  std::string v_plan, v_traj;
  add_common(validate_cmd, validate_c, false);
  validate_cmd->add_option("--plan", v_plan, "plan.json to check");
  validate_cmd->add_option("--trajectories", v_traj, "trajectories.csv to check");

  // moe
  auto* moe_cmd = app.add_subcommand("moe", "MOE + time-space diagram reports");
  CommonOpts moe_c;
  std::string m_plan, m_traj;
  bool dump_gamma = false;
  add_common(moe_cmd, moe_c);
  moe_cmd->add_option("--plan", m_plan, "plan.json")->required();
  moe_cmd->add_option("--trajectories", m_traj, "trajectories.csv")->required();
  moe_cmd->add_flag("--dump-gamma", dump_gamma, "also write gamma.csv");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "worker-count timing sweep");
  CommonOpts bench_c;
  std::vector<int> bench_workers{1, 2, 4, 8};
  int bench_iters = 30, bench_repeats = 3;
  add_common(bench_cmd, bench_c);
  bench_cmd->add_option("--workers", bench_workers, "worker counts to sweep");
  bench_cmd->add_option("--iters", bench_iters, "iterations per run");
  bench_cmd->add_option("--repeats", bench_repeats, "repeats (best mean kept)");

  // replay a resolved_config.json
  auto* replay_cmd = app.add_subcommand("replay", "re-run from a resolved_config.json");
  std::string config_file;
  replay_cmd->add_option("config", config_file, "resolved_config.json path")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (scaffold->parsed()) {
      scaffold_fixture(fixture_name, scaffold_out);
      emit_config(scaffold_out, "scaffold",
                  json{{"name", fixture_name}, {"out", scaffold_out}});
      std::cout << "wrote fixture " << fixture_name << " to " << scaffold_out
                << "\n";
      return 0;
    }
    if (solve_cmd->parsed())
      return run_solve(solve_c, iters, gap_tol, rule, workers, local_max_green);
    if (oracle_cmd->parsed()) return run_oracle(oracle_c, oracle_h, limits);
    if (export_cmd->parsed()) return run_export(export_c, export_h, var_cap);
    if (validate_cmd->parsed()) return run_validate(validate_c, v_plan, v_traj);
    if (moe_cmd->parsed()) return run_moe(moe_c, m_plan, m_traj, dump_gamma);
    if (bench_cmd->parsed())
      return run_bench(bench_c, bench_workers, bench_iters, bench_repeats);
    if (replay_cmd->parsed()) {
      json j = json::parse(read_file_or_throw(config_file));
      std::string sub = j.value("subcommand", "");
      json a = j.value("args", json::object());
      CommonOpts c;
      c.scenario_dir = a.value("scenario", "");
      c.out_dir = a.value("out", ".");
      std::string pol = a.value("policy", "");
      if (!pol.empty() && pol[0] != '(') c.policy = pol;
      if (sub == "solve")
        return run_solve(c, a.value("iters", 200), a.value("gap_tol", 0.01),
                         a.value("rule", "projected"), a.value("workers", 1),
                         a.value("local_max_green", false));
      if (sub == "oracle") {
        OracleLimits lim;
        lim.max_phases = a.value("max_phases", lim.max_phases);
        lim.max_horizon = a.value("max_horizon", lim.max_horizon);
        lim.max_vehicles = a.value("max_vehicles", lim.max_vehicles);
        lim.node_cap = a.value("node_cap", lim.node_cap);
        return run_oracle(c, a.value("horizon", 0), lim);
      }
      if (sub == "export-milp")
        return run_export(c, a.value("horizon", 0),
                          a.value("var_cap", 2'000'000LL));
      if (sub == "moe")
        return run_moe(c, a.value("plan", ""), a.value("trajectories", ""),
                       a.value("dump_gamma", false));
      if (sub == "bench")
        return run_bench(c, a.value("workers", std::vector<int>{1}),
                         a.value("iters", 30), a.value("repeats", 3));
      if (sub == "scaffold") {
        scaffold_fixture(a.value("name", ""), a.value("out", "."));
        return 0;
      }
      std::cerr << "error: config names unknown subcommand '" << sub << "'\n";
      return kExitValidation;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
