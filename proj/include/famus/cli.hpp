#pragma once

// Command line front end.
//
//   famus run           one simulation, emits stream CSV + summary JSON
//   famus sweep         grid of runs aggregated into a plot-ready CSV
//   famus validate      checks a config file and/or a contract menu file
//   famus oracle-check  cross-checks solvers against brute-force oracles
//
// Output files land in --out, else $FAMUS_OUT_DIR, else ./out. Existing
// files are never overwritten unless --force is passed.

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "famus/config.hpp"
#include "famus/contract.hpp"
#include "famus/controller.hpp"
#include "famus/engine.hpp"
#include "famus/io.hpp"
#include "famus/oracle.hpp"
#include "famus/sweep.hpp"

namespace famus {

inline std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("FAMUS_OUT_DIR"); env && *env)
    return std::filesystem::path(env);
  return std::filesystem::path("out");
}

namespace cli_detail {

struct RunOptions {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string policy;
  bool force = false;
};

inline int do_run(const RunOptions& opt) {
  SimConfig cfg = SimConfig::load(opt.config);
  if (opt.seed) cfg.seed = *opt.seed;
  if (!opt.policy.empty()) cfg.policy = opt.policy;
  Simulation sim(cfg);

  const std::filesystem::path dir =
      opt.out.empty() ? default_out_dir() : std::filesystem::path(opt.out);
  const std::string stem =
      cfg.policy + "-seed" + std::to_string(cfg.seed);
  const std::filesystem::path stream_path = dir / (stem + ".csv");
  const std::filesystem::path summary_path = dir / (stem + ".summary.json");
  ensure_output_file(summary_path, opt.force);  // fail before the run, not after

  StreamCsvWriter writer(stream_path, cfg, opt.force);
  const RunSummary sum = sim.run([&](const SlotRow& r) { writer.write(r); });
  writer.close();
  write_summary_json(summary_path, cfg, sum, true);

  std::cout << "wrote " << stream_path.string() << "\n";
  std::cout << "wrote " << summary_path.string() << "\n";
  std::cout << "policy=" << cfg.policy << " seed=" << cfg.seed
            << " cost=" << format_double(sum.time_avg_cost)
            << " al=" << format_double(sum.time_avg_al)
            << " jfi=" << format_double(sum.jfi)
            << " max_queue_slope=" << format_double(sum.max_queue_slope)
            << "\n";
  return 0;
}

struct SweepOptions {
  std::string config;
  std::string out;
  std::string axis;
  std::vector<double> values;
  int seeds = 1;
  std::vector<std::string> policies;
  bool force = false;
};

inline int do_sweep(const SweepOptions& opt) {
  SimConfig cfg = SimConfig::load(opt.config);
  const SweepAxis axis = parse_axis(opt.axis);
  std::vector<std::string> policies = opt.policies;
  if (policies.empty())
    policies.assign(kPolicyNames, kPolicyNames + 6);

  const std::filesystem::path dir =
      opt.out.empty() ? default_out_dir() : std::filesystem::path(opt.out);
  const std::filesystem::path path =
      dir / (std::string("sweep-") + axis_name(axis) + ".csv");
  ensure_output_file(path, opt.force);

  const std::vector<SweepPoint> points =
      run_sweep(cfg, axis, opt.values, policies, opt.seeds);
  write_sweep_csv(path, axis, points, true);

  for (const SweepPoint& p : points)
    std::cout << axis_name(axis) << '=' << format_double(p.value)
              << " policy=" << p.policy
              << " cost=" << format_double(p.cost_mean) << "(se "
              << format_double(p.cost_se) << ")"
              << " al=" << format_double(p.al_mean) << "(se "
              << format_double(p.al_se) << ")"
              << " jfi=" << format_double(p.jfi_mean) << "\n";
  std::cout << "wrote " << path.string() << " (" << points.size()
            << " points)\n";
  return 0;
}

struct ValidateOptions {
  std::string config;
  std::string menu;
};

inline ContractMenu load_menu(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open menu file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("menu file " + path + ": " + e.what());
  }
  if (!j.contains("type_values") || !j.contains("items"))
    throw std::runtime_error(
        "menu file needs \"type_values\" and \"items\" arrays");
  TypeGrid grid(j.at("type_values").get<std::vector<double>>());
  std::vector<ContractItem> items;
  for (const nlohmann::json& it : j.at("items")) {
    ContractItem item;
    item.participation = it.at("participation").get<double>();
    item.reward = it.at("reward").get<double>();
    items.push_back(item);
  }
  return ContractMenu{std::move(grid), std::move(items)};
}

inline int do_validate(const ValidateOptions& opt) {
  bool all_ok = true;
  if (opt.config.empty() && opt.menu.empty()) {
    std::cerr << "validate: pass --config and/or --menu\n";
    return 1;
  }
  if (!opt.config.empty()) {
    const SimConfig cfg = SimConfig::load(opt.config);
    const std::vector<std::string> errors = cfg.validate();
    if (errors.empty()) {
      std::cout << "config " << opt.config << ": ok\n";
    } else {
      all_ok = false;
      std::cout << "config " << opt.config << ": " << errors.size()
                << " problem(s)\n";
      for (const std::string& e : errors) std::cout << "  - " << e << "\n";
    }
  }
  if (!opt.menu.empty()) {
    const ContractMenu menu = load_menu(opt.menu);
    std::cout << "menu " << opt.menu << ": " << menu.grid.size()
              << " level(s)\n";
    const FeasibilityReport feas = check_feasible(menu);
    if (feas.ok) {
      std::cout << "  implementability: ok\n";
    } else {
      all_ok = false;
      std::cout << "  implementability: violated (" << feas.violation
                << ")\n";
    }
    const IcIrReport icir = verify_ic_ir(menu);
    if (icir.ok) {
      std::cout << "  ic/ir: ok\n";
    } else {
      all_ok = false;
      std::cout << "  ic/ir: violated (" << icir.violation << ")\n";
    }
  }
  return all_ok ? 0 : 1;
}

struct OracleOptions {
  int trials = 200;
  std::int64_t slots = 300;
  std::uint64_t seed = 1;
  bool faulty = false;
};

inline void print_report(const char* name, const oracle::CheckReport& r,
                         bool& all_ok) {
  if (r.ok()) {
    std::cout << "[ ok ] " << name << ": " << r.trials << " trial(s)\n";
  } else {
    all_ok = false;
    std::cout << "[FAIL] " << name << ": " << r.failures << "/" << r.trials
              << " trial(s) failed\n";
    for (const std::string& m : r.messages)
      std::cout << "       " << m << "\n";
  }
}

inline int do_oracle_check(const OracleOptions& opt) {
  bool all_ok = true;
  if (opt.trials == 0)
    std::cout << "warning: 0 trials requested, solver oracles pass "
                 "vacuously\n";

  const auto production_solver = [](const std::vector<SubsetCandidate>& c,
                                    double v_mu_a,
                                    const AccuracyLossParams& al,
                                    int exact_max) {
    return solve_client_subset(c, v_mu_a, al, exact_max);
  };
  // Deliberately wrong solver: recruits every candidate, so any instance
  // whose optimum excludes someone exposes the mismatch. Demonstrates that
  // the oracle actually detects bad solvers.
  const auto take_all_solver = [](const std::vector<SubsetCandidate>& c,
                                  double v_mu_a,
                                  const AccuracyLossParams& al,
                                  int) {
    SelectionDecision d;
    for (const SubsetCandidate& cand : c) {
      if (cand.weight <= 0.0) continue;
      d.clients.push_back(cand.client);
      d.mass += cand.weight;
      d.price += cand.price;
    }
    d.objective = v_mu_a * accuracy_loss(d.mass, al) + d.price;
    return d;
  };

  oracle::CheckReport subset_report;
  if (opt.faulty)
    subset_report = oracle::check_subset_solver(opt.trials, 12, opt.seed,
                                                1e-9, take_all_solver);
  else
    subset_report = oracle::check_subset_solver(opt.trials, 12, opt.seed,
                                                1e-9, production_solver);
  print_report("client subset solver", subset_report, all_ok);

  const auto delegate = [](const std::vector<ServerObjective>& objectives,
                           const std::vector<double>& queues, int tasks,
                           bool forced) {
    return delegate_famus(objectives, queues, tasks, forced);
  };
  print_report("task delegation",
               oracle::check_delegation(opt.trials, 8, opt.seed + 1, delegate),
               all_ok);

  print_report(
      "contract construction",
      oracle::check_optimal_contracts(opt.trials, 60, opt.seed + 2), all_ok);

  // Drift bound on short runs of every policy.
  if (opt.slots == 0) {
    std::cout << "warning: 0 slots requested, drift oracle passes "
                 "vacuously\n";
    std::cout << "[ ok ] queue drift bound: 0 slot(s)\n";
  } else {
    SimConfig cfg;
    cfg.servers = 6;
    cfg.clients = 40;
    cfg.tasks = 3;
    cfg.type_levels = 8;
    cfg.warmup_slots = 30;
    cfg.horizon_slots = 30 + opt.slots;
    cfg.seed = opt.seed;
    bool drift_ok = true;
    double worst = -std::numeric_limits<double>::infinity();
    std::string worst_policy;
    for (const char* policy : kPolicyNames) {
      cfg.policy = policy;
      Simulation sim(cfg);
      const RunSummary sum = sim.run();
      if (sum.drift_max_violation > worst) {
        worst = sum.drift_max_violation;
        worst_policy = policy;
      }
      if (sum.drift_max_violation > 1e-9) drift_ok = false;
    }
    if (drift_ok) {
      std::cout << "[ ok ] queue drift bound: 6 policies x " << opt.slots
                << " slot(s), max slack violation "
                << format_double(worst) << "\n";
    } else {
      all_ok = false;
      std::cout << "[FAIL] queue drift bound: policy " << worst_policy
                << " violated the bound by " << format_double(worst) << "\n";
    }
  }

  std::cout << (all_ok ? "all oracles passed\n" : "oracle failures detected\n");
  return all_ok ? 0 : 1;
}

}  // namespace cli_detail

inline int cli_main(int argc, char** argv) {
  CLI::App app{"time-slotted simulator of contract-incentivized federated "
               "task delegation"};
  app.require_subcommand(1);

  cli_detail::RunOptions run_opt;
  CLI::App* run = app.add_subcommand("run", "run one simulation");
  run->add_option("--config", run_opt.config, "config JSON file")
      ->required();
  run->add_option("--out", run_opt.out,
                  "output directory (default $FAMUS_OUT_DIR or ./out)");
  run->add_option("--seed", run_opt.seed, "override the config seed");
  run->add_option("--policy", run_opt.policy,
                  "override the config policy (famus|random|greedy|ncf|ea|"
                  "fixed)");
  run->add_flag("--force", run_opt.force, "overwrite existing output files");

  cli_detail::SweepOptions sweep_opt;
  CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep");
  sweep->add_option("--config", sweep_opt.config, "config JSON file")
      ->required();
  sweep->add_option("--axis", sweep_opt.axis,
                    "swept field: clients|M, servers|N, gamma|type_levels, "
                    "v|balance_v")
      ->required();
  sweep->add_option("--values", sweep_opt.values, "axis values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--seeds", sweep_opt.seeds,
                    "seeds per point, starting at the config seed")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--policy", sweep_opt.policies,
                    "policies to sweep (repeatable; default all)")
      ->delimiter(',');
  sweep->add_option("--out", sweep_opt.out,
                    "output directory (default $FAMUS_OUT_DIR or ./out)");
  sweep->add_flag("--force", sweep_opt.force,
                  "overwrite existing output files");

  cli_detail::ValidateOptions val_opt;
  CLI::App* validate =
      app.add_subcommand("validate", "check a config and/or a contract menu");
  validate->add_option("--config", val_opt.config, "config JSON file");
  validate->add_option("--menu", val_opt.menu,
                       "contract menu JSON file (type_values + items)");

  cli_detail::OracleOptions oracle_opt;
  CLI::App* oracle = app.add_subcommand(
      "oracle-check", "cross-check solvers against brute-force oracles");
  oracle->add_option("--trials", oracle_opt.trials,
                     "random instances per solver oracle")
      ->check(CLI::NonNegativeNumber);
  oracle->add_option("--slots", oracle_opt.slots,
                     "measured slots for the drift-bound oracle")
      ->check(CLI::NonNegativeNumber);
  oracle->add_option("--seed", oracle_opt.seed, "oracle RNG seed");
  oracle->add_flag("--faulty", oracle_opt.faulty,
                   "swap in a deliberately wrong subset solver (the oracle "
                   "must flag it)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) return cli_detail::do_run(run_opt);
    if (sweep->parsed()) return cli_detail::do_sweep(sweep_opt);
    if (validate->parsed()) return cli_detail::do_validate(val_opt);
    if (oracle->parsed()) return cli_detail::do_oracle_check(oracle_opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace famus
