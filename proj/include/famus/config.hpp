#pragma once

// Run configuration. One JSON file describes a complete experiment; unknown
// keys are rejected so typos fail loudly, and validate() reports every broken
// invariant at once instead of stopping at the first.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "famus/channel.hpp"
#include "famus/geometry.hpp"
#include "famus/mobility.hpp"

namespace famus {

struct ValueRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct AreaConfig {
  double width = 100.0;
  double height = 200.0;
  int cols = 0;  // 0 = tile automatically from the server count
  int rows = 0;
};

inline constexpr const char* kPolicyNames[] = {"famus",  "random", "greedy",
                                               "ncf",    "ea",     "fixed"};
inline constexpr const char* kScenarioPeriodic = "periodic-contract";
inline constexpr const char* kScenarioUniform = "uniform-contract";

struct SimConfig {
  int servers = 10;
  int clients = 200;
  int tasks = 8;        // K, tasks per release
  int type_levels = 20; // Gamma
  double balance_v = 10.0;
  double mu_accuracy = 0.1;
  double mu_payment = 0.9;
  double tau = 1.0;           // seconds per task period
  double slot_seconds = 0.1;  // seconds per slot
  std::int64_t horizon_slots = 2050;  // total slots, warm-up included
  std::int64_t warmup_slots = 50;
  std::uint64_t seed = 1;
  std::string policy = "famus";
  std::string scenario = kScenarioPeriodic;
  bool force_assign_all = true;
  double top_quantile = 0.95;  // warm-up quantile anchoring the top type
  double server_fee = 1.0;     // h^n, uniform across servers
  int subset_exact_max = 16;
  double data_unit_mb = 100.0;  // data mass unit for costs and accuracy loss
  // Derived unless set explicitly.
  std::optional<double> epsilon;   // default tasks / servers
  std::optional<double> sigma0;    // default exp(-1/servers)
  std::optional<double> al_max;    // default 1 + slot/tau
  AreaConfig area;
  LinkParams link;
  MobilityParams mobility;
  ValueRange alpha_range{0.5e-3, 1.5e-3};
  ValueRange beta_range{1.0e-3, 3.0e-3};
  ValueRange data_size_mb{100.0, 200.0};

  int period_slots() const {
    return static_cast<int>(std::llround(tau / slot_seconds));
  }
  double epsilon_value() const {
    return epsilon ? *epsilon
                   : static_cast<double>(tasks) / static_cast<double>(servers);
  }
  double sigma0_value() const {
    return sigma0 ? *sigma0 : std::exp(-1.0 / static_cast<double>(servers));
  }
  double al_max_value() const {
    return al_max ? *al_max : 1.0 + slot_seconds / tau;
  }
  Area make_area() const {
    if (area.cols > 0 && area.rows > 0)
      return Area(area.width, area.height, area.cols, area.rows);
    return Area::tiled(area.width, area.height, servers);
  }

  std::vector<std::string> validate() const;
  static SimConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  static SimConfig load(const std::string& path);
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j,
                                std::initializer_list<const char*> known,
                                const std::string& where) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::invalid_argument("config: unknown key \"" + item.key() +
                                  "\" in " + where);
  }
}

inline ValueRange range_from_json(const nlohmann::json& j,
                                  const std::string& name) {
  if (!j.is_array() || j.size() != 2)
    throw std::invalid_argument("config: " + name +
                                " must be a [lo, hi] array");
  return ValueRange{j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline std::vector<std::string> SimConfig::validate() const {
  std::vector<std::string> errors;
  const auto fail = [&errors](const std::string& msg) {
    errors.push_back(msg);
  };

  if (servers < 1) fail("servers must be >= 1");
  if (clients < 0) fail("clients must be >= 0");
  if (tasks < 1) fail("tasks must be >= 1");
  if (tasks > servers) fail("tasks must not exceed servers (K <= N)");
  if (type_levels < 1) fail("type_levels must be >= 1");
  if (balance_v < 0.0) fail("balance_v must be >= 0");
  if (mu_accuracy < 0.0) fail("mu_accuracy must be >= 0");
  if (mu_payment < 0.0) fail("mu_payment must be >= 0");
  if (!(tau > 0.0)) fail("tau must be > 0");
  if (!(slot_seconds > 0.0)) fail("slot_seconds must be > 0");
  if (tau > 0.0 && slot_seconds > 0.0) {
    const double periods = tau / slot_seconds;
    const double rounded = std::llround(periods);
    if (rounded < 1.0 || std::abs(periods - rounded) > 1e-9 * periods)
      fail("slot_seconds must divide tau into a whole number of slots");
  }
  if (warmup_slots < 0) fail("warmup_slots must be >= 0");
  if (horizon_slots < warmup_slots)
    fail("horizon_slots must be >= warmup_slots");
  {
    bool known = false;
    for (const char* name : kPolicyNames)
      if (policy == name) known = true;
    if (!known) fail("unknown policy \"" + policy + "\"");
  }
  if (scenario != kScenarioPeriodic && scenario != kScenarioUniform)
    fail("scenario must be \"" + std::string(kScenarioPeriodic) + "\" or \"" +
         std::string(kScenarioUniform) + "\"");
  if (!(top_quantile > 0.0) || top_quantile > 1.0)
    fail("top_quantile must lie in (0, 1]");
  if (server_fee < 0.0) fail("server_fee must be >= 0");
  if (subset_exact_max < 0) fail("subset_exact_max must be >= 0");
  if (subset_exact_max > 25) fail("subset_exact_max must be <= 25");
  if (!(data_unit_mb > 0.0)) fail("data_unit_mb must be > 0");
  if (epsilon && (*epsilon < 0.0 || *epsilon > 1.0))
    fail("epsilon must lie in [0, 1]");
  if (sigma0 && (*sigma0 <= 0.0 || *sigma0 >= 1.0))
    fail("sigma0 must lie in (0, 1)");
  if (al_max && !(*al_max > 0.0)) fail("al_max must be > 0");
  if (!(area.width > 0.0) || !(area.height > 0.0))
    fail("area dimensions must be > 0");
  if ((area.cols > 0) != (area.rows > 0))
    fail("area cols and rows must be set together (or both omitted)");
  if (area.cols > 0 && area.rows > 0 && area.cols * area.rows != servers)
    fail("area cols * rows must equal servers");
  if (!(link.bandwidth_hz > 0.0)) fail("link.bandwidth_hz must be > 0");
  if (!(link.tx_power_w > 0.0)) fail("link.tx_power_w must be > 0");
  if (!(link.noise_psd_w_hz > 0.0)) fail("link.noise_psd_w_hz must be > 0");
  if (!(link.pathloss_exponent > 0.0))
    fail("link.pathloss_exponent must be > 0");
  if (!(link.ref_gain > 0.0)) fail("link.ref_gain must be > 0");
  if (!(link.min_distance_m > 0.0)) fail("link.min_distance_m must be > 0");
  if (mobility.memory < 0.0 || mobility.memory > 1.0)
    fail("mobility.memory must lie in [0, 1]");
  if (mobility.mean_speed < 0.0) fail("mobility.mean_speed must be >= 0");
  if (mobility.perturb_std < 0.0) fail("mobility.perturb_std must be >= 0");
  if (alpha_range.lo < 0.0 || alpha_range.hi < alpha_range.lo)
    fail("alpha_range must satisfy 0 <= lo <= hi");
  if (!(beta_range.lo > 0.0) || beta_range.hi < beta_range.lo)
    fail("beta_range must satisfy 0 < lo <= hi");
  if (!(data_size_mb.lo > 0.0) || data_size_mb.hi < data_size_mb.lo)
    fail("data_size_mb must satisfy 0 < lo <= hi");
  return errors;
}

inline SimConfig SimConfig::from_json(const nlohmann::json& j) {
  detail::reject_unknown_keys(
      j,
      {"servers", "clients", "tasks", "type_levels", "balance_v",
       "mu_accuracy", "mu_payment", "tau_seconds", "slot_seconds",
       "horizon_slots", "warmup_slots", "seed", "policy", "scenario",
       "force_assign_all", "top_quantile", "server_fee", "subset_exact_max",
       "data_unit_mb", "epsilon", "sigma0", "al_max", "area", "link",
       "mobility", "alpha_range", "beta_range", "data_size_mb"},
      "config root");

  SimConfig c;
  c.servers = j.value("servers", c.servers);
  c.clients = j.value("clients", c.clients);
  c.tasks = j.value("tasks", c.tasks);
  c.type_levels = j.value("type_levels", c.type_levels);
  c.balance_v = j.value("balance_v", c.balance_v);
  c.mu_accuracy = j.value("mu_accuracy", c.mu_accuracy);
  c.mu_payment = j.value("mu_payment", c.mu_payment);
  c.tau = j.value("tau_seconds", c.tau);
  c.slot_seconds = j.value("slot_seconds", c.slot_seconds);
  c.horizon_slots = j.value("horizon_slots", c.horizon_slots);
  c.warmup_slots = j.value("warmup_slots", c.warmup_slots);
  c.seed = j.value("seed", c.seed);
  c.policy = j.value("policy", c.policy);
  c.scenario = j.value("scenario", c.scenario);
  c.force_assign_all = j.value("force_assign_all", c.force_assign_all);
  c.top_quantile = j.value("top_quantile", c.top_quantile);
  c.server_fee = j.value("server_fee", c.server_fee);
  c.subset_exact_max = j.value("subset_exact_max", c.subset_exact_max);
  c.data_unit_mb = j.value("data_unit_mb", c.data_unit_mb);
  if (j.contains("epsilon") && !j["epsilon"].is_null())
    c.epsilon = j["epsilon"].get<double>();
  if (j.contains("sigma0") && !j["sigma0"].is_null())
    c.sigma0 = j["sigma0"].get<double>();
  if (j.contains("al_max") && !j["al_max"].is_null())
    c.al_max = j["al_max"].get<double>();
  if (j.contains("area")) {
    const auto& a = j["area"];
    detail::reject_unknown_keys(a, {"width", "height", "cols", "rows"},
                                "area");
    c.area.width = a.value("width", c.area.width);
    c.area.height = a.value("height", c.area.height);
    c.area.cols = a.value("cols", c.area.cols);
    c.area.rows = a.value("rows", c.area.rows);
  }
  if (j.contains("link")) {
    const auto& l = j["link"];
    detail::reject_unknown_keys(
        l,
        {"bandwidth_hz", "tx_power_w", "noise_psd_w_hz", "pathloss_exponent",
         "ref_gain", "min_distance_m"},
        "link");
    c.link.bandwidth_hz = l.value("bandwidth_hz", c.link.bandwidth_hz);
    c.link.tx_power_w = l.value("tx_power_w", c.link.tx_power_w);
    c.link.noise_psd_w_hz = l.value("noise_psd_w_hz", c.link.noise_psd_w_hz);
    c.link.pathloss_exponent =
        l.value("pathloss_exponent", c.link.pathloss_exponent);
    c.link.ref_gain = l.value("ref_gain", c.link.ref_gain);
    c.link.min_distance_m = l.value("min_distance_m", c.link.min_distance_m);
  }
  if (j.contains("mobility")) {
    const auto& m = j["mobility"];
    detail::reject_unknown_keys(m, {"memory", "mean_speed", "perturb_std"},
                                "mobility");
    c.mobility.memory = m.value("memory", c.mobility.memory);
    c.mobility.mean_speed = m.value("mean_speed", c.mobility.mean_speed);
    c.mobility.perturb_std = m.value("perturb_std", c.mobility.perturb_std);
  }
  if (j.contains("alpha_range"))
    c.alpha_range = detail::range_from_json(j["alpha_range"], "alpha_range");
  if (j.contains("beta_range"))
    c.beta_range = detail::range_from_json(j["beta_range"], "beta_range");
  if (j.contains("data_size_mb"))
    c.data_size_mb = detail::range_from_json(j["data_size_mb"], "data_size_mb");
  return c;
}

inline nlohmann::json SimConfig::to_json() const {
  nlohmann::json j;
  j["servers"] = servers;
  j["clients"] = clients;
  j["tasks"] = tasks;
  j["type_levels"] = type_levels;
  j["balance_v"] = balance_v;
  j["mu_accuracy"] = mu_accuracy;
  j["mu_payment"] = mu_payment;
  j["tau_seconds"] = tau;
  j["slot_seconds"] = slot_seconds;
  j["horizon_slots"] = horizon_slots;
  j["warmup_slots"] = warmup_slots;
  j["seed"] = seed;
  j["policy"] = policy;
  j["scenario"] = scenario;
  j["force_assign_all"] = force_assign_all;
  j["top_quantile"] = top_quantile;
  j["server_fee"] = server_fee;
  j["subset_exact_max"] = subset_exact_max;
  j["data_unit_mb"] = data_unit_mb;
  if (epsilon) j["epsilon"] = *epsilon;
  if (sigma0) j["sigma0"] = *sigma0;
  if (al_max) j["al_max"] = *al_max;
  j["area"] = {{"width", area.width},
               {"height", area.height},
               {"cols", area.cols},
               {"rows", area.rows}};
  j["link"] = {{"bandwidth_hz", link.bandwidth_hz},
               {"tx_power_w", link.tx_power_w},
               {"noise_psd_w_hz", link.noise_psd_w_hz},
               {"pathloss_exponent", link.pathloss_exponent},
               {"ref_gain", link.ref_gain},
               {"min_distance_m", link.min_distance_m}};
  j["mobility"] = {{"memory", mobility.memory},
                   {"mean_speed", mobility.mean_speed},
                   {"perturb_std", mobility.perturb_std}};
  j["alpha_range"] = {alpha_range.lo, alpha_range.hi};
  j["beta_range"] = {beta_range.lo, beta_range.hi};
  j["data_size_mb"] = {data_size_mb.lo, data_size_mb.hi};
  return j;
}

inline SimConfig SimConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config parse error in " + path + ": " +
                             e.what());
  }
  return from_json(j);
}

}  // namespace famus
