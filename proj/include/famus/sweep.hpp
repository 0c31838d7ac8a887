#pragma once

// Parameter sweeps: run a grid of (axis value, policy, seed) simulations and
// aggregate cost, accuracy loss, and fairness into a plot-ready CSV
// (famus-sweep-v1). Everything but the swept field and the seed is taken
// from the base config, so environment draws stay coupled across points.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "famus/config.hpp"
#include "famus/engine.hpp"
#include "famus/io.hpp"

namespace famus {

enum class SweepAxis { clients, servers, type_levels, balance_v };

inline const char* axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::clients: return "clients";
    case SweepAxis::servers: return "servers";
    case SweepAxis::type_levels: return "type_levels";
    case SweepAxis::balance_v: return "balance_v";
  }
  return "?";
}

inline SweepAxis parse_axis(std::string name) {
  for (char& c : name) c = static_cast<char>(std::tolower(
      static_cast<unsigned char>(c)));
  if (name == "clients" || name == "m") return SweepAxis::clients;
  if (name == "servers" || name == "n") return SweepAxis::servers;
  if (name == "gamma" || name == "type_levels" || name == "levels")
    return SweepAxis::type_levels;
  if (name == "v" || name == "balance_v") return SweepAxis::balance_v;
  throw std::invalid_argument(
      "unknown sweep axis \"" + name +
      "\" (expected clients|M, servers|N, gamma|type_levels, v|balance_v)");
}

inline void apply_axis(SimConfig& cfg, SweepAxis axis, double value) {
  const auto as_int = [&](const char* what) {
    const double rounded = std::nearbyint(value);
    if (std::abs(value - rounded) > 1e-9 || rounded < 0.0 || rounded > 1e9)
      throw std::invalid_argument(std::string(what) +
                                  " sweep values must be small non-negative "
                                  "integers, got " +
                                  format_double(value));
    return static_cast<int>(rounded);
  };
  switch (axis) {
    case SweepAxis::clients:
      cfg.clients = as_int("clients");
      break;
    case SweepAxis::servers:
      cfg.servers = as_int("servers");
      break;
    case SweepAxis::type_levels:
      cfg.type_levels = as_int("type_levels");
      break;
    case SweepAxis::balance_v:
      cfg.balance_v = value;
      break;
  }
}

// One aggregated sweep cell. Standard errors are sd / sqrt(n), zero for a
// single seed. The fairness mean covers only seeds where the index is
// defined (some delegation happened); jfi_seeds counts them.
struct SweepPoint {
  double value = 0.0;
  std::string policy;
  int seeds = 0;
  double cost_mean = 0.0;
  double cost_se = 0.0;
  double al_mean = 0.0;
  double al_se = 0.0;
  double jfi_mean = 0.0;
  double jfi_se = 0.0;
  int jfi_seeds = 0;
};

namespace detail {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
  int n = 0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe r;
  r.n = static_cast<int>(xs.size());
  if (r.n == 0) {
    r.mean = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  double sum = 0.0;
  for (double x : xs) sum += x;
  r.mean = sum / r.n;
  if (r.n < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  const double sd = std::sqrt(ss / (r.n - 1));
  r.se = sd / std::sqrt(static_cast<double>(r.n));
  return r;
}

}  // namespace detail

// Runs |values| x |policies| x seed_count simulations. Seeds are
// base_cfg.seed, base_cfg.seed + 1, ... so paired comparisons across values
// and policies share the same environment draws.
inline std::vector<SweepPoint> run_sweep(
    const SimConfig& base_cfg, SweepAxis axis,
    const std::vector<double>& values, const std::vector<std::string>& policies,
    int seed_count,
    const std::function<void(const SimConfig&, const RunSummary&)>& observer =
        {}) {
  if (values.empty()) throw std::invalid_argument("sweep needs values");
  if (policies.empty()) throw std::invalid_argument("sweep needs policies");
  if (seed_count < 1) throw std::invalid_argument("sweep needs seeds >= 1");

  std::vector<SweepPoint> points;
  points.reserve(values.size() * policies.size());
  for (double value : values) {
    for (const std::string& policy : policies) {
      std::vector<double> costs, als, jfis;
      costs.reserve(static_cast<std::size_t>(seed_count));
      for (int s = 0; s < seed_count; ++s) {
        SimConfig cfg = base_cfg;
        apply_axis(cfg, axis, value);
        cfg.policy = policy;
        cfg.seed = base_cfg.seed + static_cast<std::uint64_t>(s);
        Simulation sim(cfg);
        const RunSummary sum = sim.run();
        costs.push_back(sum.time_avg_cost);
        als.push_back(sum.time_avg_al);
        if (std::isfinite(sum.jfi)) jfis.push_back(sum.jfi);
        if (observer) observer(cfg, sum);
      }
      SweepPoint p;
      p.value = value;
      p.policy = policy;
      p.seeds = seed_count;
      const detail::MeanSe c = detail::mean_se(costs);
      const detail::MeanSe a = detail::mean_se(als);
      const detail::MeanSe f = detail::mean_se(jfis);
      p.cost_mean = c.mean;
      p.cost_se = c.se;
      p.al_mean = a.mean;
      p.al_se = a.se;
      p.jfi_mean = f.mean;
      p.jfi_se = f.se;
      p.jfi_seeds = f.n;
      points.push_back(std::move(p));
    }
  }
  return points;
}

inline void write_sweep_csv(const std::filesystem::path& path, SweepAxis axis,
                            const std::vector<SweepPoint>& points,
                            bool force) {
  ensure_output_file(path, force);
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "# " << kSweepSchema << "\n";
  out << "axis,value,policy,seeds,cost_mean,cost_se,al_mean,al_se,jfi_mean,"
         "jfi_se,jfi_seeds\n";
  for (const SweepPoint& p : points) {
    out << axis_name(axis) << ',' << format_double(p.value) << ',' << p.policy
        << ',' << p.seeds << ',' << format_double(p.cost_mean) << ','
        << format_double(p.cost_se) << ',' << format_double(p.al_mean) << ','
        << format_double(p.al_se) << ',' << format_double(p.jfi_mean) << ','
        << format_double(p.jfi_se) << ',' << p.jfi_seeds << '\n';
  }
  out.flush();
  if (out.fail()) throw std::runtime_error("sweep write failed");
}

}  // namespace famus
