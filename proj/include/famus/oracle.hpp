#pragma once

// Reference implementations that recompute controller decisions the slow,
// obvious way. Tests and the `oracle-check` subcommand compare the production
// solvers against these on randomized instances; a disagreement prints the
// full instance so it can be replayed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "famus/contract.hpp"
#include "famus/controller.hpp"
#include "famus/rng.hpp"

namespace famus::oracle {

// Exhaustive minimum of v_mu_a * AL(mass) + price over all 2^n candidate
// subsets. Totals accumulate in candidate-index order, matching the solver's
// id-ordered recomputation.
struct SubsetBest {
  double objective = 0.0;
  std::uint32_t mask = 0;
};

inline SubsetBest brute_force_subset(
    const std::vector<SubsetCandidate>& candidates, double v_mu_a,
    const AccuracyLossParams& al) {
  const std::size_t n = candidates.size();
  if (n > 25)
    throw std::invalid_argument("brute_force_subset: too many candidates");
  SubsetBest best;
  best.objective = v_mu_a * accuracy_loss(0.0, al);
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    double mass = 0.0;
    double price = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        mass += candidates[i].weight;
        price += candidates[i].price;
      }
    const double obj = v_mu_a * accuracy_loss(mass, al) + price;
    if (obj < best.objective) {
      best.objective = obj;
      best.mask = mask;
    }
  }
  return best;
}

// Exhaustive minimum of the release objective over server subsets: exactly
// min(tasks, n) servers when forced, otherwise any subset of size <= tasks.
// Per-subset totals accumulate in server-index order, exactly as
// delegate_famus reports its choice.
inline double brute_force_delegation(
    const std::vector<ServerObjective>& objectives, int tasks, bool forced) {
  const int n = static_cast<int>(objectives.size());
  if (n > 20)
    throw std::invalid_argument("brute_force_delegation: too many servers");
  const int take = std::min(tasks, n);
  bool have = false;
  double best = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const int bits = __builtin_popcount(mask);
    if (forced ? (bits != take) : (bits > take)) continue;
    double total = 0.0;
    for (int s = 0; s < n; ++s)
      total += (mask & (1u << s)) ? objectives[static_cast<std::size_t>(s)]
                                        .if_delegated
                                  : objectives[static_cast<std::size_t>(s)]
                                        .if_idle;
    if (!have || total < best) {
      have = true;
      best = total;
    }
  }
  return best;
}

// Best item for a client of the given level by plain enumeration: highest
// payoff, ties to the higher item, never below zero.
inline std::optional<int> scan_best_item(const ContractMenu& menu,
                                         int type_level) {
  const double gamma = menu.grid.value(type_level);
  std::optional<int> pick;
  double best = 0.0;
  for (int l = 1; l <= static_cast<int>(menu.items.size()); ++l) {
    const ContractItem& it = menu.item(l);
    const double payoff = it.reward - it.participation / gamma;
    if (payoff < 0.0) continue;
    if (!pick || payoff >= best) {
      pick = l;
      best = payoff;
    }
  }
  return pick;
}

struct CheckReport {
  int trials = 0;
  int failures = 0;
  std::vector<std::string> messages;  // first few failing instances
  bool ok() const { return failures == 0; }
};

namespace detail {

inline void note_failure(CheckReport& r, const std::string& msg) {
  ++r.failures;
  if (r.messages.size() < 8) r.messages.push_back(msg);
}

inline std::string describe_instance(
    const std::vector<SubsetCandidate>& candidates, double v_mu_a,
    const AccuracyLossParams& al) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "v_mu_a=" << v_mu_a << " tau=" << al.tau << " slot=" << al.slot
     << " al_max=" << al.al_max << " candidates=[";
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i) os << ", ";
    os << "(" << candidates[i].client << ", w=" << candidates[i].weight
       << ", p=" << candidates[i].price << ")";
  }
  os << "]";
  return os.str();
}

}  // namespace detail

// Random recruit instances, production solver vs exhaustive enumeration.
// The solver is injectable so a deliberately broken one can prove the check
// bites. Objectives must agree within `tol`.
template <class Solver>
CheckReport check_subset_solver(int trials, int max_clients,
                                std::uint64_t seed, double tol,
                                Solver&& solver) {
  CheckReport report;
  Rng rng(seed);
  AccuracyLossParams al;
  for (int t = 0; t < trials; ++t) {
    ++report.trials;
    const int n = static_cast<int>(rng.uniform_index(
        static_cast<std::uint64_t>(max_clients) + 1));
    std::vector<SubsetCandidate> candidates;
    candidates.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      SubsetCandidate c;
      c.client = i;
      c.weight = rng.uniform() < 0.1 ? 0.0 : rng.uniform(1.0, 300.0);
      c.price = rng.uniform() < 0.1 ? 0.0 : rng.uniform(0.0, 2.0);
      candidates.push_back(c);
    }
    const double v_mu_a = rng.uniform(0.05, 5.0);
    const SubsetBest expected = brute_force_subset(candidates, v_mu_a, al);
    const SelectionDecision got = solver(candidates, v_mu_a, al, 16);
    if (std::abs(got.objective - expected.objective) > tol) {
      std::ostringstream os;
      os << std::setprecision(17) << "recruit objective " << got.objective
         << " vs exhaustive " << expected.objective << " on "
         << detail::describe_instance(candidates, v_mu_a, al);
      detail::note_failure(report, os.str());
    }
  }
  return report;
}

// Random objective tables, production delegation vs exhaustive enumeration.
// Totals must match exactly: both sides sum the same branch values in server
// index order.
template <class Delegate>
CheckReport check_delegation(int trials, int max_servers, std::uint64_t seed,
                             Delegate&& delegate) {
  CheckReport report;
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    const int n = 1 + static_cast<int>(rng.uniform_index(
                          static_cast<std::uint64_t>(max_servers)));
    std::vector<ServerObjective> objectives(static_cast<std::size_t>(n));
    std::vector<double> queues(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
      objectives[static_cast<std::size_t>(s)].if_delegated =
          rng.uniform(-20.0, 20.0);
      objectives[static_cast<std::size_t>(s)].if_idle =
          rng.uniform(-20.0, 20.0);
      queues[static_cast<std::size_t>(s)] = rng.uniform(0.0, 30.0);
    }
    for (int k = 1; k <= n; ++k) {
      for (const bool forced : {true, false}) {
        ++report.trials;
        const DelegationChoice got = delegate(objectives, queues, k, forced);
        const double expected = brute_force_delegation(objectives, k, forced);
        if (got.total_objective != expected) {
          std::ostringstream os;
          os << std::setprecision(17) << "delegation total "
             << got.total_objective << " vs exhaustive " << expected
             << " (n=" << n << " k=" << k << " forced=" << forced << ")";
          detail::note_failure(report, os.str());
        }
      }
    }
  }
  return report;
}

// Random type grids; the closed-form menu must pass the feasibility predicate
// and the quadratic incentive check, and every level's best response must be
// the item addressed to it or one with an identical payoff.
inline CheckReport check_optimal_contracts(int trials, int max_levels,
                                           std::uint64_t seed) {
  CheckReport report;
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    ++report.trials;
    const int levels = 1 + static_cast<int>(rng.uniform_index(
                               static_cast<std::uint64_t>(max_levels)));
    std::vector<double> grid(static_cast<std::size_t>(levels));
    double v = rng.uniform(1e-4, 1.0);
    for (int l = 0; l < levels; ++l) {
      grid[static_cast<std::size_t>(l)] = v;
      v += rng.uniform() < 0.2 ? 0.0 : rng.uniform(1e-6, 2.0);
    }
    std::optional<ContractMenu> menu;
    try {
      menu.emplace(optimal_contract(TypeGrid(grid)));
    } catch (const std::exception& e) {
      detail::note_failure(report,
                           std::string("menu construction threw: ") + e.what());
      continue;
    }
    const FeasibilityReport feas = check_feasible(*menu);
    if (!feas.ok) {
      detail::note_failure(report, "infeasible menu: " + feas.violation);
      continue;
    }
    const IcIrReport icir = verify_ic_ir(*menu);
    if (!icir.ok) {
      detail::note_failure(report, "IC/IR violation: " + icir.violation);
      continue;
    }
    for (int l = 1; l <= levels; ++l) {
      const std::optional<int> pick = scan_best_item(*menu, l);
      if (!pick) {
        detail::note_failure(report, "level " + std::to_string(l) +
                                         " declined the menu");
        break;
      }
      const double gamma = menu->grid.value(l);
      const ContractItem& own = menu->item(l);
      const ContractItem& got = menu->item(*pick);
      const double u_own = own.reward - own.participation / gamma;
      const double u_got = got.reward - got.participation / gamma;
      if (u_got + kContractTol < u_own) {
        detail::note_failure(report, "level " + std::to_string(l) +
                                         " prefers a foreign item");
        break;
      }
    }
  }
  return report;
}

}  // namespace famus::oracle
