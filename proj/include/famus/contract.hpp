#pragma once

// Incentive contracts over a discrete type grid.
//
// Client types are quantized onto a grid gamma_1 <= ... <= gamma_G (level i
// covers values in (gamma_{i-1}, gamma_i], values above the top clip to level
// G). A menu assigns each level an item (participation b, reward r). A menu
// is implementable iff
//   (a) b and r are non-decreasing in the level,
//   (b) the lowest level gets nonnegative payoff: r_1 - b_1 / gamma_1 >= 0,
//   (c) adjacent levels sandwich each other:
//       b_{i-1} + gamma_{i-1} (r_i - r_{i-1}) <= b_i
//                                     <= b_{i-1} + gamma_i (r_i - r_{i-1}).
// Those three conditions are equivalent to individual rationality plus
// incentive compatibility, which verify_ic_ir checks directly.
//
// The cost-minimizing implementable menu concentrates everything on the top
// level: all lower items are (0, 0) and the top item is (1, 1/gamma_G), i.e.
// only top-type clients participate and they are paid exactly their cost.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace famus {

// Comparisons between menu quantities tolerate 1 ulp-ish noise: the sandwich
// upper bound binds exactly under the optimal menu (b = gamma * (1/gamma))
// and would fail spuriously under strict floating-point comparison.
inline constexpr double kContractTol = 1e-9;

class TypeGrid {
 public:
  explicit TypeGrid(std::vector<double> levels) : levels_(std::move(levels)) {
    if (levels_.empty())
      throw std::invalid_argument("TypeGrid: needs at least one level");
    double prev = 0.0;
    for (double g : levels_) {
      if (!(g > 0.0))
        throw std::invalid_argument("TypeGrid: levels must be positive");
      if (g < prev)
        throw std::invalid_argument("TypeGrid: levels must be non-decreasing");
      prev = g;
    }
  }

  int size() const { return static_cast<int>(levels_.size()); }

  // 1-based level value gamma_i.
  double value(int level) const { return levels_.at(check(level) - 1); }

  const std::vector<double>& values() const { return levels_; }

  // Level of a positive type value; values above the top clip to the top.
  int level_of(double type_value) const {
    if (!(type_value > 0.0))
      throw std::invalid_argument("TypeGrid: type values are positive");
    auto it = std::lower_bound(levels_.begin(), levels_.end(), type_value);
    if (it == levels_.end()) return size();
    return static_cast<int>(it - levels_.begin()) + 1;
  }

 private:
  int check(int level) const {
    if (level < 1 || level > size())
      throw std::out_of_range("TypeGrid: level out of range");
    return level;
  }

  std::vector<double> levels_;
};

struct ContractItem {
  double participation = 0.0;  // b, 0 or 1 for menus built here
  double reward = 0.0;         // r
};

struct ContractMenu {
  TypeGrid grid;
  std::vector<ContractItem> items;  // one per level, index 0 = level 1

  const ContractItem& item(int level) const {
    return items.at(static_cast<std::size_t>(level - 1));
  }
};

// Payoff of a level-`type_level` client choosing `item`: r - b / gamma.
inline double contract_payoff(const ContractMenu& menu, int type_level,
                              const ContractItem& item) {
  return item.reward - item.participation / menu.grid.value(type_level);
}

// The cost-minimizing implementable menu for the given grid.
inline ContractMenu optimal_contract(const TypeGrid& grid) {
  ContractMenu menu{grid, std::vector<ContractItem>(
                              static_cast<std::size_t>(grid.size()))};
  ContractItem& top = menu.items.back();
  top.participation = 1.0;
  top.reward = 1.0 / grid.value(grid.size());
  return menu;
}

struct FeasibilityReport {
  bool ok = true;
  std::string violation;  // first violated condition, empty when ok
};

inline FeasibilityReport check_feasible(const ContractMenu& menu) {
  const int n = menu.grid.size();
  if (static_cast<int>(menu.items.size()) != n)
    return {false, "menu has " + std::to_string(menu.items.size()) +
                       " items for " + std::to_string(n) + " levels"};
  for (int i = 2; i <= n; ++i) {
    if (menu.item(i).participation < menu.item(i - 1).participation -
                                         kContractTol)
      return {false, "participation decreases from level " +
                         std::to_string(i - 1) + " to " + std::to_string(i)};
    if (menu.item(i).reward < menu.item(i - 1).reward - kContractTol)
      return {false, "reward decreases from level " + std::to_string(i - 1) +
                         " to " + std::to_string(i)};
  }
  const double base_payoff =
      menu.item(1).reward - menu.item(1).participation / menu.grid.value(1);
  if (base_payoff < -kContractTol)
    return {false, "lowest level has negative payoff"};
  for (int i = 2; i <= n; ++i) {
    const double dr = menu.item(i).reward - menu.item(i - 1).reward;
    const double lo = menu.item(i - 1).participation +
                      menu.grid.value(i - 1) * dr;
    const double hi = menu.item(i - 1).participation +
                      menu.grid.value(i) * dr;
    if (menu.item(i).participation < lo - kContractTol ||
        menu.item(i).participation > hi + kContractTol)
      return {false, "level " + std::to_string(i) +
                         " participation outside the sandwich bounds"};
  }
  return {};
}

// The item a rational level-`type_level` client picks: the payoff-maximizing
// item with nonnegative payoff, ties resolved toward the higher level.
// nullopt when every item pays negatively (the client declines).
inline std::optional<int> best_response(const ContractMenu& menu,
                                        int type_level) {
  std::optional<int> best;
  double best_payoff = 0.0;
  for (int j = 1; j <= menu.grid.size(); ++j) {
    const double u = contract_payoff(menu, type_level, menu.item(j));
    if (u < 0.0) continue;
    if (!best || u >= best_payoff) {
      best = j;
      best_payoff = u;
    }
  }
  return best;
}

struct IcIrReport {
  bool ok = true;
  // First violation found, described for diagnostics.
  std::string violation;
};

// Direct quadratic check of individual rationality and incentive
// compatibility over all level pairs.
inline IcIrReport verify_ic_ir(const ContractMenu& menu) {
  const int n = menu.grid.size();
  for (int i = 1; i <= n; ++i) {
    const double own = contract_payoff(menu, i, menu.item(i));
    if (own < -kContractTol)
      return {false, "IR fails at level " + std::to_string(i)};
    for (int j = 1; j <= n; ++j) {
      if (j == i) continue;
      const double other = contract_payoff(menu, i, menu.item(j));
      if (other > own + kContractTol)
        return {false, "IC fails: level " + std::to_string(i) +
                           " prefers item " + std::to_string(j)};
    }
  }
  return {};
}

// Empirical level distribution from observed level indices. No observations
// means an uninformative uniform belief.
inline std::vector<double> estimate_distribution(
    const std::vector<int>& observed_levels, int num_levels) {
  if (num_levels < 1)
    throw std::invalid_argument("estimate_distribution: empty grid");
  std::vector<double> pi(static_cast<std::size_t>(num_levels), 0.0);
  if (observed_levels.empty()) {
    const double u = 1.0 / num_levels;
    for (double& p : pi) p = u;
    return pi;
  }
  for (int level : observed_levels) {
    if (level < 1 || level > num_levels)
      throw std::out_of_range("estimate_distribution: level out of range");
    pi[static_cast<std::size_t>(level - 1)] += 1.0;
  }
  const double total = static_cast<double>(observed_levels.size());
  for (double& p : pi) p /= total;
  return pi;
}

// Grid construction from warm-up samples: gamma_i is the (q * i / G)-quantile
// of the observed type values, so the top level sits at the q-quantile and
// the levels are uniform in quantile space.
inline TypeGrid build_type_grid(std::vector<double> samples, int num_levels,
                                double top_quantile) {
  if (samples.empty())
    throw std::invalid_argument("build_type_grid: no samples");
  if (num_levels < 1)
    throw std::invalid_argument("build_type_grid: need at least one level");
  if (!(top_quantile > 0.0 && top_quantile <= 1.0))
    throw std::invalid_argument("build_type_grid: quantile outside (0, 1]");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  std::vector<double> levels;
  levels.reserve(static_cast<std::size_t>(num_levels));
  for (int i = 1; i <= num_levels; ++i) {
    const double p = top_quantile * i / num_levels;
    // Smallest sample with at least a fraction p of the data at or below it.
    std::size_t k = static_cast<std::size_t>(std::ceil(p * n));
    if (k > 0) --k;
    levels.push_back(samples[k]);
  }
  return TypeGrid(std::move(levels));
}

}  // namespace famus
