#pragma once

// Per-slot control: which servers receive a task and which clients each
// server recruits.
//
// At a release slot the controller minimizes, separately per server n,
//
//   Omega_delegated(n) = (mu_p V h_n - Q_n) + V mu_a AL(sum_m w_m)
//                        + sum_m price_m            over recruit subsets
//   Omega_idle(n)      = Q_n eps g_n + V mu_a AL(0)
//
// where AL(mass) = 1/sqrt((tau/dt) mass) + dt/tau is the accuracy-loss proxy
// (AL_max sentinel at zero mass), w_m the expected data mass a client
// contributes and price_m its expected payment. Delegation then picks the K
// servers with the smallest delta = Omega_delegated - Omega_idle. Queue
// backlogs enter with a negative sign, so starved servers win delegations
// even when they are momentarily expensive; V scales how much expected cost
// outweighs that fairness pressure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "famus/rng.hpp"

namespace famus {

struct AccuracyLossParams {
  double tau = 1.0;       // task period, seconds
  double slot = 0.1;      // round duration, seconds
  double al_max = 1.1;    // sentinel for zero training mass
};

inline double accuracy_loss(double mass, const AccuracyLossParams& p) {
  if (mass <= 0.0) return p.al_max;
  return 1.0 / std::sqrt((p.tau / p.slot) * mass) + p.slot / p.tau;
}

struct ControllerParams {
  double v = 10.0;          // cost weight in the drift-plus-penalty objective
  double mu_accuracy = 0.1; // weight of the accuracy-loss cost share
  double mu_payment = 0.9;  // weight of the payment cost share
  double epsilon = 0.8;     // unfairness arrival rate, normally K/N
  int tasks = 8;            // K, tasks released per period
  bool force_assign_all = true;
  AccuracyLossParams al;
  int subset_exact_max = 16;  // exact search cutoff for the recruit solver
};

// One recruitable client as the solver sees it: `weight` is the data mass the
// client is expected to contribute and `price` the (V-scaled) payment for it.
struct SubsetCandidate {
  int client = 0;
  double weight = 0.0;
  double price = 0.0;
};

struct SelectionDecision {
  std::vector<int> clients;  // recruited client ids, ascending
  double mass = 0.0;         // total expected weight
  double price = 0.0;        // total price
  double objective = 0.0;    // v_mu_a * AL(mass) + price
};

namespace detail {

struct SubsetWorkspace {
  std::vector<int> order;      // candidate indices, best ratio first
  std::vector<char> selected;  // over `order` positions
};

inline double subset_objective(double v_mu_a, const AccuracyLossParams& al,
                               double mass, double price) {
  return v_mu_a * accuracy_loss(mass, al) + price;
}

}  // namespace detail

// Minimizes v_mu_a * AL(total weight) + total price over subsets of the
// candidates. Zero-weight candidates are never recruited. Method: scan all
// prefixes of the descending weight/price order, polish with single
// add/drop/swap moves, and below `exact_max` candidates re-solve exactly with
// a branch-and-bound whose bound relaxes all remaining mass to free.
inline SelectionDecision solve_client_subset(
    const std::vector<SubsetCandidate>& candidates, double v_mu_a,
    const AccuracyLossParams& al, int exact_max = 16) {
  for (const SubsetCandidate& c : candidates)
    if (c.weight < 0.0 || c.price < 0.0)
      throw std::invalid_argument(
          "solve_client_subset: negative weight or price");

  std::vector<int> order;
  order.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (candidates[i].weight > 0.0) order.push_back(static_cast<int>(i));

  // Descending weight/price; free candidates (price 0) first by weight.
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const SubsetCandidate& ca = candidates[static_cast<std::size_t>(a)];
    const SubsetCandidate& cb = candidates[static_cast<std::size_t>(b)];
    const bool fa = ca.price <= 0.0;
    const bool fb = cb.price <= 0.0;
    if (fa != fb) return fa;
    if (fa && fb) {
      if (ca.weight != cb.weight) return ca.weight > cb.weight;
      return ca.client < cb.client;
    }
    const double ra = ca.weight * cb.price;
    const double rb = cb.weight * ca.price;
    if (ra != rb) return ra > rb;
    return ca.client < cb.client;
  });

  const std::size_t n = order.size();
  const auto eval = [&](double mass, double price) {
    return detail::subset_objective(v_mu_a, al, mass, price);
  };

  // Prefix scan.
  double best_obj = eval(0.0, 0.0);
  std::size_t best_prefix = 0;
  {
    double mass = 0.0;
    double price = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const SubsetCandidate& c =
          candidates[static_cast<std::size_t>(order[k])];
      mass += c.weight;
      price += c.price;
      const double obj = eval(mass, price);
      if (obj < best_obj) {
        best_obj = obj;
        best_prefix = k + 1;
      }
    }
  }

  std::vector<char> sel(n, 0);
  double mass = 0.0;
  double price = 0.0;
  for (std::size_t k = 0; k < best_prefix; ++k) {
    sel[k] = 1;
    mass += candidates[static_cast<std::size_t>(order[k])].weight;
    price += candidates[static_cast<std::size_t>(order[k])].price;
  }

  // Single-move polish: apply the best improving add, drop, or swap until a
  // local minimum. Bounded by n^2 rounds as a hard safety stop.
  for (std::size_t round = 0; round < n * n + 1; ++round) {
    double move_obj = best_obj;
    int move_drop = -1;
    int move_add = -1;
    for (std::size_t i = 0; i < n; ++i) {
      const SubsetCandidate& ci =
          candidates[static_cast<std::size_t>(order[i])];
      if (sel[i]) {
        const double obj = eval(mass - ci.weight, price - ci.price);
        if (obj < move_obj) {
          move_obj = obj;
          move_drop = static_cast<int>(i);
          move_add = -1;
        }
        for (std::size_t j = 0; j < n; ++j) {
          if (sel[j]) continue;
          const SubsetCandidate& cj =
              candidates[static_cast<std::size_t>(order[j])];
          const double obj2 = eval(mass - ci.weight + cj.weight,
                                   price - ci.price + cj.price);
          if (obj2 < move_obj) {
            move_obj = obj2;
            move_drop = static_cast<int>(i);
            move_add = static_cast<int>(j);
          }
        }
      } else {
        const double obj = eval(mass + ci.weight, price + ci.price);
        if (obj < move_obj) {
          move_obj = obj;
          move_drop = -1;
          move_add = static_cast<int>(i);
        }
      }
    }
    if (move_drop < 0 && move_add < 0) break;
    if (move_drop >= 0) {
      const SubsetCandidate& c =
          candidates[static_cast<std::size_t>(order[move_drop])];
      sel[static_cast<std::size_t>(move_drop)] = 0;
      mass -= c.weight;
      price -= c.price;
    }
    if (move_add >= 0) {
      const SubsetCandidate& c =
          candidates[static_cast<std::size_t>(order[move_add])];
      sel[static_cast<std::size_t>(move_add)] = 1;
      mass += c.weight;
      price += c.price;
    }
    best_obj = move_obj;
  }

  // Exact refinement for small candidate sets. Depth-first in ratio order;
  // a node is cut when even collecting all remaining mass for free cannot
  // beat the incumbent.
  if (n > 0 && static_cast<int>(n) <= exact_max) {
    std::vector<double> suffix_weight(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;)
      suffix_weight[i] = suffix_weight[i + 1] +
                         candidates[static_cast<std::size_t>(order[i])].weight;
    std::vector<char> cur(n, 0);
    std::vector<char> best_set = sel;
    auto dfs = [&](auto&& self, std::size_t i, double m, double p) -> void {
      if (eval(m + suffix_weight[i], p) >= best_obj) return;
      if (i == n) {
        const double obj = eval(m, p);
        if (obj < best_obj) {
          best_obj = obj;
          best_set = cur;
        }
        return;
      }
      const SubsetCandidate& c = candidates[static_cast<std::size_t>(order[i])];
      cur[i] = 1;
      self(self, i + 1, m + c.weight, p + c.price);
      cur[i] = 0;
      self(self, i + 1, m, p);
    };
    dfs(dfs, 0, 0.0, 0.0);
    sel = best_set;
    mass = 0.0;
    price = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (sel[i]) {
        mass += candidates[static_cast<std::size_t>(order[i])].weight;
        price += candidates[static_cast<std::size_t>(order[i])].price;
      }
  }

  SelectionDecision out;
  for (std::size_t i = 0; i < n; ++i)
    if (sel[i])
      out.clients.push_back(
          candidates[static_cast<std::size_t>(order[i])].client);
  std::sort(out.clients.begin(), out.clients.end());
  // Recompute totals in id order so the reported objective does not depend on
  // the search path.
  out.mass = 0.0;
  out.price = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (sel[i]) {
      out.mass += candidates[static_cast<std::size_t>(order[i])].weight;
      out.price += candidates[static_cast<std::size_t>(order[i])].price;
    }
  out.objective = eval(out.mass, out.price);
  return out;
}

// Cost of one cluster in expectation over client types (no V scaling):
// payment share mu_p (fee + expected rewards) plus accuracy share
// mu_a AL(expected mass). Idle servers still carry the AL(0) sentinel.
inline double expected_cluster_cost(double mu_accuracy, double mu_payment,
                                    double fee, bool delegated,
                                    double expected_rewards,
                                    double expected_mass,
                                    const AccuracyLossParams& al) {
  const double payment = delegated ? fee + expected_rewards : 0.0;
  const double mass = delegated ? expected_mass : 0.0;
  return mu_payment * payment + mu_accuracy * accuracy_loss(mass, al);
}

struct ServerObjective {
  double if_delegated = 0.0;
  double if_idle = 0.0;
  double delta() const { return if_delegated - if_idle; }
};

inline ServerObjective server_objective(const ControllerParams& p, double fee,
                                        double queue, double reputation,
                                        const SelectionDecision& selection) {
  ServerObjective o;
  o.if_delegated =
      (p.mu_payment * p.v * fee - queue) + selection.objective;
  o.if_idle = queue * p.epsilon * reputation +
              p.v * p.mu_accuracy * accuracy_loss(0.0, p.al);
  return o;
}

// Assignment of the K interchangeable tasks of one release to servers. Each
// task goes to at most one server and each server receives at most one task.
class DelegationAction {
 public:
  DelegationAction(int num_servers, std::vector<int> server_of_task)
      : num_servers_(num_servers), server_of_task_(std::move(server_of_task)) {
    std::vector<char> seen(static_cast<std::size_t>(num_servers), 0);
    for (int s : server_of_task_) {
      if (s < -1 || s >= num_servers)
        throw std::invalid_argument("DelegationAction: server out of range");
      if (s >= 0) {
        if (seen[static_cast<std::size_t>(s)])
          throw std::invalid_argument(
              "DelegationAction: server assigned more than one task");
        seen[static_cast<std::size_t>(s)] = 1;
      }
    }
  }

  int num_servers() const { return num_servers_; }
  int num_tasks() const { return static_cast<int>(server_of_task_.size()); }
  int server_of(int task) const {
    return server_of_task_.at(static_cast<std::size_t>(task));
  }
  bool delegated(int server) const {
    for (int s : server_of_task_)
      if (s == server) return true;
    return false;
  }
  std::vector<char> bits() const {
    std::vector<char> b(static_cast<std::size_t>(num_servers_), 0);
    for (int s : server_of_task_)
      if (s >= 0) b[static_cast<std::size_t>(s)] = 1;
    return b;
  }

 private:
  int num_servers_;
  std::vector<int> server_of_task_;
};

struct DelegationChoice {
  DelegationAction action{0, {}};
  std::vector<int> servers;      // delegated servers in assignment order
  double total_objective = 0.0;  // sum over servers of the realized branch
};

// K servers with the smallest delta, ties to the larger backlog and then the
// smaller index. Without force_assign_all only servers whose delegation
// improves the objective (delta < 0) receive a task.
inline DelegationChoice delegate_famus(
    const std::vector<ServerObjective>& objectives,
    const std::vector<double>& queues, int tasks, bool force_assign_all) {
  const int n = static_cast<int>(objectives.size());
  if (static_cast<int>(queues.size()) != n)
    throw std::invalid_argument("delegate_famus: queue/objective mismatch");
  if (tasks < 0) throw std::invalid_argument("delegate_famus: negative tasks");

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double da = objectives[static_cast<std::size_t>(a)].delta();
    const double db = objectives[static_cast<std::size_t>(b)].delta();
    if (da != db) return da < db;
    const double qa = queues[static_cast<std::size_t>(a)];
    const double qb = queues[static_cast<std::size_t>(b)];
    if (qa != qb) return qa > qb;
    return a < b;
  });

  DelegationChoice choice;
  const int take = std::min(tasks, n);
  for (int k = 0; k < take; ++k) {
    const int server = order[static_cast<std::size_t>(k)];
    if (!force_assign_all &&
        objectives[static_cast<std::size_t>(server)].delta() >= 0.0)
      continue;
    choice.servers.push_back(server);
  }
  std::vector<int> server_of_task(static_cast<std::size_t>(tasks), -1);
  for (std::size_t k = 0; k < choice.servers.size(); ++k)
    server_of_task[k] = choice.servers[k];
  choice.action = DelegationAction(n, std::move(server_of_task));

  const auto bits = choice.action.bits();
  for (int s = 0; s < n; ++s)
    choice.total_objective += bits[static_cast<std::size_t>(s)]
                                  ? objectives[static_cast<std::size_t>(s)]
                                        .if_delegated
                                  : objectives[static_cast<std::size_t>(s)]
                                        .if_idle;
  return choice;
}

// ---------------------------------------------------------------------------
// Release-slot policies. The engine snapshots one ServerSite per server; the
// policy returns the delegation plus the recruit decision of every delegated
// server. Contract policies recruit via the subset solver over expected-mass
// candidates; the full-information policies (greedy, random) recruit actual
// members and pay their reported costs.

struct ServerSite {
  double fee = 1.0;
  double queue = 0.0;
  double reputation = 0.5;
  std::vector<SubsetCandidate> contract;  // weight = pi_top d, price = V mu_p pi_top / gamma_top
  std::vector<SubsetCandidate> direct;    // weight = d, price = V mu_p cost
};

enum class PolicyKind { famus, ncf, greedy, random_pick, ea, fixed };

inline const char* policy_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::famus: return "famus";
    case PolicyKind::ncf: return "ncf";
    case PolicyKind::greedy: return "greedy";
    case PolicyKind::random_pick: return "random";
    case PolicyKind::ea: return "ea";
    case PolicyKind::fixed: return "fixed";
  }
  return "?";
}

struct PolicyDecision {
  DelegationChoice delegation;
  std::vector<SelectionDecision> selection;  // per server, empty when idle
};

namespace detail {

// Uniform K-subset by partial Fisher-Yates; marginal inclusion is K/N.
inline std::vector<int> uniform_subset(int n, int k, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  const int take = std::min(k, n);
  for (int i = 0; i < take; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) +
        static_cast<std::size_t>(rng.uniform_index(
            static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(take));
  return idx;
}

inline PolicyDecision decide_given_servers(
    const std::vector<ServerSite>& sites, const ControllerParams& params,
    const std::vector<int>& servers, bool contract_based) {
  const int n = static_cast<int>(sites.size());
  PolicyDecision d;
  d.selection.resize(static_cast<std::size_t>(n));
  std::vector<int> server_of_task(static_cast<std::size_t>(params.tasks), -1);
  for (std::size_t k = 0; k < servers.size(); ++k)
    server_of_task.at(k) = servers[k];
  d.delegation.action = DelegationAction(n, std::move(server_of_task));
  d.delegation.servers = servers;
  for (int s : servers) {
    const ServerSite& site = sites[static_cast<std::size_t>(s)];
    d.selection[static_cast<std::size_t>(s)] = solve_client_subset(
        contract_based ? site.contract : site.direct,
        params.v * params.mu_accuracy, params.al, params.subset_exact_max);
  }
  for (int s = 0; s < n; ++s) {
    const bool del = d.delegation.action.delegated(s);
    const ServerObjective o = server_objective(
        params, sites[static_cast<std::size_t>(s)].fee,
        sites[static_cast<std::size_t>(s)].queue,
        sites[static_cast<std::size_t>(s)].reputation,
        d.selection[static_cast<std::size_t>(s)]);
    d.delegation.total_objective += del ? o.if_delegated : o.if_idle;
  }
  return d;
}

// Shared by famus (real queues) and its queue-blind variants.
inline PolicyDecision decide_drift_penalty(const std::vector<ServerSite>& sites,
                                           const ControllerParams& params,
                                           bool use_queues,
                                           bool contract_based) {
  const int n = static_cast<int>(sites.size());
  PolicyDecision d;
  d.selection.resize(static_cast<std::size_t>(n));
  std::vector<ServerObjective> objectives(static_cast<std::size_t>(n));
  std::vector<double> queues(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < n; ++s) {
    const ServerSite& site = sites[static_cast<std::size_t>(s)];
    SelectionDecision sel = solve_client_subset(
        contract_based ? site.contract : site.direct,
        params.v * params.mu_accuracy, params.al, params.subset_exact_max);
    const double q = use_queues ? site.queue : 0.0;
    const double g = use_queues ? site.reputation : 0.0;
    objectives[static_cast<std::size_t>(s)] =
        server_objective(params, site.fee, q, g, sel);
    queues[static_cast<std::size_t>(s)] = q;
    d.selection[static_cast<std::size_t>(s)] = std::move(sel);
  }
  d.delegation = delegate_famus(objectives, queues, params.tasks,
                                params.force_assign_all);
  // Idle servers recruit nobody.
  for (int s = 0; s < n; ++s)
    if (!d.delegation.action.delegated(s))
      d.selection[static_cast<std::size_t>(s)] = SelectionDecision{};
  return d;
}

}  // namespace detail

// famus: drift-plus-penalty with live queues and reputations.
inline PolicyDecision decide_famus(const std::vector<ServerSite>& sites,
                                   const ControllerParams& params) {
  return detail::decide_drift_penalty(sites, params, /*use_queues=*/true,
                                      /*contract_based=*/true);
}

// ncf: the queue-blind twin of famus; contract recruiting, delegation by
// expected cost alone. Identical to famus in the V -> infinity limit.
inline PolicyDecision decide_ncf(const std::vector<ServerSite>& sites,
                                 const ControllerParams& params) {
  return detail::decide_drift_penalty(sites, params, /*use_queues=*/false,
                                      /*contract_based=*/true);
}

// greedy: full information, no contract. Recruits members by their reported
// costs (and pays those costs), delegates to the myopically cheapest servers.
inline PolicyDecision decide_greedy(const std::vector<ServerSite>& sites,
                                    const ControllerParams& params) {
  return detail::decide_drift_penalty(sites, params, /*use_queues=*/false,
                                      /*contract_based=*/false);
}

// random: uniform K-subset of servers, each recruiting a uniform random
// subset of its members at their reported costs.
inline PolicyDecision decide_random(const std::vector<ServerSite>& sites,
                                    const ControllerParams& params, Rng& rng) {
  const int n = static_cast<int>(sites.size());
  const std::vector<int> servers =
      detail::uniform_subset(n, params.tasks, rng);
  PolicyDecision d;
  d.selection.resize(static_cast<std::size_t>(n));
  std::vector<int> server_of_task(static_cast<std::size_t>(params.tasks), -1);
  for (std::size_t k = 0; k < servers.size(); ++k) server_of_task[k] = servers[k];
  d.delegation.action = DelegationAction(n, std::move(server_of_task));
  d.delegation.servers = servers;
  for (int s : servers) {
    const ServerSite& site = sites[static_cast<std::size_t>(s)];
    SelectionDecision sel;
    for (const SubsetCandidate& c : site.direct) {
      if (rng.uniform() < 0.5) {
        sel.clients.push_back(c.client);
        sel.mass += c.weight;
        sel.price += c.price;
      }
    }
    std::sort(sel.clients.begin(), sel.clients.end());
    sel.objective = params.v * params.mu_accuracy *
                        accuracy_loss(sel.mass, params.al) +
                    sel.price;
    d.selection[static_cast<std::size_t>(s)] = std::move(sel);
  }
  for (int s = 0; s < n; ++s) {
    const bool del = d.delegation.action.delegated(s);
    const ServerObjective o = server_objective(
        params, sites[static_cast<std::size_t>(s)].fee,
        sites[static_cast<std::size_t>(s)].queue,
        sites[static_cast<std::size_t>(s)].reputation,
        d.selection[static_cast<std::size_t>(s)]);
    d.delegation.total_objective += del ? o.if_delegated : o.if_idle;
  }
  return d;
}

// ea: uniform K-subset with contract recruiting, so every server is delegated
// with probability exactly K/N per release.
inline PolicyDecision decide_ea(const std::vector<ServerSite>& sites,
                                const ControllerParams& params, Rng& rng) {
  const std::vector<int> servers = detail::uniform_subset(
      static_cast<int>(sites.size()), params.tasks, rng);
  return detail::decide_given_servers(sites, params, servers,
                                      /*contract_based=*/true);
}

// fixed: a constant server subset with contract recruiting.
inline PolicyDecision decide_fixed(const std::vector<ServerSite>& sites,
                                   const ControllerParams& params,
                                   const std::vector<int>& servers) {
  return detail::decide_given_servers(sites, params, servers,
                                      /*contract_based=*/true);
}

}  // namespace famus
