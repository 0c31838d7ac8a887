#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "famus/controller.hpp"
#include "famus/oracle.hpp"
#include "famus/rng.hpp"

using famus::AccuracyLossParams;
using famus::ControllerParams;
using famus::DelegationAction;
using famus::DelegationChoice;
using famus::PolicyDecision;
using famus::Rng;
using famus::SelectionDecision;
using famus::ServerObjective;
using famus::ServerSite;
using famus::SubsetCandidate;

namespace {

ServerObjective plain_delta(double delta) {
  ServerObjective o;
  o.if_delegated = delta;
  o.if_idle = 0.0;
  return o;
}

// Three servers, each with one private recruitable member, shaped so the
// per-server objectives differ and both candidate routes are populated.
std::vector<ServerSite> three_sites() {
  std::vector<ServerSite> sites(3);
  for (int s = 0; s < 3; ++s) {
    ServerSite& site = sites[static_cast<std::size_t>(s)];
    site.fee = 1.0 + 0.2 * s;
    site.queue = 2.0 * s;
    site.reputation = 0.4 + 0.1 * s;
    SubsetCandidate c;
    c.client = s;
    c.weight = 1.5 + 0.3 * s;
    c.price = 0.02 + 0.01 * s;
    site.contract.push_back(c);
    c.price = 0.05 + 0.01 * s;
    site.direct.push_back(c);
  }
  return sites;
}

}  // namespace

TEST(AccuracyLoss, MatchesTheClosedForm) {
  AccuracyLossParams p;  // tau 1 s, slot 0.1 s
  EXPECT_DOUBLE_EQ(famus::accuracy_loss(0.1, p), 1.1);  // 1/sqrt(1) + 0.1
  EXPECT_DOUBLE_EQ(famus::accuracy_loss(10.0, p), 0.2);
  EXPECT_DOUBLE_EQ(famus::accuracy_loss(0.0, p), p.al_max);
}

TEST(AccuracyLoss, ApproachesTheFloorForHugeMass) {
  AccuracyLossParams p;
  EXPECT_NEAR(famus::accuracy_loss(1e12, p), 0.1, 1e-6);
}

TEST(AccuracyLoss, DoublingMassShrinksTheRootTerm) {
  AccuracyLossParams p;
  for (double mass : {0.5, 2.0, 7.0, 40.0}) {
    const double a1 = famus::accuracy_loss(mass, p) - 0.1;
    const double a2 = famus::accuracy_loss(2.0 * mass, p) - 0.1;
    EXPECT_NEAR(a2, a1 / std::sqrt(2.0), 1e-12);
  }
}

TEST(ExpectedClusterCost, HandArithmeticCase) {
  AccuracyLossParams p;
  // One delegated server paying fee 1 plus expected rewards 0.5, expected
  // mass 100 -> (tau/slot) * mass = 1000.
  const double cost = famus::expected_cluster_cost(
      0.1, 0.9, 1.0, true, 0.5, 100.0, p);
  EXPECT_DOUBLE_EQ(cost, 0.9 * 1.5 + 0.1 * (1.0 / std::sqrt(1000.0) + 0.1));
}

TEST(ExpectedClusterCost, IdleServersCarryOnlyTheSentinel) {
  AccuracyLossParams p;
  const double cost = famus::expected_cluster_cost(
      0.1, 0.9, 1.0, false, 0.5, 100.0, p);
  EXPECT_DOUBLE_EQ(cost, 0.1 * p.al_max);
}

TEST(ExpectedClusterCost, PaymentShareIsLinearInItsWeight) {
  AccuracyLossParams p;
  const double al_share =
      0.1 * famus::accuracy_loss(50.0, p);
  const double base =
      famus::expected_cluster_cost(0.1, 0.9, 1.0, true, 0.3, 50.0, p);
  const double doubled =
      famus::expected_cluster_cost(0.1, 1.8, 1.0, true, 0.3, 50.0, p);
  EXPECT_NEAR(doubled - al_share, 2.0 * (base - al_share), 1e-12);
}

TEST(SubsetSolver, EmptyCandidateListStaysAtTheSentinel) {
  AccuracyLossParams p;
  const SelectionDecision d = famus::solve_client_subset({}, 2.0, p);
  EXPECT_TRUE(d.clients.empty());
  EXPECT_DOUBLE_EQ(d.mass, 0.0);
  EXPECT_DOUBLE_EQ(d.objective, 2.0 * p.al_max);
}

TEST(SubsetSolver, RecruitsOnlyWhenTheLossDropBeatsThePrice) {
  AccuracyLossParams p;
  SubsetCandidate c;
  c.client = 0;
  c.weight = 1.0;  // AL(1) = 1/sqrt(10) + 0.1, down from the 1.1 sentinel
  const double gain = 1.0 * (p.al_max - famus::accuracy_loss(1.0, p));

  c.price = gain + 0.01;
  const SelectionDecision skip =
      famus::solve_client_subset({c}, 1.0, p);
  EXPECT_TRUE(skip.clients.empty());

  c.price = gain - 0.01;
  const SelectionDecision take =
      famus::solve_client_subset({c}, 1.0, p);
  ASSERT_EQ(take.clients.size(), 1u);
  EXPECT_EQ(take.clients[0], 0);
  EXPECT_DOUBLE_EQ(take.mass, 1.0);
}

TEST(SubsetSolver, IgnoresZeroWeightCandidates) {
  AccuracyLossParams p;
  SubsetCandidate free_rider;
  free_rider.client = 7;
  free_rider.weight = 0.0;
  free_rider.price = 0.0;
  SubsetCandidate worker;
  worker.client = 2;
  worker.weight = 3.0;
  worker.price = 0.01;
  const SelectionDecision d =
      famus::solve_client_subset({free_rider, worker}, 1.0, p);
  ASSERT_EQ(d.clients.size(), 1u);
  EXPECT_EQ(d.clients[0], 2);
}

TEST(SubsetSolver, RejectsNegativeInputs) {
  AccuracyLossParams p;
  SubsetCandidate c;
  c.weight = -1.0;
  c.price = 0.5;
  EXPECT_THROW(famus::solve_client_subset({c}, 1.0, p),
               std::invalid_argument);
  c.weight = 1.0;
  c.price = -0.5;
  EXPECT_THROW(famus::solve_client_subset({c}, 1.0, p),
               std::invalid_argument);
}

TEST(SubsetSolver, MatchesExhaustiveSearchOnRandomInstances) {
  const famus::oracle::CheckReport report = famus::oracle::check_subset_solver(
      300, 12, 97, 1e-9,
      [](const std::vector<SubsetCandidate>& candidates, double v_mu_a,
         const AccuracyLossParams& al, int exact_max) {
        return famus::solve_client_subset(candidates, v_mu_a, al, exact_max);
      });
  EXPECT_EQ(report.failures, 0)
      << (report.messages.empty() ? "" : report.messages.front());
}

TEST(ServerObjectiveTerms, HandComputedInstance) {
  ControllerParams params;  // v 10, mu 0.1/0.9, epsilon 0.8
  SelectionDecision sel;
  sel.objective = 3.0;
  const ServerObjective o =
      famus::server_objective(params, /*fee=*/1.0, /*queue=*/2.0,
                              /*reputation=*/0.5, sel);
  EXPECT_DOUBLE_EQ(o.if_delegated, (0.9 * 10.0 * 1.0 - 2.0) + 3.0);
  EXPECT_DOUBLE_EQ(o.if_idle, 2.0 * 0.8 * 0.5 + 10.0 * 0.1 * 1.1);
  EXPECT_DOUBLE_EQ(o.delta(), 10.0 - 1.9);
}

TEST(ServerObjectiveTerms, HugeBacklogForcesDelegation) {
  ControllerParams params;
  SelectionDecision sel;
  sel.objective = 3.0;
  const ServerObjective o =
      famus::server_objective(params, 1.0, 1000.0, 0.5, sel);
  EXPECT_LT(o.if_delegated, o.if_idle);
}

TEST(ServerObjectiveTerms, ZeroVLeavesOnlyQueueTerms) {
  ControllerParams params;
  params.v = 0.0;
  SelectionDecision sel;  // with v = 0 the solver's objective is pure price
  sel.objective = 0.0;
  const ServerObjective o =
      famus::server_objective(params, 5.0, 3.0, 0.5, sel);
  EXPECT_DOUBLE_EQ(o.if_delegated, -3.0);
  EXPECT_DOUBLE_EQ(o.if_idle, 3.0 * 0.8 * 0.5);
}

TEST(DelegationAction, RejectsMalformedAssignments) {
  EXPECT_THROW(DelegationAction(3, {0, 0}), std::invalid_argument);
  EXPECT_THROW(DelegationAction(3, {5}), std::invalid_argument);
  EXPECT_THROW(DelegationAction(3, {-2}), std::invalid_argument);
  const DelegationAction ok(3, {2, -1});
  EXPECT_TRUE(ok.delegated(2));
  EXPECT_FALSE(ok.delegated(0));
  EXPECT_EQ(ok.num_tasks(), 2);
}

TEST(DelegateFamus, PicksTheSmallestDeltas) {
  const std::vector<famus::ServerObjective> objectives = {
      plain_delta(-1.0), plain_delta(5.0), plain_delta(-2.0)};
  const std::vector<double> queues = {0.0, 0.0, 0.0};
  const DelegationChoice choice =
      famus::delegate_famus(objectives, queues, 2, /*force_assign_all=*/true);
  ASSERT_EQ(choice.servers.size(), 2u);
  EXPECT_EQ(choice.servers[0], 2);
  EXPECT_EQ(choice.servers[1], 0);
  EXPECT_DOUBLE_EQ(choice.total_objective, -2.0 + -1.0);  // idle branch is 0
}

TEST(DelegateFamus, ForcedModeAssignsAllTasksRegardlessOfSign) {
  const std::vector<famus::ServerObjective> objectives = {
      plain_delta(1.0), plain_delta(2.0), plain_delta(3.0)};
  const std::vector<double> queues = {0.0, 0.0, 0.0};
  const DelegationChoice forced =
      famus::delegate_famus(objectives, queues, 3, true);
  EXPECT_EQ(forced.servers.size(), 3u);

  const DelegationChoice lazy =
      famus::delegate_famus(objectives, queues, 3, false);
  EXPECT_TRUE(lazy.servers.empty());  // every delta is positive
}

TEST(DelegateFamus, TiesBreakTowardTheLongerBacklog) {
  const std::vector<famus::ServerObjective> objectives = {
      plain_delta(0.0), plain_delta(0.0), plain_delta(0.0)};
  const std::vector<double> queues = {1.0, 3.0, 2.0};
  const DelegationChoice choice =
      famus::delegate_famus(objectives, queues, 1, true);
  ASSERT_EQ(choice.servers.size(), 1u);
  EXPECT_EQ(choice.servers[0], 1);
}

TEST(DelegateFamus, MatchesExhaustiveSearchOnRandomTables) {
  const famus::oracle::CheckReport report = famus::oracle::check_delegation(
      100, 8, 101,
      [](const std::vector<famus::ServerObjective>& objectives,
         const std::vector<double>& queues, int tasks, bool forced) {
        return famus::delegate_famus(objectives, queues, tasks, forced);
      });
  EXPECT_EQ(report.failures, 0)
      << (report.messages.empty() ? "" : report.messages.front());
}

TEST(Policies, FixedSubsetNeverChanges) {
  const std::vector<ServerSite> sites = three_sites();
  ControllerParams params;
  params.tasks = 2;
  const std::vector<int> subset = {2, 0};
  const PolicyDecision first = famus::decide_fixed(sites, params, subset);
  const PolicyDecision second = famus::decide_fixed(sites, params, subset);
  EXPECT_EQ(first.delegation.servers, second.delegation.servers);
  EXPECT_EQ(first.delegation.servers, subset);
}

TEST(Policies, IdleServersRecruitNobody) {
  const std::vector<ServerSite> sites = three_sites();
  ControllerParams params;
  params.tasks = 1;
  const PolicyDecision d = famus::decide_famus(sites, params);
  ASSERT_EQ(d.delegation.servers.size(), 1u);
  for (int s = 0; s < 3; ++s) {
    if (s == d.delegation.servers[0]) continue;
    EXPECT_TRUE(d.selection[static_cast<std::size_t>(s)].clients.empty());
    EXPECT_DOUBLE_EQ(d.selection[static_cast<std::size_t>(s)].mass, 0.0);
  }
}

TEST(Policies, EveryPolicyEmitsAtMostOneTaskPerServer) {
  const std::vector<ServerSite> sites = three_sites();
  ControllerParams params;
  params.tasks = 2;
  Rng rng(7);
  const std::vector<PolicyDecision> decisions = {
      famus::decide_famus(sites, params),
      famus::decide_ncf(sites, params),
      famus::decide_greedy(sites, params),
      famus::decide_random(sites, params, rng),
      famus::decide_ea(sites, params, rng),
      famus::decide_fixed(sites, params, {0, 1}),
  };
  for (const PolicyDecision& d : decisions) {
    const std::set<int> unique(d.delegation.servers.begin(),
                               d.delegation.servers.end());
    EXPECT_EQ(unique.size(), d.delegation.servers.size());
    EXPECT_LE(d.delegation.servers.size(), 2u);
    for (int s : d.delegation.servers) {
      EXPECT_GE(s, 0);
      EXPECT_LT(s, 3);
    }
  }
}

TEST(Policies, NcfIsTheLargeVLimitOfFamus) {
  // Queue terms are O(Q) while the cost terms scale with V; once V dwarfs
  // every backlog the two policies must rank servers identically.
  const std::vector<ServerSite> sites = three_sites();
  ControllerParams params;
  params.tasks = 2;
  params.v = 1e9;
  const PolicyDecision famus_d = famus::decide_famus(sites, params);
  const PolicyDecision ncf_d = famus::decide_ncf(sites, params);
  std::vector<int> a = famus_d.delegation.servers;
  std::vector<int> b = ncf_d.delegation.servers;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
  for (int s : a)
    EXPECT_EQ(famus_d.selection[static_cast<std::size_t>(s)].clients,
              ncf_d.selection[static_cast<std::size_t>(s)].clients);
}

TEST(Policies, UniformSubsetHitsTheMarginalFrequency) {
  const int n = 5;
  const int k = 2;
  const int releases = 20000;
  std::vector<int> counts(n, 0);
  Rng rng(67);
  for (int t = 0; t < releases; ++t) {
    const std::vector<int> subset = famus::detail::uniform_subset(n, k, rng);
    EXPECT_EQ(subset.size(), static_cast<std::size_t>(k));
    for (int s : subset) counts[static_cast<std::size_t>(s)] += 1;
  }
  for (int s = 0; s < n; ++s) {
    const double freq =
        static_cast<double>(counts[static_cast<std::size_t>(s)]) / releases;
    EXPECT_NEAR(freq, static_cast<double>(k) / n, 0.02);
  }
}
