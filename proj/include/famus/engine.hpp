#pragma once

// Time-slotted simulation of the delegation network.
//
// Every slot clients move and cluster membership is recomputed. Every
// release slot (one per task period) the active policy delegates tasks and
// recruits clients, recruits decide whether to join against the posted menu,
// costs are realized with actual bandwidth shares, and all servers are
// assessed for service quality, which feeds reputations and the fairness
// ledger. Backlogs, reputations, and the occupancy bits advance once per
// release; the slots a task spans carry no further queue motion, so emitted
// rows replay the recursion exactly.
//
// The first `warmup_slots` slots run under the random policy while the type
// grid and the per-(server, client) level histograms are seeded; menus and
// the grid freeze at warm-up end, level histograms keep accruing. Metrics
// cover only the measured (post-warm-up) part of the run.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "famus/channel.hpp"
#include "famus/config.hpp"
#include "famus/contract.hpp"
#include "famus/controller.hpp"
#include "famus/fairness.hpp"
#include "famus/geometry.hpp"
#include "famus/mobility.hpp"
#include "famus/rng.hpp"

namespace famus {

// One emitted metrics row. server == -1 marks the per-slot system aggregate.
// queue and reputation are the pre-update values entering the slot, and
// delegated is the occupancy bit used by that update, so queue trajectories
// replay exactly from emitted rows.
struct SlotRow {
  std::int64_t slot = 0;
  int server = 0;
  int delegated = 0;  // per-server occupancy bit; count on the system row
  double queue = 0.0;
  double reputation = 0.0;
  double sigma = 0.0;  // service quality, 0 on non-release slots
  double al = 0.0;     // assessed accuracy loss, 0 on non-release slots
  int participants = 0;
  double rewards = 0.0;
  double realized_cost = 0.0;
  double expected_cost = 0.0;
  double participant_cost = 0.0;  // actual-bandwidth true costs of joiners
};

struct RunSummary {
  int servers = 0;
  std::int64_t measured_slots = 0;
  std::int64_t releases = 0;          // measured release slots
  double time_avg_cost = 0.0;         // realized, averaged over all slots
  double time_avg_expected_cost = 0.0;
  double time_avg_al = 0.0;           // averaged over release slots
  double jfi = 0.0;                   // NaN when nothing was delegated
  double rewards_total = 0.0;
  std::vector<double> queue_time_avg;
  std::vector<double> queue_slope;    // trend over the last half of the run
  std::vector<double> queue_final;
  double max_queue_slope = 0.0;
  // Max over all slots of (Lyapunov increment - drift bound); nonpositive
  // when the bound holds throughout.
  double drift_max_violation = -std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> delegations;  // per server, measured releases
  std::vector<double> sigma_sum;
  std::int64_t ic_violations = 0;     // joiners whose level is not top-valued
};

class Simulation {
 public:
  explicit Simulation(SimConfig cfg) : cfg_(std::move(cfg)), area_(100, 200, 2, 5) {
    const std::vector<std::string> errors = cfg_.validate();
    if (!errors.empty()) {
      std::string joined = "invalid config:";
      for (const std::string& e : errors) joined += "\n  - " + e;
      throw std::invalid_argument(joined);
    }
    area_ = cfg_.make_area();
    streams_ = StreamFactory{cfg_.seed};
    period_ = cfg_.period_slots();
    epsilon_ = cfg_.epsilon_value();
    sigma0_ = cfg_.sigma0_value();

    ctrl_.v = cfg_.balance_v;
    ctrl_.mu_accuracy = cfg_.mu_accuracy;
    ctrl_.mu_payment = cfg_.mu_payment;
    ctrl_.epsilon = epsilon_;
    ctrl_.tasks = cfg_.tasks;
    ctrl_.force_assign_all = cfg_.force_assign_all;
    ctrl_.al.tau = cfg_.tau;
    ctrl_.al.slot = cfg_.slot_seconds;
    ctrl_.al.al_max = cfg_.al_max_value();
    ctrl_.subset_exact_max = cfg_.subset_exact_max;

    kind_ = parse_policy(cfg_.policy);
    levels_ = cfg_.scenario == kScenarioUniform ? 1 : cfg_.type_levels;
    quantile_ = cfg_.scenario == kScenarioUniform ? 0.5 : cfg_.top_quantile;

    MobilityParams mob = cfg_.mobility;
    mob.slot_seconds = cfg_.slot_seconds;
    mobility_ = mob;

    clients_ = init_ppp(area_, cfg_.clients, streams_, mobility_);
    profiles_.resize(static_cast<std::size_t>(cfg_.clients));
    for (int m = 0; m < cfg_.clients; ++m) {
      // Second lane of the profile stream; the first feeds the mean heading
      // inside init_ppp.
      Rng rng{streams_.derive(StreamFactory::kProfile,
                              static_cast<std::uint64_t>(m), 1)};
      ClientProfile& p = profiles_[static_cast<std::size_t>(m)];
      p.id = m;
      p.alpha = rng.uniform(cfg_.alpha_range.lo, cfg_.alpha_range.hi);
      p.beta = rng.uniform(cfg_.beta_range.lo, cfg_.beta_range.hi);
      p.data_size_mb = rng.uniform(cfg_.data_size_mb.lo, cfg_.data_size_mb.hi);
      p.data_mass = p.data_size_mb / cfg_.data_unit_mb;
    }

    server_pos_.reserve(static_cast<std::size_t>(cfg_.servers));
    for (int n = 0; n < cfg_.servers; ++n)
      server_pos_.push_back(area_.cell_center(n));

    queue_.assign(static_cast<std::size_t>(cfg_.servers), 0.0);
    reputation_.assign(static_cast<std::size_t>(cfg_.servers),
                       ReputationState{});
    busy_until_.assign(static_cast<std::size_t>(cfg_.servers), 0);
    ledger_ = FairnessLedger(cfg_.servers);
    level_counts_.assign(
        static_cast<std::size_t>(cfg_.servers) *
            static_cast<std::size_t>(std::max(cfg_.clients, 1)),
        {});

    // The fixed baseline pins its server subset up front, from a stream no
    // slot ever touches.
    Rng fixed_rng = streams_.policy(~std::uint64_t{0});
    fixed_subset_ =
        detail::uniform_subset(cfg_.servers, cfg_.tasks, fixed_rng);
  }

  static PolicyKind parse_policy(const std::string& name) {
    if (name == "famus") return PolicyKind::famus;
    if (name == "random") return PolicyKind::random_pick;
    if (name == "greedy") return PolicyKind::greedy;
    if (name == "ncf") return PolicyKind::ncf;
    if (name == "ea") return PolicyKind::ea;
    if (name == "fixed") return PolicyKind::fixed;
    throw std::invalid_argument("unknown policy \"" + name + "\"");
  }

  const SimConfig& config() const { return cfg_; }
  const std::optional<TypeGrid>& grid() const { return grid_; }
  const std::optional<ContractMenu>& menu() const { return menu_; }
  const std::vector<std::vector<double>>& queue_history() const {
    return queue_history_;
  }
  const std::vector<int>& fixed_subset() const { return fixed_subset_; }

  // Top-level probability the controller believes for client m in cluster n.
  double top_level_belief(int server, int client) const {
    const auto& counts =
        level_counts_[static_cast<std::size_t>(server) *
                          static_cast<std::size_t>(cfg_.clients) +
                      static_cast<std::size_t>(client)];
    if (counts.empty()) return 1.0 / static_cast<double>(levels_);
    std::uint64_t total = 0;
    for (std::uint32_t c : counts) total += c;
    if (total == 0) return 1.0 / static_cast<double>(levels_);
    return static_cast<double>(counts.back()) / static_cast<double>(total);
  }

  RunSummary run(const std::function<void(const SlotRow&)>& sink = {}) {
    const int n_servers = cfg_.servers;
    RunSummary sum;
    sum.servers = n_servers;
    queue_history_.assign(static_cast<std::size_t>(n_servers), {});

    double cost_acc = 0.0;
    double expected_acc = 0.0;
    double al_acc = 0.0;

    for (std::int64_t t = 0; t < cfg_.horizon_slots; ++t) {
      const bool measured = t >= cfg_.warmup_slots;
      const bool release = (t % period_) == 0;

      for (int m = 0; m < cfg_.clients; ++m) {
        Rng rng = streams_.mobility(static_cast<std::uint64_t>(m),
                                    static_cast<std::uint64_t>(t));
        step_gauss_markov(clients_[static_cast<std::size_t>(m)], area_,
                          mobility_, rng);
      }
      const std::vector<std::vector<int>> members =
          cluster_membership(clients_, area_);

      std::vector<SlotRow> rows(static_cast<std::size_t>(n_servers));
      for (int n = 0; n < n_servers; ++n) {
        SlotRow& r = rows[static_cast<std::size_t>(n)];
        r.slot = t;
        r.server = n;
        r.queue = queue_[static_cast<std::size_t>(n)];
        r.reputation = reputation_[static_cast<std::size_t>(n)].reputation();
      }

      std::vector<double> sigma;  // filled on release slots
      if (release) {
        step_release(t, members, rows, sigma, measured);
      }

      // Queue and reputation recursions advance once per task release; the
      // slots in between hold every backlog still and carry no occupancy.
      // Between releases the Lyapunov value is constant, so the drift bound
      // holds there with zero increment.
      const double theta = 1.0;
      if (release) {
        double l_before = 0.0;
        double rhs = static_cast<double>(n_servers) * theta;
        for (int n = 0; n < n_servers; ++n) {
          const std::size_t i = static_cast<std::size_t>(n);
          const bool chosen = busy_until_[i] > t;
          rows[i].delegated = chosen ? 1 : 0;
          l_before += 0.5 * queue_[i] * queue_[i];
          rhs += queue_[i] * (chosen ? -1.0
                                     : epsilon_ * rows[i].reputation);
        }
        double l_after = 0.0;
        for (int n = 0; n < n_servers; ++n) {
          const std::size_t i = static_cast<std::size_t>(n);
          VirtualQueue q{queue_[i]};
          update_queue(q, rows[i].delegated != 0, rows[i].reputation,
                       epsilon_);
          queue_[i] = q.backlog;
          l_after += 0.5 * queue_[i] * queue_[i];
        }
        const double violation = (l_after - l_before) - rhs;
        if (violation > sum.drift_max_violation)
          sum.drift_max_violation = violation;

        for (int n = 0; n < n_servers; ++n)
          update_reputation(reputation_[static_cast<std::size_t>(n)],
                            sigma[static_cast<std::size_t>(n)], sigma0_);
      }

      if (measured) {
        ++sum.measured_slots;
        SlotRow system;
        system.slot = t;
        system.server = -1;
        double al_mean = 0.0;
        for (int n = 0; n < n_servers; ++n) {
          const SlotRow& r = rows[static_cast<std::size_t>(n)];
          system.delegated += r.delegated;
          system.queue += r.queue;
          system.participants += r.participants;
          system.rewards += r.rewards;
          system.realized_cost += r.realized_cost;
          system.expected_cost += r.expected_cost;
          system.participant_cost += r.participant_cost;
          al_mean += r.al;
          queue_history_[static_cast<std::size_t>(n)].push_back(r.queue);
        }
        if (release) {
          system.al = al_mean / static_cast<double>(n_servers);
          al_acc += system.al;
          ++sum.releases;
        }
        cost_acc += system.realized_cost;
        expected_acc += system.expected_cost;
        sum.rewards_total += system.rewards;
        if (sink) {
          for (const SlotRow& r : rows) sink(r);
          sink(system);
        }
      }
    }

    if (!grid_) build_contract_state();

    if (sum.measured_slots > 0) {
      cost_acc /= static_cast<double>(sum.measured_slots);
      expected_acc /= static_cast<double>(sum.measured_slots);
    }
    sum.time_avg_cost = cost_acc;
    sum.time_avg_expected_cost = expected_acc;
    sum.time_avg_al =
        sum.releases > 0 ? al_acc / static_cast<double>(sum.releases) : 0.0;

    sum.queue_time_avg.resize(static_cast<std::size_t>(n_servers), 0.0);
    sum.queue_slope.resize(static_cast<std::size_t>(n_servers), 0.0);
    sum.queue_final.resize(static_cast<std::size_t>(n_servers), 0.0);
    sum.max_queue_slope = -std::numeric_limits<double>::infinity();
    for (int n = 0; n < n_servers; ++n) {
      const std::size_t i = static_cast<std::size_t>(n);
      const StabilityStat st = stability_stat(queue_history_[i]);
      sum.queue_time_avg[i] = st.time_avg;
      sum.queue_slope[i] = st.slope;
      if (!queue_history_[i].empty()) sum.queue_final[i] = queue_[i];
      if (st.slope > sum.max_queue_slope) sum.max_queue_slope = st.slope;
    }

    sum.delegations.assign(ledger_.delegations.begin(),
                           ledger_.delegations.end());
    sum.sigma_sum = ledger_.sigma_sum;
    bool any = false;
    for (std::int64_t d : sum.delegations) any = any || d > 0;
    sum.jfi = any ? jfi(ledger_) : std::numeric_limits<double>::quiet_NaN();
    sum.ic_violations = ic_violations_;
    return sum;
  }

 private:
  struct MemberReport {
    int client = 0;
    double gain = 0.0;
    ClientCostReport nominal;
  };

  void build_contract_state() {
    if (grid_ || warm_values_.empty()) return;
    std::vector<double> pool;
    pool.reserve(warm_values_.size());
    for (const auto& [pair_index, value] : warm_values_) pool.push_back(value);
    grid_ = build_type_grid(pool, levels_, quantile_);
    menu_ = optimal_contract(*grid_);
    for (const auto& [pair_index, value] : warm_values_) {
      auto& counts = level_counts_[pair_index];
      if (counts.empty())
        counts.assign(static_cast<std::size_t>(levels_), 0);
      ++counts[static_cast<std::size_t>(grid_->level_of(value) - 1)];
    }
    warm_values_.clear();
    warm_values_.shrink_to_fit();
  }

  void observe_level(int server, int client, double type_value) {
    const std::size_t idx = static_cast<std::size_t>(server) *
                                static_cast<std::size_t>(cfg_.clients) +
                            static_cast<std::size_t>(client);
    if (!grid_) {
      warm_values_.emplace_back(idx, type_value);
      return;
    }
    auto& counts = level_counts_[idx];
    if (counts.empty()) counts.assign(static_cast<std::size_t>(levels_), 0);
    ++counts[static_cast<std::size_t>(grid_->level_of(type_value) - 1)];
  }

  void step_release(std::int64_t t,
                    const std::vector<std::vector<int>>& members,
                    std::vector<SlotRow>& rows, std::vector<double>& sigma,
                    bool measured) {
    const int n_servers = cfg_.servers;

    // Nominal link reports under an equal split among current members.
    std::vector<std::vector<MemberReport>> reports(
        static_cast<std::size_t>(n_servers));
    for (int n = 0; n < n_servers; ++n) {
      const std::vector<int>& mem = members[static_cast<std::size_t>(n)];
      if (mem.empty()) continue;
      const double share =
          bandwidth_share(cfg_.link.bandwidth_hz, static_cast<int>(mem.size()));
      auto& out = reports[static_cast<std::size_t>(n)];
      out.reserve(mem.size());
      for (int m : mem) {
        Rng rng = streams_.fading(static_cast<std::uint64_t>(m),
                                  static_cast<std::uint64_t>(t));
        MemberReport rep;
        rep.client = m;
        rep.gain = channel_gain(cfg_.link, server_pos_[static_cast<std::size_t>(n)],
                                clients_[static_cast<std::size_t>(m)].pos,
                                draw_fading(rng));
        const double rate_mbit =
            shannon_rate(share, cfg_.link.tx_power_w, rep.gain,
                         cfg_.link.noise_psd_w_hz) /
            1.0e6;
        rep.nominal =
            participation_cost(profiles_[static_cast<std::size_t>(m)], rate_mbit);
        out.push_back(rep);
      }
    }

    if (!grid_ && t >= cfg_.warmup_slots) build_contract_state();
    for (int n = 0; n < n_servers; ++n)
      for (const MemberReport& rep : reports[static_cast<std::size_t>(n)])
        observe_level(n, rep.client, rep.nominal.type_value);

    // Policy snapshot and decision. Warm-up always runs the random policy.
    const PolicyKind kind = measured ? kind_ : PolicyKind::random_pick;
    const bool contract_based =
        kind == PolicyKind::famus || kind == PolicyKind::ncf ||
        kind == PolicyKind::ea || kind == PolicyKind::fixed;
    const double reward_top =
        menu_ ? menu_->item(static_cast<int>(menu_->items.size())).reward : 0.0;

    std::vector<ServerSite> sites(static_cast<std::size_t>(n_servers));
    for (int n = 0; n < n_servers; ++n) {
      ServerSite& site = sites[static_cast<std::size_t>(n)];
      site.fee = cfg_.server_fee;
      site.queue = queue_[static_cast<std::size_t>(n)];
      site.reputation = reputation_[static_cast<std::size_t>(n)].reputation();
      for (const MemberReport& rep : reports[static_cast<std::size_t>(n)]) {
        const ClientProfile& prof =
            profiles_[static_cast<std::size_t>(rep.client)];
        site.direct.push_back(SubsetCandidate{
            rep.client, prof.data_mass,
            ctrl_.v * ctrl_.mu_payment * rep.nominal.cost});
        if (menu_) {
          const double pi = top_level_belief(n, rep.client);
          if (pi > 0.0)
            site.contract.push_back(SubsetCandidate{
                rep.client, pi * prof.data_mass,
                ctrl_.v * ctrl_.mu_payment * pi * reward_top});
        }
      }
    }

    Rng policy_rng = streams_.policy(static_cast<std::uint64_t>(t));
    PolicyDecision decision;
    switch (kind) {
      case PolicyKind::famus:
        decision = decide_famus(sites, ctrl_);
        break;
      case PolicyKind::ncf:
        decision = decide_ncf(sites, ctrl_);
        break;
      case PolicyKind::greedy:
        decision = decide_greedy(sites, ctrl_);
        break;
      case PolicyKind::random_pick:
        decision = decide_random(sites, ctrl_, policy_rng);
        break;
      case PolicyKind::ea:
        decision = decide_ea(sites, ctrl_, policy_rng);
        break;
      case PolicyKind::fixed:
        decision = decide_fixed(sites, ctrl_, fixed_subset_);
        break;
    }

    // Realization: recruits best-respond (contract) or accept at their
    // reported cost (direct); costs and service quality follow.
    std::vector<double> al_vec(static_cast<std::size_t>(n_servers), 0.0);
    const int top_level = levels_;
    for (int n = 0; n < n_servers; ++n) {
      const std::size_t i = static_cast<std::size_t>(n);
      SlotRow& row = rows[i];
      const bool delegated = decision.delegation.action.delegated(n);
      const SelectionDecision& sel = decision.selection[i];

      double mass = 0.0;
      double rewards = 0.0;
      double expected_rewards = 0.0;
      double expected_mass = 0.0;
      int joiners = 0;
      std::vector<const MemberReport*> joined;
      if (delegated && !sel.clients.empty()) {
        const auto& reps = reports[i];
        for (int client : sel.clients) {
          // Selection ids come from this cluster's candidates, so the lookup
          // always hits; reports are in ascending client order.
          const MemberReport* rep = nullptr;
          for (const MemberReport& r : reps)
            if (r.client == client) {
              rep = &r;
              break;
            }
          const ClientProfile& prof =
              profiles_[static_cast<std::size_t>(client)];
          if (contract_based) {
            const double pi = top_level_belief(n, client);
            expected_rewards += pi * reward_top;
            expected_mass += pi * prof.data_mass;
            const int level = grid_->level_of(rep->nominal.type_value);
            const std::optional<int> picked = best_response(*menu_, level);
            if (picked && menu_->item(*picked).participation == 1) {
              ++joiners;
              mass += prof.data_mass;
              rewards += menu_->item(*picked).reward;
              joined.push_back(rep);
              if (grid_->value(level) != grid_->value(top_level))
                ++ic_violations_;
            }
          } else {
            expected_rewards += rep->nominal.cost;
            expected_mass += prof.data_mass;
            ++joiners;
            mass += prof.data_mass;
            rewards += rep->nominal.cost;
            joined.push_back(rep);
          }
        }
      }

      al_vec[i] = accuracy_loss(delegated ? mass : 0.0, ctrl_.al);
      row.al = al_vec[i];
      row.participants = joiners;
      row.rewards = rewards;
      row.realized_cost =
          ctrl_.mu_payment * ((delegated ? cfg_.server_fee : 0.0) + rewards) +
          ctrl_.mu_accuracy * al_vec[i];
      row.expected_cost = expected_cluster_cost(
          ctrl_.mu_accuracy, ctrl_.mu_payment, cfg_.server_fee, delegated,
          expected_rewards, expected_mass, ctrl_.al);

      if (!joined.empty()) {
        const double share =
            bandwidth_share(cfg_.link.bandwidth_hz, joiners);
        for (const MemberReport* rep : joined) {
          const double rate_mbit =
              shannon_rate(share, cfg_.link.tx_power_w, rep->gain,
                           cfg_.link.noise_psd_w_hz) /
              1.0e6;
          row.participant_cost +=
              participation_cost(
                  profiles_[static_cast<std::size_t>(rep->client)], rate_mbit)
                  .cost;
        }
      }
    }

    sigma = service_quality(al_vec);
    for (int n = 0; n < n_servers; ++n)
      rows[static_cast<std::size_t>(n)].sigma =
          sigma[static_cast<std::size_t>(n)];

    for (int server : decision.delegation.servers) {
      busy_until_[static_cast<std::size_t>(server)] = t + period_;
      if (measured)
        ledger_.record(server, sigma[static_cast<std::size_t>(server)]);
    }
  }

  SimConfig cfg_;
  Area area_;
  StreamFactory streams_{0};
  MobilityParams mobility_;
  ControllerParams ctrl_;
  PolicyKind kind_ = PolicyKind::famus;
  int levels_ = 1;
  double quantile_ = 0.95;
  int period_ = 10;
  double epsilon_ = 0.8;
  double sigma0_ = 0.9;

  std::vector<ClientProfile> profiles_;
  std::vector<ClientState> clients_;
  std::vector<Vec2> server_pos_;
  std::vector<double> queue_;
  std::vector<ReputationState> reputation_;
  std::vector<std::int64_t> busy_until_;
  std::optional<TypeGrid> grid_;
  std::optional<ContractMenu> menu_;
  std::vector<std::pair<std::size_t, double>> warm_values_;
  std::vector<std::vector<std::uint32_t>> level_counts_;
  std::vector<int> fixed_subset_;
  FairnessLedger ledger_{1};
  std::vector<std::vector<double>> queue_history_;
  std::int64_t ic_violations_ = 0;
};

}  // namespace famus
