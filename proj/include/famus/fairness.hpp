#pragma once

// Service quality, beta reputation, delegation-fairness queues, and Jain's
// fairness index.
//
// A server's service quality in a slot is sigma_n = exp(-AL_n / sum_j AL_j):
// relatively low accuracy loss means quality near 1. Quality at or above the
// threshold sigma_0 counts as a positive service event in the server's beta
// reputation (positive+1)/(positive+negative+2). Each server also carries a
// virtual backlog that grows by eps * reputation whenever the server sits
// idle and drains by one while it holds a task; a controller that keeps these
// backlogs stable spreads delegations in proportion to earned reputation.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace famus {

struct ReputationState {
  double positive = 0.0;  // accumulated positive service events
  double negative = 0.0;  // accumulated negative service events

  double reputation() const {
    return (positive + 1.0) / (positive + negative + 2.0);
  }
};

// sigma_i = exp(-al_i / sum(al)). Requires a nonnegative vector with at least
// one positive entry; an all-zero slot carries no service to assess and the
// caller must skip it.
inline std::vector<double> service_quality(const std::vector<double>& al) {
  double total = 0.0;
  for (double a : al) {
    if (a < 0.0 || !std::isfinite(a))
      throw std::invalid_argument("service_quality: losses must be >= 0");
    total += a;
  }
  if (!(total > 0.0))
    throw std::invalid_argument(
        "service_quality: all-zero losses leave quality undefined");
  std::vector<double> sigma(al.size());
  for (std::size_t i = 0; i < al.size(); ++i)
    sigma[i] = std::exp(-al[i] / total);
  return sigma;
}

inline void update_reputation(ReputationState& state, double sigma,
                              double threshold) {
  if (sigma >= threshold)
    state.positive += 1.0;
  else
    state.negative += 1.0;
}

struct VirtualQueue {
  double backlog = 0.0;
};

// backlog' = max(backlog + eps * g * [idle] - [delegated], 0)
inline void update_queue(VirtualQueue& q, bool delegated, double reputation,
                         double epsilon) {
  const double arrival = delegated ? 0.0 : epsilon * reputation;
  const double service = delegated ? 1.0 : 0.0;
  q.backlog = std::max(q.backlog + arrival - service, 0.0);
}

struct StabilityStat {
  double time_avg = 0.0;
  double slope = 0.0;  // least-squares slope over the last half of the series
};

inline StabilityStat stability_stat(const std::vector<double>& backlog) {
  StabilityStat s;
  if (backlog.empty()) return s;
  double sum = 0.0;
  for (double b : backlog) sum += b;
  s.time_avg = sum / static_cast<double>(backlog.size());

  const std::size_t n = backlog.size();
  const std::size_t start = n / 2;
  const std::size_t m = n - start;
  if (m < 2) return s;
  // Least squares of backlog against the slot index, centered for stability.
  const double t_mean = (m - 1) / 2.0;
  double y_mean = 0.0;
  for (std::size_t i = start; i < n; ++i) y_mean += backlog[i];
  y_mean /= static_cast<double>(m);
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = start; i < n; ++i) {
    const double dt = static_cast<double>(i - start) - t_mean;
    sxy += dt * (backlog[i] - y_mean);
    sxx += dt * dt;
  }
  s.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  return s;
}

// Per-server delegation counts and accumulated service quality, the inputs of
// the fairness index.
struct FairnessLedger {
  std::vector<long> delegations;
  std::vector<double> sigma_sum;

  explicit FairnessLedger(int servers = 0)
      : delegations(static_cast<std::size_t>(servers), 0),
        sigma_sum(static_cast<std::size_t>(servers), 0.0) {}

  void record(int server, double sigma) {
    delegations.at(static_cast<std::size_t>(server)) += 1;
    sigma_sum.at(static_cast<std::size_t>(server)) += sigma;
  }
};

// Jain's index of the ratios x_i: (sum x)^2 / (n sum x^2).
inline double jfi(const std::vector<double>& ratios) {
  if (ratios.empty()) throw std::invalid_argument("jfi: empty input");
  double sum = 0.0;
  double sq = 0.0;
  for (double x : ratios) {
    if (x < 0.0) throw std::invalid_argument("jfi: ratios must be >= 0");
    sum += x;
    sq += x * x;
  }
  if (!(sq > 0.0))
    throw std::invalid_argument("jfi: all ratios zero, index undefined");
  return sum * sum / (static_cast<double>(ratios.size()) * sq);
}

// Ledger ratios x_n / sigma_n. A never-delegated server contributes ratio 0;
// zero accumulated quality with a positive count is an accounting error.
inline double jfi(const FairnessLedger& ledger) {
  std::vector<double> ratios(ledger.delegations.size(), 0.0);
  for (std::size_t i = 0; i < ledger.delegations.size(); ++i) {
    if (ledger.delegations[i] == 0) continue;
    if (!(ledger.sigma_sum[i] > 0.0))
      throw std::domain_error(
          "jfi: delegations recorded without accumulated service quality");
    ratios[i] = static_cast<double>(ledger.delegations[i]) /
                ledger.sigma_sum[i];
  }
  return jfi(ratios);
}

}  // namespace famus
