#pragma once

// Client placement and movement.
//
// Clients start as a binomial point process (M uniform points, i.e. a Poisson
// process conditioned on its count) and move by the Gauss-Markov model: the
// velocity is an AR(1) process around a per-client mean velocity, and
// positions reflect specularly off the area edges.

#include <vector>

#include "famus/geometry.hpp"
#include "famus/rng.hpp"

namespace famus {

struct MobilityParams {
  double memory = 0.85;          // AR(1) coefficient, 0 = memoryless, 1 = linear
  double mean_speed = 1.0;       // m/s, magnitude of the per-client mean velocity
  double perturb_std = 0.25;     // m/s, std of the white perturbation per axis
  double slot_seconds = 0.1;     // integration step
};

struct ClientState {
  int id = 0;
  Vec2 pos;
  Vec2 vel;
  Vec2 mean_vel;  // asymptotic mean of the velocity process
};

// M uniform points in the area. Per-client streams keep the first M clients
// of a larger population identical to a smaller one, which couples runs that
// differ only in client count.
inline std::vector<ClientState> init_ppp(const Area& area, int count,
                                         const StreamFactory& streams,
                                         const MobilityParams& params) {
  if (count < 0) throw std::invalid_argument("init_ppp: negative count");
  std::vector<ClientState> clients;
  clients.reserve(static_cast<std::size_t>(count));
  for (int m = 0; m < count; ++m) {
    Rng init = streams.client_init(static_cast<std::uint64_t>(m));
    Rng profile = streams.client_profile(static_cast<std::uint64_t>(m));
    ClientState c;
    c.id = m;
    c.pos = {init.uniform(0.0, area.width()), init.uniform(0.0, area.height())};
    const double theta = profile.uniform(0.0, 6.283185307179586);
    c.mean_vel = {params.mean_speed * std::cos(theta),
                  params.mean_speed * std::sin(theta)};
    c.vel = c.mean_vel;
    clients.push_back(c);
  }
  return clients;
}

namespace detail {

// Folds x into [0, span] mirror-wise and flips the velocity once per fold.
inline void reflect_axis(double& x, double& v, double span) {
  while (x < 0.0 || x > span) {
    if (x < 0.0) {
      x = -x;
      v = -v;
    } else {
      x = 2.0 * span - x;
      v = -v;
    }
  }
}

}  // namespace detail

// One Gauss-Markov step:
//   v' = eta v + (1 - eta) vbar + sqrt(1 - eta^2) w,   w ~ N(0, sigma^2 I)
// then position integration with specular reflection at the edges.
inline void step_gauss_markov(ClientState& c, const Area& area,
                              const MobilityParams& params, Rng& rng) {
  const double eta = params.memory;
  const double noise = std::sqrt(std::max(0.0, 1.0 - eta * eta));
  c.vel.x = eta * c.vel.x + (1.0 - eta) * c.mean_vel.x +
            noise * rng.normal(0.0, params.perturb_std);
  c.vel.y = eta * c.vel.y + (1.0 - eta) * c.mean_vel.y +
            noise * rng.normal(0.0, params.perturb_std);
  c.pos.x += c.vel.x * params.slot_seconds;
  c.pos.y += c.vel.y * params.slot_seconds;
  detail::reflect_axis(c.pos.x, c.vel.x, area.width());
  detail::reflect_axis(c.pos.y, c.vel.y, area.height());
}

// Client ids grouped by covering cluster. Every client lands in exactly one
// group, so the group sizes always sum to the client count.
inline std::vector<std::vector<int>> cluster_membership(
    const std::vector<ClientState>& clients, const Area& area) {
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(area.cells()));
  for (const ClientState& c : clients)
    groups[static_cast<std::size_t>(area.cluster_of(c.pos))].push_back(c.id);
  return groups;
}

}  // namespace famus
