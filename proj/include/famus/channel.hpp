#pragma once

// Wireless link model and per-client participation cost.
//
// Gain is log-distance path loss times Rayleigh (squared-envelope) fading,
// rates are Shannon capacity over the server's bandwidth share, and a
// client's cost of joining one training round is
//
//   cost = alpha * rate + beta * data_mass
//
// The cost is unit-blind arithmetic; the engine passes rates in Mbit/s and
// data masses in units of `data_unit_mb` (default 100 MB) so both terms are
// order-comparable. A client's private type is the reciprocal of its cost:
// cheap clients have high types.

#include <cmath>
#include <stdexcept>

#include "famus/geometry.hpp"
#include "famus/rng.hpp"

namespace famus {

struct LinkParams {
  double bandwidth_hz = 1.0e7;       // per-server total bandwidth B_n
  double tx_power_w = 0.1;           // client transmit power
  double noise_psd_w_hz = 3.98e-21;  // thermal noise density (-174 dBm/Hz)
  double pathloss_exponent = 4.5;    // dense NLOS deployment
  double ref_gain = 1.0e-3;          // gain at the reference distance of 1 m
  double min_distance_m = 1.0;       // clamp to keep the power law finite
};

struct ClientProfile {
  int id = 0;
  double alpha = 1.0e-3;      // cost per Mbit/s of upload rate
  double beta = 2.0e-3;       // cost per data mass unit of training data
  double data_size_mb = 150;  // d_m, fixed per client
  double data_mass = 1.5;     // d_m in data_unit_mb units, set by the engine
};

struct ClientCostReport {
  double rate = 0.0;        // rate the cost was computed from
  double cost = 0.0;        // alpha * rate + beta * data
  double type_value = 0.0;  // 1 / cost
  int type_index = 0;       // grid level, 0 until a grid is available
};

// Squared fading envelope |h|^2 for a Rayleigh channel: Exp(1).
inline double draw_fading(Rng& rng) { return rng.exponential(); }

// Path loss times fading. Distances below the reference clamp to it.
inline double channel_gain(const LinkParams& link, const Vec2& server_pos,
                           const Vec2& client_pos, double fading_sq) {
  if (fading_sq < 0.0)
    throw std::invalid_argument("channel_gain: negative fading power");
  const double d = std::max(distance(server_pos, client_pos),
                            link.min_distance_m);
  return link.ref_gain * std::pow(d, -link.pathloss_exponent) * fading_sq;
}

// Shannon capacity in bit/s over the given bandwidth share.
inline double shannon_rate(double share_hz, double tx_power_w, double gain,
                           double noise_psd_w_hz) {
  if (share_hz <= 0.0)
    throw std::invalid_argument("shannon_rate: nonpositive bandwidth");
  const double snr = tx_power_w * gain / (noise_psd_w_hz * share_hz);
  return share_hz * std::log2(1.0 + snr);
}

// Equal split of the server bandwidth among `count` users.
inline double bandwidth_share(double bandwidth_hz, int count) {
  if (count <= 0)
    throw std::invalid_argument("bandwidth_share: no users to share among");
  return bandwidth_hz / count;
}

inline ClientCostReport participation_cost(const ClientProfile& profile,
                                           double rate) {
  ClientCostReport r;
  r.rate = rate;
  r.cost = profile.alpha * rate + profile.beta * profile.data_mass;
  if (!(r.cost > 0.0) || !std::isfinite(r.cost))
    throw std::domain_error("participation_cost: degenerate nonpositive cost");
  r.type_value = 1.0 / r.cost;
  return r;
}

}  // namespace famus
