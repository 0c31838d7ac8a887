#pragma once

// Deterministic random number streams.
//
// Every random draw in the simulator comes from a stream derived from the
// master seed plus a purpose tag and up to two entity indices (client id,
// slot, ...). Streams are therefore independent of each other and of the
// order in which the engine happens to consume them: changing the policy or
// the client count never perturbs the mobility or fading draws of an
// unrelated entity. All distributions are built by hand on top of a 64-bit
// mixer so that output does not depend on the standard library
// implementation.

#include <cmath>
#include <cstdint>
#include <limits>

namespace famus {

namespace detail {

// splitmix64 finalizer (Steele, Lea, Flood). Good avalanche, cheap.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace detail

// Counter-based generator: state advances through the splitmix64 sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1). 53 mantissa bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) {
    // Multiply-shift rejection-free mapping; bias is < 2^-64 * n, irrelevant
    // for simulation-sized n.
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller. Stateless across calls: both uniforms are
  // drawn fresh and the second output is discarded.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = std::numeric_limits<double>::min();
    const double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Exponential with unit mean.
  double exponential() {
    double u = uniform();
    if (u >= 1.0) u = std::nextafter(1.0, 0.0);
    return -std::log1p(-u);
  }

 private:
  std::uint64_t state_;
};

// Derives the seeds of all per-entity streams from one master seed.
struct StreamFactory {
  std::uint64_t master = 1;

  static constexpr std::uint64_t kInit = 0x01;      // initial client placement
  static constexpr std::uint64_t kProfile = 0x02;   // per-client constants
  static constexpr std::uint64_t kMobility = 0x03;  // per (client, slot) step
  static constexpr std::uint64_t kFading = 0x04;    // per (client, slot) fade
  static constexpr std::uint64_t kPolicy = 0x05;    // per-slot policy draws

  std::uint64_t derive(std::uint64_t tag, std::uint64_t a = 0,
                       std::uint64_t b = 0) const {
    using detail::mix64;
    return mix64(mix64(mix64(master ^ (tag * 0xd6e8feb86659fd93ull)) ^ a) ^
                 mix64(b));
  }

  Rng client_init(std::uint64_t client) const {
    return Rng(derive(kInit, client));
  }
  Rng client_profile(std::uint64_t client) const {
    return Rng(derive(kProfile, client));
  }
  Rng mobility(std::uint64_t client, std::uint64_t slot) const {
    return Rng(derive(kMobility, client, slot));
  }
  Rng fading(std::uint64_t client, std::uint64_t slot) const {
    return Rng(derive(kFading, client, slot));
  }
  Rng policy(std::uint64_t slot) const { return Rng(derive(kPolicy, slot)); }
};

}  // namespace famus
