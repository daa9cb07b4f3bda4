#ifndef SNLS_RNG_HPP
#define SNLS_RNG_HPP

#include <cmath>
#include <cstdint>
#include <utility>

namespace snls {

// Counter-based random streams.
//
// Every random quantity in the project is a pure function of
// (master seed, derivation lanes, counter). Nothing is stored and no
// generator state advances, so any draw can be regenerated in O(1) from
// its address. That is what makes noise lattices with ~1e8 virtual
// entries affordable and makes results bitwise independent of thread
// scheduling: a draw's value depends only on its address, never on who
// asked first.

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// splitmix64 finalizer (Steele/Lea/Flood). Full avalanche on 64 bits.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Key derivation: fold lanes into the master seed one finalizer round per
// lane. Lanes keep unrelated streams (paths, purposes) apart.
inline std::uint64_t derive_key(std::uint64_t master, std::uint64_t lane) {
  return mix64((master ^ kGolden) + kGolden * (lane + 1));
}

inline std::uint64_t derive_key(std::uint64_t master, std::uint64_t lane0,
                                std::uint64_t lane1) {
  return derive_key(derive_key(master, lane0), lane1);
}

// k-th output of the splitmix64 sequence seeded at `key`; equivalently a
// counter-mode hash. Passes the usual statistical batteries in this form.
inline std::uint64_t bits_at(std::uint64_t key, std::uint64_t ctr) {
  return mix64(key + kGolden * (ctr + 1));
}

// Uniform in (0,1]: 53 random mantissa bits, zero excluded so logs are safe.
inline double uniform_oc(std::uint64_t bits) {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

// Uniform in [0,1).
inline double uniform_co(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// A keyed stream of standard normals, addressed by counter.
struct GaussianStream {
  std::uint64_t key = 0;

  GaussianStream() = default;
  explicit GaussianStream(std::uint64_t k) : key(k) {}

  // Two independent N(0,1) draws per counter via Box-Muller. Branch-free,
  // so cost is deterministic (one log, one sqrt, one sincos).
  std::pair<double, double> normal_pair(std::uint64_t ctr) const {
    const double u1 = uniform_oc(bits_at(key, 2 * ctr));
    const double u2 = uniform_co(bits_at(key, 2 * ctr + 1));
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 6.283185307179586476925286766559 * u2;
    return {r * std::cos(th), r * std::sin(th)};
  }

  // Single N(0,1). Discards the partner draw; use normal_pair when both
  // halves are consumed (complex amplitudes do).
  double normal(std::uint64_t ctr) const { return normal_pair(ctr).first; }

  std::uint64_t bits(std::uint64_t ctr) const { return bits_at(key, ctr); }
  double uniform(std::uint64_t ctr) const { return uniform_co(bits_at(key, ctr)); }
};

// Purpose tags for key derivation, so streams for different jobs never
// overlap even at equal path indices.
enum class StreamPurpose : std::uint64_t {
  noise_path = 1,
  initial_field = 2,
  validation = 3,
  test_vectors = 4,
};

inline GaussianStream stream_for(std::uint64_t master, StreamPurpose purpose,
                                 std::uint64_t index) {
  return GaussianStream(
      derive_key(master, static_cast<std::uint64_t>(purpose), index));
}

}  // namespace snls

#endif  // SNLS_RNG_HPP
