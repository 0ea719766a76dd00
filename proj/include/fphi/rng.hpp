#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace fphi {

// Counter-based stream: Philox4x32-10 keyed by (master_seed), with the
// 128-bit counter split as (draw counter, stream_id). Every primitive draw
// consumes exactly one counter tick, so the stream position is a single
// 64-bit integer: trivially checkpointable and independent of scheduling.
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t counter = 0;

  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : master_seed(seed), stream_id(stream) {}

  std::array<std::uint32_t, 4> next_block() {
    std::uint32_t c0 = static_cast<std::uint32_t>(counter);
    std::uint32_t c1 = static_cast<std::uint32_t>(counter >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream_id);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream_id >> 32);
    std::uint32_t k0 = static_cast<std::uint32_t>(master_seed);
    std::uint32_t k1 = static_cast<std::uint32_t>(master_seed >> 32);
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = 0xD2511F53ull * c0;
      std::uint64_t p1 = 0xCD9E8D57ull * c2;
      std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      std::uint32_t n0 = hi1 ^ c1 ^ k0;
      std::uint32_t n1 = lo1;
      std::uint32_t n2 = hi0 ^ c3 ^ k1;
      std::uint32_t n3 = lo0;
      c0 = n0; c1 = n1; c2 = n2; c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    ++counter;
    return {c0, c1, c2, c3};
  }

  // Uniform in (0,1): 53 random bits, offset so 0 is excluded.
  double uniform() {
    auto b = next_block();
    std::uint64_t u64 = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
    return (static_cast<double>(u64 >> 11) + 0.5) * 0x1.0p-53;
  }

  // One standard normal pair per block (Box-Muller).
  void normal_pair(double& z0, double& z1) {
    auto b = next_block();
    std::uint64_t u64a = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
    std::uint64_t u64b = (static_cast<std::uint64_t>(b[2]) << 32) | b[3];
    double u1 = (static_cast<double>(u64a >> 11) + 0.5) * 0x1.0p-53;
    double u2 = (static_cast<double>(u64b >> 11) + 0.5) * 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    double t = 6.283185307179586476925286766559 * u2;
    z0 = r * std::cos(t);
    z1 = r * std::sin(t);
  }

  double normal() {
    double z0, z1;
    normal_pair(z0, z1);
    return z0;
  }
};

} // namespace fphi
