#pragma once

#include <cstdint>

namespace labmarket {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Stateless draw keyed by (seed, agent, stream). Uniform on [0, 1).
inline constexpr double counter_uniform(std::uint64_t seed, std::uint64_t agent,
                                        std::uint64_t stream) noexcept {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ agent);
  h = splitmix64(h ^ (stream * 0xD1B54A32D192ED03ull));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace labmarket
