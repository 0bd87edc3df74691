#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dysr {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// All randomness in the library fans out from one master seed through named
/// sub-streams ("negatives", "nonevents", "init", "synth", ...) so components
/// can be re-seeded independently in tests.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::string_view name) {
  const std::uint64_t h = fnv1a64(name);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace dysr
