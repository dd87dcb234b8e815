#pragma once

#include <cstdint>
#include <random>

namespace rank2s {

using Engine = std::mt19937_64;

/// Independent engine for stream `stream` of a run seeded with `seed`.
/// Extra keys allow nested streams (e.g. scenario, replicate).
inline Engine make_stream(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(sub),
                    static_cast<std::uint32_t>(sub >> 32)};
  return Engine(seq);
}

}  // namespace rank2s
