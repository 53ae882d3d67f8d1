#pragma once

#include <cstdint>
#include <random>

namespace tvab {

/// Independent RNG stream keyed on (seed, index, salt). Used wherever a value
/// must be a pure function of its coordinates, e.g. the graph at iteration k.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index,
                                  std::uint64_t salt = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(salt),
                    static_cast<std::uint32_t>(salt >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace tvab
