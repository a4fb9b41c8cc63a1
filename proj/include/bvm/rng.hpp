#pragma once

#include <cstdint>
#include <random>

namespace bvm {

using Rng = std::mt19937_64;

/// Independent generator for sub-stream `stream` of a master seed. Equal
/// (seed, stream) pairs always yield the same sequence.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x6276u};
  return Rng(seq);
}

}  // namespace bvm
