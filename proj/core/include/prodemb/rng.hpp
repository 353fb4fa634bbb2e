#pragma once

#include <cstdint>

namespace prodemb {

/// splitmix64 over a (seed, salt, index) key. Every stochastic choice in
/// the project derives its engine seed through this, so state never
/// needs to be carried between consumers.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt,
                              std::uint64_t index = 0) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1) + index;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace prodemb
