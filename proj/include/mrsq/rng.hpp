#pragma once

#include <cstdint>
#include <random>

namespace mrsq {

/// Random engine used throughout the library. Every stream is derived from a
/// (seed, stream index) pair so work items can be generated in any order.
using SeededRng = std::mt19937_64;

inline SeededRng make_stream(std::uint64_t seed, std::uint64_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x4d525351u};
    return SeededRng(seq);
}

/// SplitMix64 finalizer; used to derive sub-seeds from a global seed and a tag.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept
{
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace mrsq
