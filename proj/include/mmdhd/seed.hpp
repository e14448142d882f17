#pragma once

// Substream seeding.
//
// Every random draw in the library comes from an engine seeded with
//
//     derive_seed(master, tag, index)
//         = splitmix64(splitmix64(splitmix64(master) ^ tag) ^ index)
//
// where splitmix64 is the finalizer of Steele, Lea & Flood's SplitMix64
// (x += 0x9E3779B97F4A7C15, then two xor-shift-multiply rounds). The tag
// names the purpose of the stream (X sample, Y sample, rotation, repetition,
// permutation, ...) and the index enumerates streams of that purpose. Because
// a substream depends only on (master, tag, index), results never depend on
// which thread draws it or in which order.

#include <cstdint>
#include <random>

namespace mmdhd {

using Seed = std::uint64_t;

/// Purpose tags; values are part of the reproducibility contract.
enum class StreamTag : std::uint64_t {
    sample_x = 0x5841ULL,
    sample_y = 0x5942ULL,
    rotation = 0x524fULL,
    repetition = 0x5250ULL,
    permutation = 0x5045ULL,
    pair_chunk = 0x4348ULL,
    pilot = 0x5049ULL,
};

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

[[nodiscard]] constexpr Seed derive_seed(Seed master, StreamTag tag, std::uint64_t index = 0) noexcept {
    return splitmix64(splitmix64(splitmix64(master) ^ static_cast<std::uint64_t>(tag)) ^ index);
}

using Engine = std::mt19937_64;

[[nodiscard]] inline Engine make_engine(Seed master, StreamTag tag, std::uint64_t index = 0) {
    return Engine{derive_seed(master, tag, index)};
}

}  // namespace mmdhd
