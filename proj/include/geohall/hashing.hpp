#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace geohall {

// Portable hashing and range reduction. std::uniform_int_distribution is
// implementation-defined, so every draw that must be reproducible across
// toolchains goes through uniform_int() below on top of std::mt19937_64.

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) noexcept {
    return splitmix64(seed ^ splitmix64(v));
}

// Maps a 64-bit hash to [0, 1) using the top 53 bits.
constexpr double unit_interval(std::uint64_t h) noexcept {
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

using Rng = std::mt19937_64;

// Unbiased integer in [lo, hi] (inclusive).
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
    const auto range = static_cast<std::uint64_t>(hi - lo) + 1ULL;
    if (range == 0) return lo + static_cast<std::int64_t>(rng());  // full 64-bit range
    const std::uint64_t limit = Rng::max() - (Rng::max() % range);
    std::uint64_t draw = rng();
    while (draw >= limit) draw = rng();
    return lo + static_cast<std::int64_t>(draw % range);
}

}  // namespace geohall
