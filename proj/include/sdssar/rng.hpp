#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace sdssar {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a base seed and a tuple of salts
/// (epoch, tile index, purpose tag, ...). Every random consumer in the
/// pipeline gets its own derived seed so results do not depend on call order.
constexpr std::uint64_t derive_seed(std::uint64_t base,
                                    std::initializer_list<std::uint64_t> salts) noexcept {
    std::uint64_t h = mix64(base);
    for (auto s : salts) h = mix64(h ^ mix64(s + 0x632be59bd9b4e019ULL));
    return h;
}

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

}  // namespace sdssar
