#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mccop {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for a substream identified by a base seed and a path of keys
/// (sample index, step, method tag, ...). Order of keys matters.
inline std::uint64_t substream_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t s = mix64(base);
    for (auto k : keys) s = mix64(s ^ mix64(k + 0x632be59bd9b4e019ULL));
    return s;
}

inline Rng substream(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
    return Rng(substream_seed(base, keys));
}

/// Stable 64-bit tag for short ASCII names (FNV-1a).
constexpr std::uint64_t tag(const char* s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (; *s; ++s) h = (h ^ static_cast<unsigned char>(*s)) * 0x100000001b3ULL;
    return h;
}

}  // namespace mccop
