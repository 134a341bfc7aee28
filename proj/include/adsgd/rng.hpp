#pragma once

#include <cstdint>
#include <random>

namespace adsgd {

using Seed = std::uint64_t;

// splitmix64; used to derive independent substreams from (seed, indices).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline Seed mix_seed(Seed seed, std::uint64_t a) {
    return splitmix64(seed ^ splitmix64(a));
}

inline Seed mix_seed(Seed seed, std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(seed, a), b);
}

inline std::mt19937_64 make_rng(Seed seed) {
    return std::mt19937_64(splitmix64(seed));
}

inline std::mt19937_64 make_rng(Seed seed, std::uint64_t stream) {
    return std::mt19937_64(mix_seed(seed, stream));
}

}  // namespace adsgd
