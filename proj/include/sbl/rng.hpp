#pragma once

#include <cstdint>
#include <random>

namespace sbl {

// splitmix64, used to derive independent sub-stream seeds from one master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for a named sub-stream (trace synthesis, detector sampling, ...).
// Chained calls give per-chunk seeds that stay reproducible regardless of
// how many chunks are drawn from each other stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream_tag) {
    return splitmix64(splitmix64(master) ^ splitmix64(stream_tag));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

} // namespace sbl
