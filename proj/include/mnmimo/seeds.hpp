#pragma once

#include <cstdint>

namespace mnmimo {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Stateless seed split: the i-th output (0-based) of a SplitMix64 stream
/// seeded with `master`, i.e. mix64(master + (i + 1) * 0x9E3779B97F4A7C15).
/// Drop i of a run uses split_seed(master, i); streams inside a drop use
/// split_seed(drop_seed, stream_id).
constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t i) noexcept {
    return mix64(master + (i + 1) * 0x9E3779B97F4A7C15ULL);
}

} // namespace mnmimo
