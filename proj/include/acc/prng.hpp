#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace acc {

/// SplitMix64 (Steele, Lea & Flood). The exact constants are part of the
/// on-disk reproducibility contract: changing them changes every compiled
/// record.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    constexpr std::uint64_t state() const noexcept { return state_; }

private:
    std::uint64_t state_;
};

/// Fisher-Yates over [1..n]: i runs from n-1 down to 1, j = next() mod (i+1).
/// Returns 1-based original indices in their new order.
std::vector<std::size_t> permute(std::size_t n, std::uint64_t seed);

/// FNV-1a, 64-bit.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Per-example seed: base XOR fnv1a64(trajectory id).
constexpr std::uint64_t example_seed(std::uint64_t base_seed, std::string_view trajectory_id) noexcept {
    return base_seed ^ fnv1a64(trajectory_id);
}

} // namespace acc
