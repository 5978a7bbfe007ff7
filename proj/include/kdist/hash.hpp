#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace kdist {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

/// First 8 bytes of the SHA-256 digest, big-endian. Used to derive seeds.
std::uint64_t sha256_u64(std::string_view data);

/// Portable seeded generator. Draws are identical across standard libraries,
/// unlike std::uniform_int_distribution.
class DeterministicRng {
public:
    explicit DeterministicRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next();

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound);

    /// Uniform real in [0, 1).
    double unit();

private:
    std::uint64_t state_;
};

/// Seed derived from a base seed and a label, stable across platforms.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

/// Fisher-Yates shuffle driven by DeterministicRng.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, DeterministicRng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace kdist
