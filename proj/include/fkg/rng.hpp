#pragma once

#include <array>
#include <cstdint>

namespace fkg {

/// Philox4x32-10 block function (Salmon et al., SC'11).
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) noexcept {
    constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
        ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
               static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        key[0] += kW0;
        key[1] += kW1;
    }
    return ctr;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Independent random streams drawn within one sweep.
enum class Stream : std::uint32_t {
    Internal = 0,
    External = 1,
    Boundary = 2,
    ClusterCoin = 3,
    ClusterUniform = 4,
    Init = 5,
    Test = 15,
};

/// Counter-based generator keyed by (seed, chain id).
///
/// Every draw is a pure function of (seed, chain id, stream, sweep, item), so
/// the randomness attached to an edge or cluster does not depend on the order
/// in which a sweep visits them.
class CounterRng {
public:
    CounterRng() = default;
    CounterRng(std::uint64_t seed, std::uint64_t chain_id) noexcept {
        const std::uint64_t k = splitmix64(seed ^ splitmix64(chain_id + 0x5851F42D4C957F2Dull));
        key_ = {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    }

    /// Four 32-bit words for items 4*block .. 4*block+3.
    std::array<std::uint32_t, 4> block(Stream stream, std::uint64_t sweep, std::uint32_t block) const noexcept {
        return philox4x32({block, static_cast<std::uint32_t>(stream) | (static_cast<std::uint32_t>(sweep >> 32) << 4),
                           static_cast<std::uint32_t>(sweep), 0x6B8B4567u},
                          key_);
    }

    std::uint32_t bits32(Stream stream, std::uint64_t sweep, std::uint64_t item) const noexcept {
        return block(stream, sweep, static_cast<std::uint32_t>(item >> 2))[item & 3];
    }

    /// Uniform double in the open interval (0, 1) with 53 random bits.
    double uniform(Stream stream, std::uint64_t sweep, std::uint64_t item) const noexcept {
        const auto w = block(stream, sweep, static_cast<std::uint32_t>(item >> 1));
        const std::uint64_t hi = w[(item & 1) * 2];
        const std::uint64_t lo = w[(item & 1) * 2 + 1];
        const std::uint64_t x = ((hi << 32) | lo) >> 11;
        return (static_cast<double>(x) + 0.5) * 0x1.0p-53;
    }

private:
    std::array<std::uint32_t, 2> key_{};
};

/// Threshold t with P(bits32 < t) = p up to 2^-32.
inline std::uint64_t probability_threshold(double p) noexcept {
    if (!(p > 0)) return 0;
    if (p >= 1) return std::uint64_t{1} << 32;
    return static_cast<std::uint64_t>(p * 4294967296.0);
}

} // namespace fkg
