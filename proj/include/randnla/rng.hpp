#pragma once

// Counter-based random number generation.
//
// Every random value produced by the library is a pure function of a
// (key, counter) pair. The underlying generator is Philox4x32 with 10 rounds
// and the published Random123 round constants. One Philox block yields 128
// bits, which we split into two 64-bit words; element `c` of a stream lives in
// word `c % 2` of block `c / 2`. Element i of a stream therefore depends only
// on `counter_offset + i`, never on how many elements were generated before it
// or on which thread generated them.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace randnla {

struct RngKey {
    std::uint64_t key = 0;
    std::uint64_t counter_offset = 0;

    /// Same key, counter shifted forward by `n` elements.
    [[nodiscard]] constexpr RngKey advanced(std::uint64_t n) const noexcept {
        return {key, counter_offset + n};
    }

    /// A disjoint block of 2^40 counters reserved for sub-stream `id`.
    ///
    /// Drivers that need several independent operators carve them out of one
    /// user-facing seed with this; two sub-streams never share a counter unless
    /// a single sub-stream consumes more than 2^40 elements.
    [[nodiscard]] constexpr RngKey substream(std::uint64_t id) const noexcept {
        return {key, counter_offset + (id << 40)};
    }

    friend constexpr bool operator==(const RngKey&, const RngKey&) = default;
};

namespace philox {

inline constexpr std::uint32_t kMul0 = 0xD2511F53u;
inline constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
inline constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
inline constexpr int kRounds = 10;

using Block = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

constexpr void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

/// Philox4x32-10 block function.
constexpr Block philox4x32(Block ctr, Key k) noexcept {
    for (int r = 0; r < kRounds; ++r) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ k[0], lo1, hi0 ^ ctr[3] ^ k[1], lo0};
        k[0] += kWeyl0;
        k[1] += kWeyl1;
    }
    return ctr;
}

}  // namespace philox

/// The 64 raw random bits at absolute counter position `counter` under `key`.
constexpr std::uint64_t random_bits(std::uint64_t key, std::uint64_t counter) noexcept {
    const std::uint64_t block = counter >> 1;
    const philox::Block ctr{static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32), 0u, 0u};
    const philox::Key k{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
    const auto out = philox::philox4x32(ctr, k);
    const unsigned w = static_cast<unsigned>(counter & 1u) * 2u;
    return (static_cast<std::uint64_t>(out[w + 1]) << 32) | out[w];
}

/// Uniform double in [0, 1) with 53 random mantissa bits.
constexpr double bits_to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double uniform_at(const RngKey& k, std::uint64_t i) noexcept {
    return bits_to_unit(random_bits(k.key, k.counter_offset + i));
}

inline double rademacher_at(const RngKey& k, std::uint64_t i) noexcept {
    return uniform_at(k, i) < 0.5 ? -1.0 : 1.0;
}

/// Box-Muller on a uniform pair. u1 = 0 is clamped to the smallest positive double.
inline std::array<double, 2> box_muller(double u1, double u2) noexcept {
    if (u1 <= 0.0) u1 = std::numeric_limits<double>::denorm_min();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
}

/// Standard normal element i of the Gaussian stream keyed by k.
///
/// Gaussian element 2j and 2j+1 share the uniform pair at counters
/// (offset + 2j, offset + 2j + 1); even elements take the cosine branch.
inline double gaussian_at(const RngKey& k, std::uint64_t i) noexcept {
    const std::uint64_t base = i & ~std::uint64_t{1};
    const auto z = box_muller(uniform_at(k, base), uniform_at(k, base + 1));
    return z[i & 1u];
}

inline std::vector<double> uniform_stream(const RngKey& k, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = uniform_at(k, i);
    return out;
}

inline std::vector<double> gaussian_stream(const RngKey& k, std::size_t n) {
    std::vector<double> out(n);
    std::size_t i = 0;
    for (; i + 1 < n; i += 2) {
        const auto z = box_muller(uniform_at(k, i), uniform_at(k, i + 1));
        out[i] = z[0];
        out[i + 1] = z[1];
    }
    if (i < n) out[i] = box_muller(uniform_at(k, i), uniform_at(k, i + 1))[0];
    return out;
}

inline std::vector<double> rademacher_stream(const RngKey& k, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = rademacher_at(k, i);
    return out;
}

/// Uniform integer in [0, bound) from stream element i (bound > 0).
inline std::uint64_t uniform_index_at(const RngKey& k, std::uint64_t i, std::uint64_t bound) noexcept {
    const auto idx = static_cast<std::uint64_t>(uniform_at(k, i) * static_cast<double>(bound));
    return idx < bound ? idx : bound - 1;
}

/// SplitMix64 finalizer, used to derive unrelated keys from (seed, stream id).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// A fresh key for stream `id` of a user seed. Unlike RngKey::substream this
/// changes the key itself, so the result can be carved into sub-streams again.
constexpr RngKey derive_key(std::uint64_t seed, std::uint64_t id) noexcept {
    return {splitmix64(seed ^ splitmix64(id + 1)), 0};
}

/// Parses a decimal or 0x-prefixed hexadecimal 64-bit unsigned integer.
inline std::uint64_t parse_u64(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty integer literal");
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
        if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
            v = std::stoull(s.substr(2), &pos, 16);
            pos += 2;
        } else {
            if (s[0] == '-') throw std::invalid_argument("negative");
            v = std::stoull(s, &pos, 10);
        }
    } catch (const std::exception&) {
        throw std::invalid_argument("not a decimal or 0x-hex integer: '" + s + "'");
    }
    if (pos != s.size()) throw std::invalid_argument("trailing characters in integer literal: '" + s + "'");
    return v;
}

}  // namespace randnla
