#pragma once
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include <ihtlab/errors.hpp>

namespace ihtlab {

/*
 * Philox4x32-10 counter-based generator.
 *
 * State is (key, counter). The 64-bit seed forms the key. The 128-bit
 * counter is split into a 64-bit stream id (high half) and a 64-bit block
 * index (low half), so two generators with the same seed and different
 * stream ids walk disjoint regions of the counter space and can never
 * produce overlapping output unless one of them draws 2^64 blocks.
 */
class Philox
{
public:
    using result_type = std::uint64_t;

    explicit Philox(std::uint64_t seed = 0, std::uint64_t stream = 0) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream)
    {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    std::uint64_t stream() const noexcept { return stream_; }
    std::uint64_t seed() const noexcept
    {
        return static_cast<std::uint64_t>(key_[0]) | (static_cast<std::uint64_t>(key_[1]) << 32);
    }

    /// Raw block function, exposed for known-answer tests.
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) noexcept
    {
        constexpr std::uint32_t m0 = 0xD2511F53u;
        constexpr std::uint32_t m1 = 0xCD9E8D57u;
        constexpr std::uint32_t w0 = 0x9E3779B9u;
        constexpr std::uint32_t w1 = 0xBB67AE85u;
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                key[0] += w0;
                key[1] += w1;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

    result_type operator()() noexcept
    {
        if (pos_ >= 4) refill();
        const std::uint64_t lo = buf_[pos_];
        const std::uint64_t hi = buf_[pos_ + 1];
        pos_ += 2;
        return lo | (hi << 32);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1].
    double uniform_open_zero() noexcept { return 1.0 - uniform(); }

    /// Uniform integer in [0, n), unbiased (rejection sampling).
    std::uint64_t below(std::uint64_t n) noexcept
    {
        if (n <= 1) return 0;
        const std::uint64_t limit = max() - (max() % n);
        std::uint64_t x;
        do { x = (*this)(); } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() noexcept
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open_zero();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    /// Random sign in {-1, +1}.
    double sign() noexcept { return ((*this)() >> 63) ? 1.0 : -1.0; }

private:
    void refill() noexcept
    {
        const std::array<std::uint32_t, 4> ctr{
            static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
            static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        buf_ = block(ctr, key_);
        ++block_;
        pos_ = 0;
    }

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

using Rng = Philox;

/// What a random stream is used for inside one experiment.
enum class StreamPurpose : std::uint8_t
{
    Generic = 0,
    Model = 1,      // ground-truth parameter draw
    TrainData = 2,  // training samples
    MonteCarlo = 3, // population risk estimation
    Solver = 4,     // power-iteration starts, support sampling
    Stability = 5,  // leave-one-out replacements and evaluation pool
};

/*
 * Packs (protocol, purpose, grid point, replicate) into a stream id.
 * Layout, high to low: 8 bits protocol | 8 bits purpose | 24 bits grid | 24 bits replicate.
 * Distinct tuples map to distinct ids as long as grid and replicate fit in 24 bits.
 */
inline std::uint64_t stream_id(std::uint8_t protocol, StreamPurpose purpose,
                               std::uint32_t grid_index, std::uint32_t replicate) noexcept
{
    constexpr std::uint64_t mask24 = (1u << 24) - 1;
    return (static_cast<std::uint64_t>(protocol) << 56) |
           (static_cast<std::uint64_t>(purpose) << 48) |
           ((grid_index & mask24) << 24) | (replicate & mask24);
}

/// k distinct indices from [0, n) in increasing order (Floyd's algorithm).
inline std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t k)
{
    if (k > n) throw DomainError("sample_without_replacement: k exceeds n");
    std::vector<char> taken(n, 0);
    for (std::size_t j = n - k; j < n; ++j) {
        const auto t = static_cast<std::size_t>(rng.below(j + 1));
        if (taken[t]) taken[j] = 1;
        else taken[t] = 1;
    }
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < n; ++i)
        if (taken[i]) out.push_back(i);
    return out;
}

} // namespace ihtlab
