#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace parawave {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// A generator is fully determined by a 64-bit key (the user seed) and a
/// 64-bit stream id; the remaining 64 counter bits index blocks inside the
/// stream. Distinct stream ids give statistically independent sequences, so
/// every realization/particle can own its stream without coordination.
/// Satisfies UniformRandomBitGenerator and works with <random> distributions.
class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    Philox4x32(std::uint64_t seed, std::uint64_t stream) noexcept;

    result_type operator()() noexcept;

    /// Skips `n` 32-bit outputs.
    void discard(std::uint64_t n) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    /// The raw 10-round bijection; exposed for known-answer tests.
    static Counter block(Counter ctr, Key key) noexcept;

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

private:
    void refill() noexcept;

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t block_index_ = 0;
    Counter buffer_{};
    unsigned used_ = 4;
};

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Folds a sequence of indices (realization, ladder rung, purpose tag, ...)
/// into one stream id. Order matters.
std::uint64_t stream_id(std::initializer_list<std::uint64_t> parts) noexcept;

/// Uniform double in [0, 1) with 53 random bits.
double uniform01(Philox4x32& rng) noexcept;

/// Standard normal variate (Box-Muller, no cached state).
double standard_normal(Philox4x32& rng) noexcept;

/// Purpose tags for stream derivation; keeps streams of different
/// subsystems disjoint under the same user seed.
enum class StreamPurpose : std::uint64_t {
    Medium = 0x6d656469,
    Particle = 0x70617274,
    Bootstrap = 0x626f6f74,
    Initial = 0x696e6974,
    Test = 0x74657374,
};

}  // namespace parawave
