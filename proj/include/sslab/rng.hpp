#pragma once

#include <cstdint>
#include <limits>

namespace sslab {

/**
 * @brief Counter-based pseudo random generator with cheap stream splitting.
 *
 * Output k of a stream is a 64-bit finalizer applied to (key + k * gamma),
 * so a stream is fully described by its key and position. split(id)
 * derives a new key from (key, id) only, independent of how many values the
 * parent has already produced. Particle filters use this to give every
 * (time step, particle index) pair its own stream, which makes threaded
 * and serial execution produce identical draws.
 *
 * Satisfies UniformRandomBitGenerator.
 */
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept;

    /// Standard normal via Box-Muller (no cached second variate).
    double normal() noexcept;

    /// Normal with the given mean and variance; variance 0 returns mean.
    double normal(double mean, double variance) noexcept;

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept;

    [[nodiscard]] Rng split(std::uint64_t stream_id) const noexcept;

    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
    [[nodiscard]] std::uint64_t position() const noexcept { return counter_; }

private:
    struct KeyTag {};
    Rng(std::uint64_t key, KeyTag) noexcept : key_(key) {}

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace sslab
