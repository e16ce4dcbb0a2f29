#pragma once

#include <cmath>
#include <cstdint>

#include "eccg/errors.hpp"

// Deterministic random streams for experiments.
//
// All randomness in the library flows through xoshiro256++ seeded via
// SplitMix64; normal draws use the Box-Muller transform on that stream.
// A given (purpose, seed) pair therefore produces the same values on every
// run and platform with IEEE-754 doubles and the same libm build.

namespace eccg {

/// SplitMix64 step function; used to expand a user seed into stream state
/// and to derive independent sub-seeds in a fixed order.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// xoshiro256++ generator (Blackman & Vigna). 64-bit output, 256-bit state.
class Xoshiro256PlusPlus {
public:
    explicit Xoshiro256PlusPlus(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& word : state_) word = sm.next();
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform double strictly inside (0, 1) (midpoints of the 2^53 grid).
    double uniform_open() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Unbiased integer in [0, bound) by rejection sampling.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw InvalidArgumentError("below: bound must be positive");
        std::uint64_t x = 0;
        std::uint64_t r = 0;
        do {
            x = next();
            r = x % bound;
        } while (x - r > std::uint64_t(0) - bound);
        return r;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
};

/// Standard-normal draws: Box-Muller over one xoshiro256++ stream.
/// Pairs are consumed in order; the sine component is cached as the spare.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = rng_.uniform_open(); // strictly positive: log finite
        const double u2 = rng_.uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = kTwoPi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    static constexpr double kTwoPi = 6.283185307179586476925286766559;

    Xoshiro256PlusPlus rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace eccg
