#pragma once

#include <cmath>
#include <cstdint>

namespace rawpipe {

namespace detail {
inline std::uint64_t splitmix64_finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}
} // namespace detail

/// Deterministic 64-bit generator (SplitMix64). Same seed gives the same
/// sequence on every platform. Single-owner: never share across threads.
class Prng {
public:
    explicit Prng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return detail::splitmix64_finalize(state_);
    }

    /// Uniform real in [0, 1), 53 bits of randomness.
    double next_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Gaussian via Box-Muller on two uniform draws. Always consumes two
    /// draws so the stream position does not depend on sigma.
    double next_gaussian(double sigma) {
        const double u1 = next_real();
        const double u2 = next_real();
        const double r = std::sqrt(-2.0 * std::log(1.0 - u1)); // 1-u1 in (0,1]
        const double two_pi = 6.283185307179586476925286766559;
        return sigma * r * std::cos(two_pi * u2);
    }

private:
    std::uint64_t state_;
};

/// Derives an independent stream key from a seed and up to three indices.
/// Used for coordinate-indexed noise draws that must not depend on
/// traversal order.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a,
                                   std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t h = detail::splitmix64_finalize(seed ^ 0xA0761D6478BD642FULL);
    h = detail::splitmix64_finalize(h ^ a * 0xE7037ED1A0B428DBULL);
    h = detail::splitmix64_finalize(h ^ b * 0x8EBC6AF09C88C6E3ULL);
    h = detail::splitmix64_finalize(h ^ c * 0x589965CC75374CC3ULL);
    return h;
}

} // namespace rawpipe
