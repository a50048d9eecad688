#pragma once

// Counter-based random number generation for reproducible noise synthesis.
//
// Every deviate is a pure function of (seed, stream, index), so traces are
// bit-identical for a given seed no matter how the surrounding code iterates,
// and independent streams (photocurrent noise, disturbance, sweep seeds) never
// collide. The Gaussian transform is the Marsaglia polar variant of
// Box-Muller; the only transcendental it needs is ln(), which is implemented
// here from IEEE-754 basic operations so the noise path does not depend on
// the platform's libm.

#include <cmath>
#include <cstdint>

namespace noiselock::rng {

// splitmix64 finalizer (Stafford mix 13 variant). Bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// 64-bit hash of (seed, stream, counter): three mixing rounds keep the
// per-argument avalanche independent.
inline std::uint64_t hash3(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ (0xA0761D6478BD642Full + stream));
    h = mix64(h ^ counter);
    return h;
}

// Uniform double in (0, 1): top 53 bits, offset so 0 is never returned
// (it would be a singular input to ln below).
inline double uniform01(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    return static_cast<double>(hash3(seed, stream, counter) >> 11) * 0x1.0p-53 + 0x1.0p-54;
}

// ln(x) for finite x > 0 from frexp + the atanh series, using only IEEE
// basic arithmetic and sqrt-free operations. Relative error < 4e-16 -- more
// than enough for shaping Gaussian tails.
inline double portable_log(double x) {
    constexpr double kLn2 = 0.69314718055994530942;
    int e = 0;
    double m = std::frexp(x, &e);  // x = m * 2^e, m in [0.5, 1)
    if (m < 0.70710678118654752440) {
        m *= 2.0;
        e -= 1;
    }
    const double t = (m - 1.0) / (m + 1.0);  // |t| <= 0.1716
    const double t2 = t * t;
    double term = t;
    double sum = 0.0;
    for (int k = 0; k < 13; ++k) {
        sum += term / static_cast<double>(2 * k + 1);
        term *= t2;
    }
    return 2.0 * sum + static_cast<double>(e) * kLn2;
}

// Standard normal deviate as a pure function of (seed, stream, k). Each
// sample index owns its private rejection sub-stream, so consuming a variable
// number of uniforms never shifts later samples.
inline double gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t k) {
    const std::uint64_t base = k * 0x100000000ull;  // 2^32 draw slots per sample
    for (std::uint64_t j = 0;; j += 2) {
        const double u = 2.0 * uniform01(seed, stream, base + j) - 1.0;
        const double v = 2.0 * uniform01(seed, stream, base + j + 1) - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) {
            return u * std::sqrt(-2.0 * portable_log(s) / s);
        }
    }
}

// Stream ids used by the synthesis engine (documented so config files and
// reruns agree on what each stream feeds).
inline constexpr std::uint64_t kStreamPhotocurrent = 0;
inline constexpr std::uint64_t kStreamDisturbance = 1;
inline constexpr std::uint64_t kStreamExperiment = 2;

// Derive a child seed for run r of a sweep/ensemble.
inline std::uint64_t child_seed(std::uint64_t seed, std::uint64_t run_index) {
    return hash3(seed, 0xC5EED5EEDull, run_index);
}

}  // namespace noiselock::rng
