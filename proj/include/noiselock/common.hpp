#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace noiselock {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

inline double db_from_power_ratio(double r) { return 10.0 * std::log10(r); }
inline double power_ratio_from_db(double db) { return std::pow(10.0, db / 10.0); }

// Wrap x into [-period/2, period/2). Used for distances between phases that
// are only defined modulo the error-signal period (pi for homodyne, 2*pi for
// coherent fringes).
inline double wrap_phase(double x, double period) {
    double y = std::fmod(x, period);
    if (y < -period / 2.0) y += period;
    if (y >= period / 2.0) y -= period;
    return y;
}

inline void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

// FNV-1a, used to stamp output files with a digest of the generating config.
inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace noiselock
