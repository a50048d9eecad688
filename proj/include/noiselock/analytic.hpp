#pragma once

// Closed-form reference results for the noise-locking scheme: dither error
// signals, the kurtosis noise floor of a variance measurement, and the
// predicted phase stability at each lock point. These are the oracles the
// Monte-Carlo chain is validated against.

#include <cmath>
#include <utility>
#include <vector>

#include "noiselock/common.hpp"
#include "noiselock/plant.hpp"

namespace noiselock::analytic {

// J0 and J1 by their power series, truncated once terms stop contributing.
// Accurate to ~1e-13 relative over |x| <= 10; no special-function library.
struct BesselJ01 {
    double j0 = 1.0;
    double j1 = 0.0;
};

inline BesselJ01 bessel_j0_j1(double x) {
    require(std::abs(x) <= 10.0, "bessel_j0_j1: series is validated for |x| <= 10");
    const double q = 0.25 * x * x;  // (x/2)^2
    double t0 = 1.0;                // m-th term of J0: (-1)^m q^m / (m!)^2
    double t1 = 0.5 * x;            // m-th term of J1: (-1)^m q^m (x/2) / (m!(m+1)!)
    double j0 = t0, j1 = t1;
    for (int m = 1; m <= 40; ++m) {
        t0 *= -q / (static_cast<double>(m) * m);
        t1 *= -q / (static_cast<double>(m) * (m + 1));
        j0 += t0;
        j1 += t1;
        if (std::abs(t0) < 1e-18 && std::abs(t1) < 1e-18) break;
    }
    return {j0, j1};
}

// Demodulated noise-power error signal for squeezed-vacuum homodyne readout:
//   eps(theta0) = b^2 J0(theta1) J1(theta1) sin(2 theta0) (V1 - V2) dOmega
// Zero crossings at theta0 = 0 and pi/2. Valid for small dither depth; the
// caller can consult ModulationSpec::small_depth_valid() before trusting it.
inline double error_signal_homodyne(const plant::QuadratureVariances& v, double theta0,
                                    double theta1, double lo_amp, double bandwidth) {
    const BesselJ01 b = bessel_j0_j1(theta1);
    return lo_amp * lo_amp * b.j0 * b.j1 * std::sin(2.0 * theta0) * (v.v1 - v.v2) * bandwidth;
}

// Coherent (fringe shot-noise) counterpart:
//   eps(theta0) = a b J1(theta1) cos(theta0) dOmega
// Zero crossings at the fringe extrema theta0 = pi/2 and 3pi/2.
inline double error_signal_coherent(const plant::CoherentPairSpec& p, double theta0,
                                    double theta1, double bandwidth) {
    return p.amp_a * p.amp_b * bessel_j0_j1(theta1).j1 * std::cos(theta0) * bandwidth;
}

// Standard deviation of a variance estimate of Gaussian noise ("noise on the
// noise"): kurtosis = sqrt(2) * V.
inline double kurtosis_of_variance(double v) {
    require(v >= 0.0, "kurtosis_of_variance: variance must be >= 0");
    return std::sqrt(2.0) * v;
}

enum class LockPoint { squeezed, anti_squeezed, dark_fringe, bright_fringe };

inline const char* lock_point_name(LockPoint p) {
    switch (p) {
        case LockPoint::squeezed: return "squeezed";
        case LockPoint::anti_squeezed: return "anti_squeezed";
        case LockPoint::dark_fringe: return "dark_fringe";
        case LockPoint::bright_fringe: return "bright_fringe";
    }
    return "?";
}

// Phase angle of each lock point in the conventions used here (homodyne lock
// points repeat mod pi, fringe lock points mod 2 pi).
inline double lock_point_angle(LockPoint p) {
    switch (p) {
        case LockPoint::squeezed: return kPi / 2.0;
        case LockPoint::anti_squeezed: return 0.0;
        case LockPoint::bright_fringe: return kPi / 2.0;
        case LockPoint::dark_fringe: return 3.0 * kPi / 2.0;
    }
    return 0.0;
}

struct StabilityPrediction {
    double delta_theta = 0.0;
    LockPoint lock_point = LockPoint::squeezed;
    double bandwidth_product = 1.0;
};

// Phase stability from measured variances, unit bandwidth product:
//   dtheta|pi/2 = sqrt(sqrt(2) v1 / (v2 - v1)),  dtheta|0 = sqrt(sqrt(2) v2 / (v2 - v1))
// The noise floor of the variance estimate is balanced against the quadratic
// variance change about the extremum lock point.
inline std::pair<double, double> stability_homodyne(const plant::QuadratureVariances& v) {
    require(v.v1 > 0.0, "stability_homodyne: v1 must be positive");
    require(v.v2 > v.v1, "stability_homodyne: requires v2 > v1 (v2 is the anti-squeezed variance)");
    const double dv = v.v2 - v.v1;
    const double rt2 = std::sqrt(2.0);
    return {std::sqrt(rt2 * v.v1 / dv), std::sqrt(rt2 * v.v2 / dv)};
}

// Same, written in terms of squeeze factor R, loss lambda, and the
// dimensionless bandwidth product N (independent noise samples within the
// error-point averaging time):
//   dtheta|sq   = sqrt((1 + lambda/(1-lambda) e^{2R}) / (e^{4R} - 1)) (2/N)^{1/4}
//   dtheta|anti = sqrt((1 + lambda/(1-lambda) e^{-2R}) / (1 - e^{-4R})) (2/N)^{1/4}
inline std::pair<double, double> stability_homodyne_scaled(double squeeze_factor,
                                                           double loss_lambda,
                                                           double bandwidth_product) {
    require(squeeze_factor > 0.0,
            "stability_homodyne_scaled: squeeze_factor must be > 0 (no lock point without "
            "quadrature asymmetry)");
    require(loss_lambda >= 0.0 && loss_lambda < 1.0,
            "stability_homodyne_scaled: loss_lambda must be in [0, 1)");
    require(bandwidth_product > 0.0,
            "stability_homodyne_scaled: bandwidth_product must be > 0");
    const double lr = loss_lambda / (1.0 - loss_lambda);
    const double bw = std::pow(2.0 / bandwidth_product, 0.25);
    const double sq =
        std::sqrt((1.0 + lr * std::exp(2.0 * squeeze_factor)) /
                  (std::exp(4.0 * squeeze_factor) - 1.0)) * bw;
    const double anti =
        std::sqrt((1.0 + lr * std::exp(-2.0 * squeeze_factor)) /
                  (1.0 - std::exp(-4.0 * squeeze_factor))) * bw;
    return {sq, anti};
}

// Coherent fringe locking: (dark, bright). The dark fringe wins when the
// arms are balanced; the bright-fringe noise floor carries the full power.
//   dtheta|dark   = sqrt(sqrt(2) (a - b)^2 / (a b)) (1/N)^{1/4}
//   dtheta|bright = sqrt(sqrt(2) (a + b)^2 / (a b)) (1/N)^{1/4}
inline std::pair<double, double> stability_coherent(const plant::CoherentPairSpec& p,
                                                    double bandwidth_product) {
    require(p.amp_a > 0.0 && p.amp_b > 0.0,
            "stability_coherent: both amplitudes must be positive");
    require(bandwidth_product > 0.0, "stability_coherent: bandwidth_product must be > 0");
    const double ab = p.amp_a * p.amp_b;
    const double dm = p.amp_a - p.amp_b;
    const double sm = p.amp_a + p.amp_b;
    const double rt2 = std::sqrt(2.0);
    const double bw = std::pow(1.0 / bandwidth_product, 0.25);
    return {std::sqrt(rt2 * dm * dm / ab) * bw, std::sqrt(rt2 * sm * sm / ab) * bw};
}

struct ErrorSignalCurve {
    std::vector<double> theta;
    std::vector<double> value;
};

inline ErrorSignalCurve error_signal_curve_homodyne(const plant::QuadratureVariances& v,
                                                    double theta1, double lo_amp,
                                                    double bandwidth, std::size_t n_points,
                                                    double span = kTwoPi) {
    require(n_points >= 2, "error_signal_curve_homodyne: need at least 2 points");
    ErrorSignalCurve c;
    c.theta.resize(n_points);
    c.value.resize(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double th = span * static_cast<double>(i) / static_cast<double>(n_points);
        c.theta[i] = th;
        c.value[i] = error_signal_homodyne(v, th, theta1, lo_amp, bandwidth);
    }
    return c;
}

inline ErrorSignalCurve error_signal_curve_coherent(const plant::CoherentPairSpec& p,
                                                    double theta1, double bandwidth,
                                                    std::size_t n_points,
                                                    double span = kTwoPi) {
    require(n_points >= 2, "error_signal_curve_coherent: need at least 2 points");
    ErrorSignalCurve c;
    c.theta.resize(n_points);
    c.value.resize(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double th = span * static_cast<double>(i) / static_cast<double>(n_points);
        c.theta[i] = th;
        c.value[i] = error_signal_coherent(p, th, theta1, bandwidth);
    }
    return c;
}

}  // namespace noiselock::analytic
