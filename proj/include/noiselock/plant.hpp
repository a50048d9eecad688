#pragma once

// Optical plant: quadrature variances of a (lossy) squeezed vacuum state,
// homodyne projection, Michelson fringe powers, and the phase trajectory the
// interferometer actually follows (set point + dither + disturbance +
// control). Everything is in shot-noise-limited units: variance 1 == SNL.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "noiselock/common.hpp"
#include "noiselock/rng.hpp"

namespace noiselock::plant {

enum class SqueezedQuadrature { amplitude, phase };

struct SqueezedStateSpec {
    double squeeze_factor = 0.0;  // R >= 0; pure-state variances e^(-/+2R)
    SqueezedQuadrature squeezed = SqueezedQuadrature::amplitude;
    double loss_lambda = 0.0;  // total detection/propagation loss in [0, 1)

    void validate() const {
        require(squeeze_factor >= 0.0, "SqueezedStateSpec: squeeze_factor must be >= 0");
        require(loss_lambda >= 0.0 && loss_lambda < 1.0,
                "SqueezedStateSpec: loss_lambda must be in [0, 1)");
    }
};

struct QuadratureVariances {
    double v1 = 1.0;  // amplitude-quadrature variance
    double v2 = 1.0;  // phase-quadrature variance
};

// Loss mixes in vacuum: V -> (1 - lambda) V + lambda.
inline double apply_loss(double v, double lambda) { return (1.0 - lambda) * v + lambda; }

inline QuadratureVariances quadrature_variances(const SqueezedStateSpec& s) {
    s.validate();
    const double vsq = apply_loss(std::exp(-2.0 * s.squeeze_factor), s.loss_lambda);
    const double vanti = apply_loss(std::exp(2.0 * s.squeeze_factor), s.loss_lambda);
    if (s.squeezed == SqueezedQuadrature::amplitude) return {vsq, vanti};
    return {vanti, vsq};
}

// Homodyne noise variance at local-oscillator phase theta:
//   V(theta) = v1 sin^2(theta) + v2 cos^2(theta)   (pi-periodic)
// theta = pi/2 reads the amplitude quadrature, theta = 0 the phase quadrature.
inline double homodyne_variance(const QuadratureVariances& v, double theta) {
    require(v.v1 > 0.0 && v.v2 > 0.0, "homodyne_variance: variances must be positive");
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    return v.v1 * s * s + v.v2 * c * c;
}

// Exact two-field form: both interferometer inputs carry (possibly
// non-vacuum) quadrature noise; each coherent amplitude beats against the
// *other* input's fluctuations. Variance per unit detection bandwidth.
inline double homodyne_variance_two_field(const QuadratureVariances& va,
                                          const QuadratureVariances& vb, double amp_a,
                                          double amp_b, double theta) {
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    const double s2 = s * s, c2 = c * c;
    return amp_a * amp_a * (vb.v1 * s2 + vb.v2 * c2) + amp_b * amp_b * (va.v1 * s2 + va.v2 * c2);
}

// Two coherent fields interfering on a beamsplitter (Michelson readout).
struct CoherentPairSpec {
    double amp_a = 1.0;  // mean field amplitudes (sqrt of power units)
    double amp_b = 1.0;

    void validate() const {
        require(amp_a >= 0.0 && amp_b >= 0.0, "CoherentPairSpec: amplitudes must be >= 0");
    }

    double visibility() const {
        const double p = amp_a * amp_a + amp_b * amp_b;
        require(p > 0.0, "CoherentPairSpec: at least one amplitude must be non-zero");
        return 2.0 * amp_a * amp_b / p;
    }

    double mean_power() const { return 0.5 * (amp_a * amp_a + amp_b * amp_b); }
};

enum class Port { c, d };  // complementary beamsplitter outputs

// Mean detected power at the given output port:
//   P_d = (a^2 + b^2 + 2ab sin(theta)) / 2,  P_c = (a^2 + b^2 - 2ab sin(theta)) / 2
inline double fringe_power(const CoherentPairSpec& p, double theta, Port port) {
    p.validate();
    const double cross = 2.0 * p.amp_a * p.amp_b * std::sin(theta);
    const double total = p.amp_a * p.amp_a + p.amp_b * p.amp_b;
    return 0.5 * (port == Port::d ? total + cross : total - cross);
}

// Fringe power normalized to the fringe-average power, i.e. 1 +/- v sin(theta).
// This is the quantity whose shot noise the synthesis engine scales to SNL.
inline double relative_fringe_power(const CoherentPairSpec& p, double theta, Port port) {
    return fringe_power(p, theta, port) / p.mean_power();
}

struct ModulationSpec {
    double theta0 = 0.0;       // phase set point (rad)
    double theta1 = 0.045;     // dither depth (rad)
    double omega_mod = 0.0;    // dither angular frequency (rad/s)
    double demod_phase = 0.0;  // lock-in reference phase offset (rad)

    double mod_freq_hz() const { return omega_mod / kTwoPi; }
    void set_mod_freq_hz(double f) { omega_mod = kTwoPi * f; }

    void validate() const {
        require(theta1 >= 0.0, "ModulationSpec: theta1 must be >= 0");
        require(omega_mod >= 0.0, "ModulationSpec: omega_mod must be >= 0");
    }

    // The analytic error signals keep only first-order sidebands; beyond
    // this depth that truncation starts to matter at the percent level.
    bool small_depth_valid() const { return theta1 <= 0.2; }
};

enum class DisturbanceKind { none, sinusoid, random_walk, constant_drift };

struct DisturbanceSpec {
    DisturbanceKind kind = DisturbanceKind::none;
    double freq_hz = 0.0;     // sinusoid
    double amplitude = 0.0;   // sinusoid (rad)
    double diffusion = 0.0;   // random walk, rad^2/s
    double drift_rate = 0.0;  // constant drift, rad/s

    void validate() const {
        require(freq_hz >= 0.0, "DisturbanceSpec: freq_hz must be >= 0");
        require(diffusion >= 0.0, "DisturbanceSpec: diffusion must be >= 0");
    }
};

// Streaming generator for the disturbance term; the random walk carries
// state, everything else is a pure function of the sample index.
class DisturbanceGen {
public:
    DisturbanceGen(const DisturbanceSpec& spec, double fs, std::uint64_t seed)
        : spec_(spec), fs_(fs), seed_(seed) {
        spec.validate();
        require(fs > 0.0, "DisturbanceGen: fs must be positive");
        step_std_ = std::sqrt(spec.diffusion / fs);
    }

    double value(std::uint64_t k) {
        switch (spec_.kind) {
            case DisturbanceKind::none:
                return 0.0;
            case DisturbanceKind::sinusoid:
                return spec_.amplitude *
                       std::sin(kTwoPi * spec_.freq_hz * static_cast<double>(k) / fs_);
            case DisturbanceKind::constant_drift:
                return spec_.drift_rate * static_cast<double>(k) / fs_;
            case DisturbanceKind::random_walk:
                // callers advance k monotonically; replaying from 0 reproduces
                // the identical walk because increments are counter-indexed
                walk_ += step_std_ * rng::gaussian(seed_, rng::kStreamDisturbance, k);
                return walk_;
        }
        return 0.0;
    }

private:
    DisturbanceSpec spec_;
    double fs_ = 0.0;
    std::uint64_t seed_ = 0;
    double step_std_ = 0.0;
    double walk_ = 0.0;
};

// theta[k] = theta0 + theta1 sin(omega k / fs) + disturbance[k] + control[k].
// control may be empty (open loop) or a full-length series.
inline std::vector<double> phase_trajectory(const ModulationSpec& mod,
                                            const DisturbanceSpec& dist,
                                            const std::vector<double>& control, double fs,
                                            std::size_t n, std::uint64_t seed) {
    mod.validate();
    require(fs > mod.omega_mod / kPi, "phase_trajectory: fs must exceed omega_mod/pi (Nyquist)");
    require(control.empty() || control.size() == n,
            "phase_trajectory: control series must be empty or length n");
    DisturbanceGen gen(dist, fs, seed);
    std::vector<double> theta(n);
    for (std::size_t k = 0; k < n; ++k) {
        double t = mod.theta0 +
                   mod.theta1 * std::sin(mod.omega_mod * static_cast<double>(k) / fs) +
                   gen.value(k);
        if (!control.empty()) {
            const double u = control[k];
            require(std::isfinite(u), "phase_trajectory: control contains non-finite value");
            t += u;
        }
        theta[k] = t;
    }
    return theta;
}

}  // namespace noiselock::plant
