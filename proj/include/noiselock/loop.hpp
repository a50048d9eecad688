#pragma once

// Feedback control wrapped around an error readout. The plant phase is the
// sum of the set point, the dither, the disturbance, and the servo output;
// the photocurrent is drawn per sample, pushed through the readout chain, and
// the servo sees each error sample one step later (a one-sample actuation
// latency, as in any sampled loop).
//
// Two readouts are available: the noise-locking chain (bandpass -> envelope
// -> lock-in), which needs no carrier and locks to quadrature-variance
// extrema, and direct demodulation of the raw photocurrent at the dither
// frequency, the conventional fringe-locking technique that needs a coherent
// carrier. Both lock points sit where the respective error crosses zero.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "noiselock/common.hpp"
#include "noiselock/dsp.hpp"
#include "noiselock/plant.hpp"
#include "noiselock/timeseries.hpp"

namespace noiselock::loop {

struct ServoConfig {
    double kp = 0.0;     // proportional gain (rad per error unit)
    double ki = 1.0;     // integral gain (rad per error unit per second)
    double sign = 1.0;   // +1 when the error slope at the target is positive
    double clamp = 50.0; // actuator limit (rad)

    void validate() const {
        require(kp >= 0.0 && ki >= 0.0, "ServoConfig: gains must be non-negative");
        require(kp > 0.0 || ki > 0.0, "ServoConfig: at least one gain must be positive");
        require(sign == 1.0 || sign == -1.0, "ServoConfig: sign must be +1 or -1");
        require(clamp > 0.0, "ServoConfig: clamp must be positive");
    }
};

// Proportional-integral controller with conditional integration: the
// integrator freezes while the output is railed and the error keeps pushing
// outward, so releasing the rail needs no unwind time.
class Servo {
public:
    Servo(const ServoConfig& cfg, double sample_rate) : cfg_(cfg), dt_(1.0 / sample_rate) {
        cfg.validate();
        require(sample_rate > 0.0, "Servo: sample_rate must be positive");
    }

    double update(double error) {
        const double drive = -cfg_.sign * error;
        const double railed = integ_ + cfg_.kp * drive;
        if (std::abs(railed) <= cfg_.clamp || railed * drive < 0.0) {
            integ_ += cfg_.ki * drive * dt_;
        }
        return std::clamp(integ_ + cfg_.kp * drive, -cfg_.clamp, cfg_.clamp);
    }

    void reset() { integ_ = 0.0; }
    double integrator() const { return integ_; }

private:
    ServoConfig cfg_;
    double dt_ = 0.0;
    double integ_ = 0.0;
};

enum class ReadoutMethod {
    noise_lock,     // bandpass -> envelope -> lock-in on the noise power
    coherent_demod  // lock-in directly on the raw photocurrent
};

struct ReadoutConfig {
    ReadoutMethod method = ReadoutMethod::noise_lock;
    dsp::DspChainConfig chain;        // used by noise_lock
    dsp::LockInConfig direct_lockin;  // used by coherent_demod
    double demod_phase = 0.0;         // reference phase; pi flips the error sign
};

class ErrorReadout {
public:
    ErrorReadout(const ReadoutConfig& cfg, double ref_freq, double sample_rate) {
        if (cfg.method == ReadoutMethod::noise_lock) {
            chain_.emplace(cfg.chain, ref_freq, cfg.demod_phase, sample_rate);
        } else {
            lockin_.emplace(cfg.direct_lockin, ref_freq, cfg.demod_phase, sample_rate);
        }
    }

    dsp::ChainSample process(double photocurrent) {
        if (chain_) return chain_->process(photocurrent);
        dsp::ChainSample s;
        s.error = lockin_->process(photocurrent);
        return s;
    }

    void reset() {
        if (chain_) chain_->reset();
        if (lockin_) lockin_->reset();
    }

private:
    std::optional<dsp::NoiseLockChain> chain_;
    std::optional<dsp::LockIn> lockin_;
};

struct ClosedLoopConfig {
    timeseries::SynthesisConfig synth;
    ReadoutConfig readout;
    ServoConfig servo;
    double engage_fraction = 0.0;     // loop stays open for this share of the run
    std::size_t record_decimate = 1;  // store every Nth sample
    bool record_photocurrent = true;
    bool record_internals = true;     // bandpass and envelope stages

    void validate() const {
        synth.validate();
        servo.validate();
        require(engage_fraction >= 0.0 && engage_fraction < 1.0,
                "ClosedLoopConfig: engage_fraction must be in [0, 1)");
        require(record_decimate >= 1, "ClosedLoopConfig: record_decimate must be >= 1");
    }
};

// Run the loop sample by sample. Recorded channels (at the decimated rate):
// true_phase, error, control, and optionally photocurrent, bpf, envelope.
// control[k] is the actuation that was already applied at sample k.
inline timeseries::SimTrace run_closed_loop(const ClosedLoopConfig& cfg) {
    cfg.validate();
    const double fs = cfg.synth.sample_rate;
    const std::size_t n = cfg.synth.sample_count();
    const std::size_t engage_at =
        static_cast<std::size_t>(static_cast<double>(n) * cfg.engage_fraction);

    const timeseries::PhotocurrentModel model(cfg.synth);
    plant::DisturbanceGen dist(cfg.synth.disturbance, fs, cfg.synth.seed);
    ErrorReadout readout(cfg.readout, cfg.synth.modulation.mod_freq_hz(), fs);
    Servo servo(cfg.servo, fs);
    const plant::ModulationSpec& mod = cfg.synth.modulation;

    const std::size_t stored = (n + cfg.record_decimate - 1) / cfg.record_decimate;
    std::vector<double> theta_rec, error_rec, control_rec, current_rec, bpf_rec, env_rec;
    theta_rec.reserve(stored);
    error_rec.reserve(stored);
    control_rec.reserve(stored);
    if (cfg.record_photocurrent) current_rec.reserve(stored);
    if (cfg.record_internals) {
        bpf_rec.reserve(stored);
        env_rec.reserve(stored);
    }

    double u = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double theta = mod.theta0 +
                             mod.theta1 * std::sin(mod.omega_mod * static_cast<double>(k) / fs) +
                             dist.value(k) + u;
        const double i = model.sample(theta, k);
        const dsp::ChainSample s = readout.process(i);
        if (k % cfg.record_decimate == 0) {
            theta_rec.push_back(theta);
            error_rec.push_back(s.error);
            control_rec.push_back(u);
            if (cfg.record_photocurrent) current_rec.push_back(i);
            if (cfg.record_internals) {
                bpf_rec.push_back(s.bpf);
                env_rec.push_back(s.envelope);
            }
        }
        if (k >= engage_at) u = servo.update(s.error);
    }

    timeseries::SimTrace tr;
    tr.sample_rate = fs / static_cast<double>(cfg.record_decimate);
    tr.seed = cfg.synth.seed;
    tr.mode = timeseries::detection_mode_name(cfg.synth.mode);
    tr.add_channel("true_phase", std::move(theta_rec));
    tr.add_channel("error", std::move(error_rec));
    tr.add_channel("control", std::move(control_rec));
    if (cfg.record_photocurrent) tr.add_channel("photocurrent", std::move(current_rec));
    if (cfg.record_internals) {
        tr.add_channel("bpf", std::move(bpf_rec));
        tr.add_channel("envelope", std::move(env_rec));
    }
    return tr;
}

struct LockReport {
    bool acquired = false;
    double acquisition_time = std::numeric_limits<double>::infinity();  // s after engage
    double residual_rms = 0.0;   // rad about the lock angle, dither removed
    double mean_offset = 0.0;    // rad, wrapped
    double hold_fraction = 0.0;  // share of post-engage samples within threshold
};

// Judge a run against a target phase. The dither (known exactly) is
// subtracted from the recorded phase; what remains is wrapped into one
// period about the lock angle. Acquisition is the first in-band sample from
// which the remainder of the record stays in-band for at least
// `min_hold_fraction` of its span: a momentary excursion later does not
// un-acquire the lock, persistent wandering does.
inline LockReport assess_lock(const timeseries::SimTrace& tr, const plant::ModulationSpec& mod,
                              double lock_angle, double wrap_period, double engage_time,
                              double threshold = 0.15, double min_hold_fraction = 0.9) {
    require(wrap_period > 0.0, "assess_lock: wrap_period must be positive");
    require(threshold > 0.0, "assess_lock: threshold must be positive");
    const auto& th = tr.channel("true_phase");
    const double fs = tr.sample_rate;
    const std::size_t n = th.size();
    const std::size_t k0 = std::min(
        n, static_cast<std::size_t>(std::max(0.0, engage_time) * fs));
    require(k0 < n, "assess_lock: engage_time beyond the end of the record");

    std::vector<double> dev(n - k0);
    for (std::size_t k = k0; k < n; ++k) {
        const double t = static_cast<double>(k) / fs;
        const double slow = th[k] - mod.theta1 * std::sin(mod.omega_mod * t);
        dev[k - k0] = wrap_phase(slow - lock_angle, wrap_period);
    }

    LockReport rep;
    std::vector<std::size_t> suffix_in(dev.size() + 1, 0);
    for (std::size_t k = dev.size(); k-- > 0;) {
        suffix_in[k] = suffix_in[k + 1] + (std::abs(dev[k]) <= threshold ? 1 : 0);
    }
    rep.hold_fraction = static_cast<double>(suffix_in[0]) / static_cast<double>(dev.size());

    for (std::size_t k = 0; k + 2 <= dev.size(); ++k) {
        if (std::abs(dev[k]) > threshold) continue;
        const std::size_t tail = dev.size() - k;
        if (static_cast<double>(suffix_in[k]) <
            min_hold_fraction * static_cast<double>(tail)) {
            continue;
        }
        rep.acquired = true;
        rep.acquisition_time = static_cast<double>(k) / fs;
        double m = 0.0, rms = 0.0;
        for (std::size_t j = k; j < dev.size(); ++j) m += dev[j];
        m /= static_cast<double>(tail);
        for (std::size_t j = k; j < dev.size(); ++j) rms += dev[j] * dev[j];
        rep.mean_offset = m;
        rep.residual_rms = std::sqrt(rms / static_cast<double>(tail));
        break;
    }
    return rep;
}

struct ErrorPoint {
    double mean = 0.0;
    double rms = 0.0;  // fluctuation about the mean, after settling
};

// Open-loop statistics of the error signal at a fixed operating phase
// (dither running, loop open). The leading `settle_fraction` of the record
// is discarded so filter transients do not bias the estimate.
inline ErrorPoint measure_error_point(const timeseries::SynthesisConfig& synth,
                                      const ReadoutConfig& readout,
                                      double settle_fraction = 0.25) {
    require(settle_fraction >= 0.0 && settle_fraction < 1.0,
            "measure_error_point: settle_fraction must be in [0, 1)");
    synth.validate();
    const timeseries::PhotocurrentModel model(synth);
    plant::DisturbanceGen dist(synth.disturbance, synth.sample_rate, synth.seed);
    ErrorReadout chain(readout, synth.modulation.mod_freq_hz(), synth.sample_rate);
    const plant::ModulationSpec& mod = synth.modulation;
    const double fs = synth.sample_rate;
    const std::size_t n = synth.sample_count();
    const std::size_t k0 = static_cast<std::size_t>(settle_fraction * static_cast<double>(n));
    double sum = 0.0, sum2 = 0.0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double theta = mod.theta0 +
                             mod.theta1 * std::sin(mod.omega_mod * static_cast<double>(k) / fs) +
                             dist.value(k);
        const double e = chain.process(model.sample(theta, k)).error;
        if (k >= k0) {
            sum += e;
            sum2 += e * e;
            ++count;
        }
    }
    ErrorPoint p;
    p.mean = sum / static_cast<double>(count);
    p.rms = std::sqrt(std::max(0.0, sum2 / static_cast<double>(count) - p.mean * p.mean));
    return p;
}

// Central-difference slope of the mean error about an operating angle. Both
// points reuse the same seed, so the shared noise realization cancels in the
// difference and the estimate converges quickly.
inline double measure_error_slope(timeseries::SynthesisConfig synth, const ReadoutConfig& readout,
                                  double angle, double delta, double settle_fraction = 0.25) {
    require(delta > 0.0, "measure_error_slope: delta must be positive");
    synth.modulation.theta0 = angle + delta;
    const double hi = measure_error_point(synth, readout, settle_fraction).mean;
    synth.modulation.theta0 = angle - delta;
    const double lo = measure_error_point(synth, readout, settle_fraction).mean;
    return (hi - lo) / (2.0 * delta);
}

// Phase-noise floor implied by an error fluctuation sigma on a dithered
// zero crossing with the given slope: the offset at which the deterministic
// error, second order in the dither geometry, matches the noise. Scales as
// sqrt(sigma), which is what makes the floor go with the fourth root of the
// number of averaged noise samples.
inline double equivalent_phase_noise(double theta1, double error_rms, double slope) {
    require(theta1 > 0.0, "equivalent_phase_noise: theta1 must be positive");
    require(slope != 0.0, "equivalent_phase_noise: slope must be non-zero");
    require(error_rms >= 0.0, "equivalent_phase_noise: error_rms must be non-negative");
    return std::sqrt(2.0 * theta1 * error_rms / std::abs(slope));
}

struct StabilityRunConfig {
    timeseries::SynthesisConfig synth;  // theta0 already at the lock angle
    ReadoutConfig readout;
    double lock_angle = kPi / 2.0;
    double wrap_period = kPi;
    double slope = 0.0;          // measured once, shared across seeds
    double f_unity = 15.0;       // integrator unity-gain frequency (Hz)
    double settle_fraction = 0.3;
    double clamp = 50.0;
    double lock_threshold = 0.15;  // rad; widen where the written-back noise is large
    double min_hold_fraction = 0.9;  // in-band share of the tail that counts as locked
    std::size_t record_decimate = 1;  // thin the stored record; assessment is exact either way
};

struct StabilityMeasurement {
    double delta_theta = 0.0;  // equivalent phase noise (rad)
    double error_rms = 0.0;
    double ki = 0.0;
    bool locked = false;  // held the band for min_hold_fraction of the tail
    LockReport report;
};

// Close the loop at the lock point with the integral gain normalized by the
// measured slope (so the loop bandwidth is f_unity regardless of the plant),
// then read the error fluctuation off the locked tail.
inline StabilityMeasurement measure_locked_noise(const StabilityRunConfig& cfg) {
    require(cfg.slope != 0.0, "measure_locked_noise: slope must be measured first");
    require(cfg.f_unity > 0.0, "measure_locked_noise: f_unity must be positive");

    ClosedLoopConfig lc;
    lc.synth = cfg.synth;
    lc.readout = cfg.readout;
    lc.servo.ki = kTwoPi * cfg.f_unity / std::abs(cfg.slope);
    lc.servo.sign = cfg.slope > 0.0 ? 1.0 : -1.0;
    lc.servo.clamp = cfg.clamp;
    lc.record_photocurrent = false;
    lc.record_internals = false;
    lc.record_decimate = cfg.record_decimate;
    const auto tr = run_closed_loop(lc);

    const auto& err = tr.channel("error");
    const std::size_t k0 =
        static_cast<std::size_t>(cfg.settle_fraction * static_cast<double>(err.size()));
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t k = k0; k < err.size(); ++k) {
        sum += err[k];
        sum2 += err[k] * err[k];
    }
    const double cnt = static_cast<double>(err.size() - k0);
    const double mean = sum / cnt;

    StabilityMeasurement m;
    m.ki = lc.servo.ki;
    m.error_rms = std::sqrt(std::max(0.0, sum2 / cnt - mean * mean));
    m.delta_theta = equivalent_phase_noise(cfg.synth.modulation.theta1, m.error_rms, cfg.slope);
    m.report = assess_lock(tr, cfg.synth.modulation, cfg.lock_angle, cfg.wrap_period,
                           cfg.settle_fraction * cfg.synth.duration, cfg.lock_threshold);
    m.locked = m.report.hold_fraction >= cfg.min_hold_fraction;
    return m;
}

}  // namespace noiselock::loop
