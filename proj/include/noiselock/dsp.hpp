#pragma once

// Streaming signal chain used to derive the noise-locking error signal:
// bandpass filter -> envelope detector -> lock-in demodulator. All filters
// are causal IIR sections processed sample by sample, so concatenating
// chunks is identical to one long pass and feedback loops see exactly one
// sample of latency per stage boundary.

#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "noiselock/common.hpp"

namespace noiselock::dsp {

// Second-order section, direct form II transposed.
struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;  // numerator
    double a1 = 0.0, a2 = 0.0;            // denominator (monic)
    double s1 = 0.0, s2 = 0.0;

    double process(double x) {
        const double y = b0 * x + s1;
        s1 = b1 * x - a1 * y + s2;
        s2 = b2 * x - a2 * y;
        return y;
    }
    void reset() { s1 = s2 = 0.0; }

    std::complex<double> response(double f, double fs) const {
        const std::complex<double> z1 = std::polar(1.0, -kTwoPi * f / fs);
        const std::complex<double> z2 = z1 * z1;
        return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
    }
};

// First-order section (used for the high-pass roll-up cascade and odd-order
// Butterworth remainders).
struct FirstOrder {
    double b0 = 1.0, b1 = 0.0, a1 = 0.0;
    double s = 0.0;

    double process(double x) {
        const double y = b0 * x + s;
        s = b1 * x - a1 * y;
        return y;
    }
    void reset() { s = 0.0; }

    std::complex<double> response(double f, double fs) const {
        const std::complex<double> z1 = std::polar(1.0, -kTwoPi * f / fs);
        return (b0 + b1 * z1) / (1.0 + a1 * z1);
    }
};

// Bilinear-transform designs, prewarped so the analog corner lands exactly
// on the requested digital frequency.
inline FirstOrder design_first_order_highpass(double fc, double fs) {
    require(fc > 0.0 && fc < fs / 2.0, "design_first_order_highpass: need 0 < fc < fs/2");
    const double K = std::tan(kPi * fc / fs);
    FirstOrder f;
    f.b0 = 1.0 / (1.0 + K);
    f.b1 = -1.0 / (1.0 + K);
    f.a1 = (K - 1.0) / (1.0 + K);
    return f;
}

inline FirstOrder design_first_order_lowpass(double fc, double fs) {
    require(fc > 0.0 && fc < fs / 2.0, "design_first_order_lowpass: need 0 < fc < fs/2");
    const double K = std::tan(kPi * fc / fs);
    FirstOrder f;
    f.b0 = K / (1.0 + K);
    f.b1 = K / (1.0 + K);
    f.a1 = (K - 1.0) / (1.0 + K);
    return f;
}

struct ButterworthLowpass {
    std::vector<Biquad> sos;
    std::vector<FirstOrder> first;  // one entry for odd orders
};

inline ButterworthLowpass design_butterworth_lowpass(int order, double fc, double fs) {
    require(order >= 1 && order <= 12, "design_butterworth_lowpass: order must be in [1, 12]");
    require(fc > 0.0 && fc < fs / 2.0, "design_butterworth_lowpass: need 0 < fc < fs/2");
    const double K = std::tan(kPi * fc / fs);
    ButterworthLowpass lp;
    for (int m = 0; m < order / 2; ++m) {
        // conjugate pole pair of the analog prototype: s^2 + 2 sin(theta) s + 1
        // with theta = (2m+1) pi / (2 n); odd orders add the real pole at -1
        const double a = 2.0 * std::sin(kPi * (2.0 * m + 1.0) / (2.0 * order));
        const double norm = 1.0 + a * K + K * K;
        Biquad q;
        q.b0 = K * K / norm;
        q.b1 = 2.0 * q.b0;
        q.b2 = q.b0;
        q.a1 = 2.0 * (K * K - 1.0) / norm;
        q.a2 = (1.0 - a * K + K * K) / norm;
        lp.sos.push_back(q);
    }
    if (order % 2 == 1) lp.first.push_back(design_first_order_lowpass(fc, fs));
    return lp;
}

struct BandpassConfig {
    double f_low = 20e3;       // high-pass corner (Hz)
    double f_high = 200e3;     // low-pass corner (Hz)
    int low_rollup_order = 3;  // number of cascaded 1st-order high-pass sections
    int high_order = 4;        // Butterworth low-pass order

    void validate(double fs) const {
        require(f_low > 0.0 && f_low < f_high, "BandpassConfig: need 0 < f_low < f_high");
        require(f_high < fs / 2.0, "BandpassConfig: f_high must be below Nyquist");
        require(low_rollup_order >= 1 && low_rollup_order <= 8,
                "BandpassConfig: low_rollup_order must be in [1, 8]");
        require(high_order >= 1 && high_order <= 12,
                "BandpassConfig: high_order must be in [1, 12]");
    }
};

// Causal band-pass: cascaded first-order high-pass sections at f_low (f^n
// roll-up toward DC) followed by a Butterworth low-pass at f_high, with the
// overall gain calibrated to unity at the geometric band centre.
class BandpassFilter {
public:
    BandpassFilter(const BandpassConfig& cfg, double fs) : cfg_(cfg), fs_(fs) {
        cfg.validate(fs);
        for (int i = 0; i < cfg.low_rollup_order; ++i) {
            hp_.push_back(design_first_order_highpass(cfg.f_low, fs));
        }
        lp_ = design_butterworth_lowpass(cfg.high_order, cfg.f_high, fs);
        gain_ = 1.0 / std::abs(raw_response(std::sqrt(cfg.f_low * cfg.f_high)));
    }

    double process(double x) {
        double y = x * gain_;
        for (auto& h : hp_) y = h.process(y);
        for (auto& q : lp_.sos) y = q.process(y);
        for (auto& f : lp_.first) y = f.process(y);
        return y;
    }

    void process(const std::vector<double>& in, std::vector<double>& out) {
        out.resize(in.size());
        for (std::size_t k = 0; k < in.size(); ++k) out[k] = process(in[k]);
    }

    void reset() {
        for (auto& h : hp_) h.reset();
        for (auto& q : lp_.sos) q.reset();
        for (auto& f : lp_.first) f.reset();
    }

    double magnitude_at(double f) const { return gain_ * std::abs(raw_response(f)); }

    // White-noise (equivalent rectangular) bandwidth of the calibrated
    // response, integral of |H(f)|^2 over [0, fs/2].
    double equivalent_noise_bandwidth(int grid = 1 << 15) const {
        double acc = 0.0;
        const double df = (fs_ / 2.0) / grid;
        for (int i = 0; i <= grid; ++i) {
            const double m = magnitude_at(df * i);
            const double w = (i == 0 || i == grid) ? 0.5 : 1.0;
            acc += w * m * m;
        }
        return acc * df;
    }

    double sample_rate() const { return fs_; }
    const BandpassConfig& config() const { return cfg_; }

private:
    std::complex<double> raw_response(double f) const {
        std::complex<double> h = 1.0;
        for (const auto& s : hp_) h *= s.response(f, fs_);
        for (const auto& q : lp_.sos) h *= q.response(f, fs_);
        for (const auto& s : lp_.first) h *= s.response(f, fs_);
        return h;
    }

    BandpassConfig cfg_;
    double fs_ = 0.0;
    double gain_ = 1.0;
    std::vector<FirstOrder> hp_;
    ButterworthLowpass lp_;
};

// One-pole smoothing stage y += a (x - y); the workhorse behind the envelope
// detector and lock-in output filters.
class OnePole {
public:
    OnePole() = default;
    OnePole(double tau, double fs) : alpha_(1.0 - std::exp(-1.0 / (tau * fs))) {
        require(tau > 0.0 && fs > 0.0, "OnePole: tau and fs must be positive");
    }
    static OnePole from_cutoff(double fc, double fs) {
        require(fc > 0.0, "OnePole: cutoff must be positive");
        return OnePole(1.0 / (kTwoPi * fc), fs);
    }
    double process(double x) {
        y_ += alpha_ * (x - y_);
        return y_;
    }
    void reset() { y_ = 0.0; }
    double alpha() const { return alpha_; }

    std::complex<double> response(double f, double fs) const {
        const std::complex<double> z1 = std::polar(1.0, -kTwoPi * f / fs);
        return alpha_ / (1.0 - (1.0 - alpha_) * z1);
    }

    // Exact discrete noise-equivalent bandwidth (Hz, one-sided) of one stage.
    double noise_bandwidth(double fs) const {
        return fs * alpha_ / (2.0 * (2.0 - alpha_));
    }

private:
    double alpha_ = 1.0;
    double y_ = 0.0;
};

enum class EnvelopeLaw {
    amplitude,  // full-wave rectifier (diode detector); sine of amplitude A -> A
    power       // square-law detector; zero-mean noise of variance V -> V
};

struct EnvelopeConfig {
    double cutoff = 2e3;  // post-detection low-pass (Hz)
    EnvelopeLaw law = EnvelopeLaw::amplitude;

    void validate(double fs) const {
        require(cutoff > 0.0 && cutoff < fs / 2.0, "EnvelopeConfig: need 0 < cutoff < fs/2");
    }
};

class EnvelopeDetector {
public:
    EnvelopeDetector(const EnvelopeConfig& cfg, double fs) : cfg_(cfg) {
        cfg.validate(fs);
        lpf_ = OnePole::from_cutoff(cfg.cutoff, fs);
        // pi/2 undoes the rectifier's 2/pi mean so a steady sine reads its
        // amplitude; the square law needs no calibration (it reads variance)
        gain_ = (cfg.law == EnvelopeLaw::amplitude) ? kPi / 2.0 : 1.0;
    }

    double process(double x) {
        const double r = (cfg_.law == EnvelopeLaw::amplitude) ? std::abs(x) : x * x;
        return lpf_.process(gain_ * r);
    }
    void reset() { lpf_.reset(); }
    const EnvelopeConfig& config() const { return cfg_; }

private:
    EnvelopeConfig cfg_;
    OnePole lpf_;
    double gain_ = 1.0;
};

struct LockInConfig {
    double time_constant = 10e-3;  // output low-pass time constant (s)
    int slope_db_oct = 6;          // 6 (one pole) or 12 (two poles)
    bool ac_couple = true;         // high-pass the input before mixing
    double ac_corner_ratio = 0.02; // AC-couple corner as a fraction of ref_freq

    void validate() const {
        require(time_constant > 0.0, "LockInConfig: time_constant must be positive");
        require(slope_db_oct == 6 || slope_db_oct == 12,
                "LockInConfig: slope_db_oct must be 6 or 12");
        require(ac_corner_ratio > 0.0 && ac_corner_ratio < 0.5,
                "LockInConfig: ac_corner_ratio must be in (0, 0.5)");
    }
};

// Digital lock-in: out = LPF(2 * in * sin(2 pi f_ref k / fs + ref_phase)).
// The factor 2 makes a coherent input m*sin(...) read out as m. Without AC
// coupling, any large DC component of the input leaks through the mixer as a
// ripple at f_ref (visible in measured spectra as a line at the dither
// frequency); the input high-pass removes it at the source.
class LockIn {
public:
    LockIn(const LockInConfig& cfg, double ref_freq, double ref_phase, double fs)
        : cfg_(cfg), fs_(fs), ref_freq_(ref_freq) {
        cfg.validate();
        require(ref_freq > 0.0 && ref_freq < fs / 2.0, "LockIn: need 0 < ref_freq < fs/2");
        const double corner = 1.0 / (kTwoPi * cfg.time_constant);
        require(corner < ref_freq,
                "LockIn: output filter corner must sit below the reference frequency");
        lpf1_ = OnePole(cfg.time_constant, fs);
        lpf2_ = OnePole(cfg.time_constant, fs);
        if (cfg.ac_couple) {
            hp_ = design_first_order_highpass(cfg.ac_corner_ratio * ref_freq, fs);
        }
        // reference phase folded in via the angle-addition identity; snapping
        // the tiny residues makes ref_phase = pi an exact sign flip
        cp_ = std::cos(ref_phase);
        sp_ = std::sin(ref_phase);
        if (std::abs(cp_) < 1e-15) cp_ = 0.0;
        if (std::abs(sp_) < 1e-15) sp_ = 0.0;
    }

    double process(double x) {
        if (cfg_.ac_couple) x = hp_.process(x);
        const double cyc = std::fmod(ref_freq_ * static_cast<double>(k_++) / fs_, 1.0);
        const double a = kTwoPi * cyc;
        const double ref = std::sin(a) * cp_ + std::cos(a) * sp_;
        double y = lpf1_.process(2.0 * x * ref);
        if (cfg_.slope_db_oct == 12) y = lpf2_.process(y);
        return y;
    }

    void reset() {
        lpf1_.reset();
        lpf2_.reset();
        hp_.reset();
        k_ = 0;
    }

    // Noise-equivalent bandwidth (Hz) of the output filter; the number of
    // independent noise samples inside the averaging time is Df / this.
    double noise_equivalent_bandwidth() const {
        const double a = lpf1_.alpha();
        if (cfg_.slope_db_oct == 6) return fs_ * a / (2.0 * (2.0 - a));
        const double b2 = (1.0 - a) * (1.0 - a);
        return fs_ * a * a * a * a * (1.0 + b2) / (2.0 * std::pow(1.0 - b2, 3.0));
    }

    const LockInConfig& config() const { return cfg_; }

private:
    LockInConfig cfg_;
    double fs_ = 0.0;
    double ref_freq_ = 0.0;
    double cp_ = 1.0, sp_ = 0.0;
    std::uint64_t k_ = 0;
    OnePole lpf1_, lpf2_;
    FirstOrder hp_;
};

// Full error-signal chain configuration (servo parameters live with the loop).
struct DspChainConfig {
    BandpassConfig bandpass;
    EnvelopeConfig envelope;
    LockInConfig lockin;

    void validate(double fs) const {
        bandpass.validate(fs);
        envelope.validate(fs);
        lockin.validate();
        require(envelope.cutoff < bandpass.f_low,
                "DspChainConfig: envelope cutoff must sit below the bandpass f_low");
    }
};

struct ChainSample {
    double bpf = 0.0;
    double envelope = 0.0;
    double error = 0.0;
};

class NoiseLockChain {
public:
    // The dither line reaching the demodulator has been rotated by the
    // envelope low-pass (and the lock-in's own AC coupling); the reference is
    // rotated by the same exactly-known filter phase so the in-phase output
    // reads the full modulation amplitude with the physical sign.
    NoiseLockChain(const DspChainConfig& cfg, double ref_freq, double ref_phase, double fs)
        : bpf_(cfg.bandpass, fs),
          env_(cfg.envelope, fs),
          path_phase_(path_phase(cfg, ref_freq, fs)),
          lockin_(cfg.lockin, ref_freq, ref_phase + path_phase_, fs) {
        cfg.validate(fs);
        require(ref_freq < cfg.bandpass.f_low,
                "NoiseLockChain: the dither must sit below the analysis band");
    }

    static double path_phase(const DspChainConfig& cfg, double ref_freq, double fs) {
        double phi = std::arg(OnePole::from_cutoff(cfg.envelope.cutoff, fs).response(ref_freq, fs));
        if (cfg.lockin.ac_couple) {
            phi += std::arg(design_first_order_highpass(cfg.lockin.ac_corner_ratio * ref_freq, fs)
                                .response(ref_freq, fs));
        }
        return phi;
    }

    double reference_phase_compensation() const { return path_phase_; }

    ChainSample process(double photocurrent) {
        ChainSample s;
        s.bpf = bpf_.process(photocurrent);
        s.envelope = env_.process(s.bpf);
        s.error = lockin_.process(s.envelope);
        return s;
    }

    void reset() {
        bpf_.reset();
        env_.reset();
        lockin_.reset();
    }

    BandpassFilter& bandpass() { return bpf_; }
    LockIn& lockin() { return lockin_; }

private:
    BandpassFilter bpf_;
    EnvelopeDetector env_;
    double path_phase_ = 0.0;
    LockIn lockin_;
};

}  // namespace noiselock::dsp
