#pragma once

// Sampled photodetector records. The homodyne mode draws a zero-mean Gaussian
// photocurrent whose variance tracks the measured quadrature, scaled so that
// a unit-variance quadrature (the vacuum / shot-noise level) has a one-sided
// power spectral density of exactly 1 in these units: i[k] has variance
// V(theta) * fs / 2. The coherent mode adds the classical fringe mean on top
// of the matching shot-noise floor.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "noiselock/common.hpp"
#include "noiselock/io.hpp"
#include "noiselock/plant.hpp"
#include "noiselock/rng.hpp"

namespace noiselock::timeseries {

enum class DetectionMode { homodyne, coherent };

inline const char* detection_mode_name(DetectionMode m) {
    return m == DetectionMode::homodyne ? "homodyne" : "coherent";
}

struct SynthesisConfig {
    DetectionMode mode = DetectionMode::homodyne;
    plant::SqueezedStateSpec state;        // used in homodyne mode
    plant::CoherentPairSpec pair;          // used in coherent mode
    plant::Port port = plant::Port::d;     // which interferometer output is detected
    double flux_scale = 1e5;               // coherent carrier level in shot-noise units
    plant::ModulationSpec modulation;
    plant::DisturbanceSpec disturbance;
    double sample_rate = 1e6;              // Hz
    double duration = 1.0;                 // s
    std::uint64_t seed = 1;

    std::size_t sample_count() const {
        return static_cast<std::size_t>(sample_rate * duration + 0.5);
    }

    void validate() const {
        require(sample_rate > 0.0, "SynthesisConfig: sample_rate must be positive");
        require(duration > 0.0 && sample_count() >= 2,
                "SynthesisConfig: duration must cover at least two samples");
        require(sample_rate >= 10.0 * modulation.mod_freq_hz(),
                "SynthesisConfig: sample_rate must be at least 10x the dither frequency");
        if (mode == DetectionMode::homodyne) {
            state.validate();
        } else {
            require(flux_scale > 0.0, "SynthesisConfig: flux_scale must be positive");
            require(pair.amp_a > 0.0 && pair.amp_b > 0.0,
                    "SynthesisConfig: coherent mode needs both input amplitudes");
        }
        modulation.validate();
        disturbance.validate();
    }
};

// Per-sample statistics of the detector output at a given interference phase.
class PhotocurrentModel {
public:
    explicit PhotocurrentModel(const SynthesisConfig& cfg) : cfg_(cfg) {
        cfg.validate();
        if (cfg.mode == DetectionMode::homodyne) {
            var_ = plant::quadrature_variances(cfg.state);
        }
    }

    double mean_at(double theta) const {
        if (cfg_.mode == DetectionMode::homodyne) return 0.0;
        return cfg_.flux_scale * plant::relative_fringe_power(cfg_.pair, theta, cfg_.port);
    }

    // Variance of one sample (PSD of the noise floor times fs/2).
    double variance_at(double theta) const {
        if (cfg_.mode == DetectionMode::homodyne) {
            return plant::homodyne_variance(var_, theta) * cfg_.sample_rate / 2.0;
        }
        const double p = plant::relative_fringe_power(cfg_.pair, theta, cfg_.port);
        return (p > 0.0 ? p : 0.0) * cfg_.sample_rate / 2.0;
    }

    double sample(double theta, std::uint64_t k) const {
        return mean_at(theta) +
               std::sqrt(variance_at(theta)) * rng::gaussian(cfg_.seed, rng::kStreamPhotocurrent, k);
    }

private:
    SynthesisConfig cfg_;
    plant::QuadratureVariances var_{1.0, 1.0};
};

// A bundle of equal-length named sample records from one run.
struct SimTrace {
    double sample_rate = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::string mode;
    std::vector<std::pair<std::string, std::vector<double>>> channels;

    std::size_t size() const { return channels.empty() ? 0 : channels.front().second.size(); }

    void add_channel(std::string name, std::vector<double> data) {
        require(channels.empty() || data.size() == size(),
                "SimTrace: all channels must have the same length");
        require(!has_channel(name), "SimTrace: duplicate channel '" + name + "'");
        channels.emplace_back(std::move(name), std::move(data));
    }

    bool has_channel(std::string_view name) const {
        for (const auto& [n, d] : channels) {
            if (n == name) return true;
        }
        return false;
    }

    const std::vector<double>& channel(std::string_view name) const {
        for (const auto& [n, d] : channels) {
            if (n == name) return d;
        }
        throw std::invalid_argument("SimTrace: no channel named '" + std::string(name) + "'");
    }

    io::Table to_table() const {
        io::Table t;
        t.add_meta("mode", mode);
        t.add_meta("sample_rate", io::format_double(sample_rate));
        t.add_meta("seed", std::to_string(seed));
        t.add_meta("config_hash", std::to_string(config_hash));
        for (const auto& [n, d] : channels) t.add_column(n, d);
        return t;
    }

    static SimTrace from_table(const io::Table& t) {
        SimTrace tr;
        const std::string* mode = t.find_meta("mode");
        const std::string* fs = t.find_meta("sample_rate");
        const std::string* seed = t.find_meta("seed");
        require(mode && fs && seed, "SimTrace: table lacks mode/sample_rate/seed metadata");
        tr.mode = *mode;
        tr.sample_rate = io::parse_double(*fs, "<meta>", 0);
        tr.seed = std::stoull(*seed);
        if (const std::string* h = t.find_meta("config_hash")) tr.config_hash = std::stoull(*h);
        for (std::size_t i = 0; i < t.columns.size(); ++i) {
            tr.add_channel(t.columns[i], t.data[i]);
        }
        return tr;
    }
};

// Generate the interference phase and matching photocurrent for one run.
// `control` (optional, one entry per sample) is added to the phase, which is
// how the feedback loop actuates the plant.
inline SimTrace synthesize(const SynthesisConfig& cfg, const std::vector<double>& control = {}) {
    cfg.validate();
    const std::size_t n = cfg.sample_count();
    const PhotocurrentModel model(cfg);
    std::vector<double> theta = plant::phase_trajectory(cfg.modulation, cfg.disturbance, control,
                                                        cfg.sample_rate, n, cfg.seed);
    std::vector<double> current(n);
    for (std::size_t k = 0; k < n; ++k) current[k] = model.sample(theta[k], k);

    SimTrace tr;
    tr.sample_rate = cfg.sample_rate;
    tr.seed = cfg.seed;
    tr.mode = detection_mode_name(cfg.mode);
    tr.add_channel("true_phase", std::move(theta));
    tr.add_channel("photocurrent", std::move(current));
    return tr;
}

// Sample variance over consecutive full windows (partial tail discarded).
inline std::vector<double> variance_over_windows(const std::vector<double>& x,
                                                 std::size_t window) {
    require(window >= 2, "variance_over_windows: window must hold at least 2 samples");
    std::vector<double> out;
    for (std::size_t start = 0; start + window <= x.size(); start += window) {
        double m = 0.0;
        for (std::size_t k = start; k < start + window; ++k) m += x[k];
        m /= static_cast<double>(window);
        double v = 0.0;
        for (std::size_t k = start; k < start + window; ++k) v += (x[k] - m) * (x[k] - m);
        out.push_back(v / static_cast<double>(window - 1));
    }
    return out;
}

}  // namespace noiselock::timeseries
