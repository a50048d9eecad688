#pragma once

// Built-in self-consistency checks for the `selftest` CLI subcommand: quick
// sanity tests of the random streams, plant algebra, analytic predictions,
// filter chain, and end-to-end file determinism. Designed to finish in a few
// seconds; the heavyweight statistical validation lives in the test suite.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "noiselock/analytic.hpp"
#include "noiselock/common.hpp"
#include "noiselock/config.hpp"
#include "noiselock/dsp.hpp"
#include "noiselock/experiments.hpp"
#include "noiselock/plant.hpp"
#include "noiselock/rng.hpp"
#include "noiselock/timeseries.hpp"

namespace noiselock::selftest {

namespace detail {

inline void check_close(double got, double want, double tol, const std::string& what) {
    require(std::abs(got - want) <= tol,
            what + ": got " + std::to_string(got) + ", want " + std::to_string(want) +
                " within " + std::to_string(tol));
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    require(in.good(), "selftest: cannot read " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace detail

inline void check_rng_moments() {
    const std::size_t n = 200000;
    double s = 0, s2 = 0, s4 = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double g = rng::gaussian(42, rng::kStreamPhotocurrent, k);
        s += g;
        s2 += g * g;
        s4 += g * g * g * g;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    const double kurt = (s4 / n) / (var * var);
    detail::check_close(mean, 0.0, 0.01, "gaussian mean");
    detail::check_close(var, 1.0, 0.02, "gaussian variance");
    detail::check_close(kurt, 3.0, 0.06, "gaussian kurtosis");
    require(rng::gaussian(42, 0, 7) == rng::gaussian(42, 0, 7), "gaussian not reproducible");
    require(rng::gaussian(42, 0, 7) != rng::gaussian(42, 1, 7), "streams not independent");
    for (std::uint64_t k = 0; k < 1000; ++k) {
        const double u = rng::uniform01(42, rng::kStreamExperiment, k);
        require(u >= 0.0 && u < 1.0, "uniform01 out of range");
    }
}

inline void check_plant_algebra() {
    detail::check_close(plant::apply_loss(0.25, 0.5), 0.625, 1e-12, "loss mixing");
    plant::SqueezedStateSpec s;
    s.squeeze_factor = 0.5;
    const auto v = plant::quadrature_variances(s);
    detail::check_close(v.v1, std::exp(-1.0), 1e-12, "squeezed variance");
    detail::check_close(v.v2, std::exp(1.0), 1e-12, "anti-squeezed variance");
    detail::check_close(plant::homodyne_variance(v, 0.0), v.v2, 1e-12, "variance at 0");
    detail::check_close(plant::homodyne_variance(v, kPi / 2.0), v.v1, 1e-12,
                        "variance at pi/2");
    plant::CoherentPairSpec p;
    p.amp_a = 1.0;
    p.amp_b = 1.0 / 3.0;
    detail::check_close(p.visibility(), 0.6, 1e-12, "visibility");
    detail::check_close(plant::relative_fringe_power(p, kPi / 2.0, plant::Port::d), 1.6, 1e-12,
                        "bright fringe");
    detail::check_close(plant::relative_fringe_power(p, -kPi / 2.0, plant::Port::d), 0.4, 1e-12,
                        "dark fringe");
}

inline void check_analytic_identities() {
    plant::SqueezedStateSpec s;
    s.squeeze_factor = 0.41;
    const auto v = plant::quadrature_variances(s);
    detail::check_close(analytic::error_signal_homodyne(v, 0.0, 0.045, 1.0, 1.0), 0.0, 1e-15,
                        "error zero at 0");
    detail::check_close(analytic::error_signal_homodyne(v, kPi / 2.0, 0.045, 1.0, 1.0), 0.0,
                        1e-12, "error zero at pi/2");
    const double e1 = analytic::error_signal_homodyne(v, kPi / 4.0, 0.045, 1.0, 1.0);
    const double e2 = analytic::error_signal_homodyne(v, -kPi / 4.0, 0.045, 1.0, 1.0);
    detail::check_close(e1 + e2, 0.0, std::abs(e1) * 1e-9, "odd symmetry");

    const auto [sq, anti] = analytic::stability_homodyne_scaled(0.41, 0.0, 100.0);
    detail::check_close(sq / anti, std::exp(-2.0 * 0.41), 1e-9, "lossless stability ratio");
    require(sq < anti, "stability ordering");

    plant::CoherentPairSpec p;
    p.amp_a = 1.0;
    p.amp_b = 1.0 / 3.0;
    const auto [dark, bright] = analytic::stability_coherent(p, 100.0);
    require(dark < bright, "coherent stability ordering");
}

inline void check_filter_chain() {
    const double fs = 1e6;
    dsp::BandpassConfig bp;
    bp.f_low = 2e4;
    bp.f_high = 2e5;
    dsp::BandpassFilter f_in(bp, fs), f_out(bp, fs);
    const double f_center = std::sqrt(bp.f_low * bp.f_high);
    const double f_reject = bp.f_low / 20.0;
    double pow_in = 0, pow_out = 0;
    const std::size_t n = 20000;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / fs;
        const double yi = f_in.process(std::sin(kTwoPi * f_center * t));
        const double yo = f_out.process(std::sin(kTwoPi * f_reject * t));
        if (k >= n / 2) {
            pow_in += yi * yi;
            pow_out += yo * yo;
        }
    }
    require(pow_in > 100.0 * pow_out, "bandpass selectivity");

    dsp::LockInConfig lcfg;
    lcfg.time_constant = 2e-3;
    lcfg.ac_couple = false;
    dsp::LockIn li(lcfg, 5e3, 0.0, fs);
    double out = 0.0;
    for (std::size_t k = 0; k < 50000; ++k) {
        const double t = static_cast<double>(k) / fs;
        out = li.process(0.7 * std::sin(kTwoPi * 5e3 * t));
    }
    detail::check_close(out, 0.7, 0.05, "lock-in response to a matched tone");
}

inline void check_synthesis_variance() {
    timeseries::SynthesisConfig synth;
    synth.mode = timeseries::DetectionMode::homodyne;
    synth.sample_rate = 1e6;
    synth.duration = 0.2;
    synth.seed = 5;
    synth.modulation.theta0 = 0.3;
    synth.modulation.theta1 = 0.0;
    const timeseries::PhotocurrentModel model(synth);
    const std::size_t n = synth.sample_count();
    double s2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double i = model.sample(0.3, k);
        s2 += i * i;
    }
    const double want = synth.sample_rate / 2.0;  // vacuum-limited record
    detail::check_close(s2 / static_cast<double>(n) / want, 1.0, 0.05,
                        "photocurrent variance vs bandwidth");
}

// End-to-end plumbing: a miniature sweep must produce byte-identical
// artifacts when run twice with the same configuration.
inline void check_file_determinism() {
    static const char* kMicro =
        "[experiment]\n"
        "kind = sweep_theta\n"
        "seed = 17\n"
        "points = 6\n"
        "duration_per_point = 0.002\n"
        "fit_residual_tol = 1.0\n"
        "crossing_tol = 1.0\n"
        "analytic_crossing_tol = 1.0\n"
        "[plant]\n"
        "squeeze_factor = 0.41\n"
        "[envelope]\n"
        "law = power\n";
    const auto doc = config::parse_config_text(kMicro, "selftest");
    const auto cfg = config::resolve(doc, "selftest_micro");
    const auto base = std::filesystem::temp_directory_path() / "noiselock_selftest";
    std::filesystem::remove_all(base);
    const auto d1 = base / "a", d2 = base / "b";
    const auto o1 = experiments::run_experiment(cfg, d1);
    const auto o2 = experiments::run_experiment(cfg, d2);
    require(o1.pass && o2.pass, "micro sweep verdicts");
    for (const auto& entry : std::filesystem::directory_iterator(d1)) {
        const auto name = entry.path().filename();
        require(detail::slurp(entry.path()) == detail::slurp(d2 / name),
                "artifact differs between identical runs: " + name.string());
    }
    std::filesystem::remove_all(base);
}

struct Check {
    const char* name;
    std::function<void()> fn;
};

inline bool run(std::ostream& os) {
    const std::vector<Check> checks = {
        {"rng_moments", check_rng_moments},
        {"plant_algebra", check_plant_algebra},
        {"analytic_identities", check_analytic_identities},
        {"filter_chain", check_filter_chain},
        {"synthesis_variance", check_synthesis_variance},
        {"file_determinism", check_file_determinism},
    };
    bool all = true;
    for (const auto& c : checks) {
        try {
            c.fn();
            os << "selftest " << c.name << ": PASS\n";
        } catch (const std::exception& e) {
            os << "selftest " << c.name << ": FAIL (" << e.what() << ")\n";
            all = false;
        }
    }
    os << "selftest overall: " << (all ? "PASS" : "FAIL") << "\n";
    return all;
}

}  // namespace noiselock::selftest
