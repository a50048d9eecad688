#pragma once

// Experiment configuration: a line-oriented `key = value` format grouped by
// `[section]` headers. Files state frequencies and durations at full hardware
// rate together with a `scale` factor; loading multiplies every frequency
// (and every per-second rate) by the factor and stretches every duration by
// its inverse. That preserves all dimensionless ratios -- filter corners to
// dither, averaging time to bandwidth, and total sample counts -- so a scaled
// run exercises the same physics at desktop cost.
//
// Parsing is strict: unknown sections or keys, duplicate keys, malformed
// numbers, and out-of-range values are all hard errors carrying
// `source:line:` diagnostics. An empty document yields the documented
// defaults. `canonical_text` emits a normalized round-trippable form whose
// FNV-1a digest stamps every output file.

#include <cctype>
#include <cerrno>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "noiselock/common.hpp"
#include "noiselock/dsp.hpp"
#include "noiselock/io.hpp"
#include "noiselock/loop.hpp"
#include "noiselock/plant.hpp"
#include "noiselock/timeseries.hpp"

namespace noiselock::config {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
    sweep_theta,
    lock_acquire,
    stability_vs_R,
    stability_vs_bandwidth,
    stability_vs_loss,
    spectrum_inloop,
    coherent_vs_cml,
};

inline const std::vector<std::pair<std::string, ExperimentKind>>& experiment_kinds() {
    static const std::vector<std::pair<std::string, ExperimentKind>> k = {
        {"sweep_theta", ExperimentKind::sweep_theta},
        {"lock_acquire", ExperimentKind::lock_acquire},
        {"stability_vs_R", ExperimentKind::stability_vs_R},
        {"stability_vs_bandwidth", ExperimentKind::stability_vs_bandwidth},
        {"stability_vs_loss", ExperimentKind::stability_vs_loss},
        {"spectrum_inloop", ExperimentKind::spectrum_inloop},
        {"coherent_vs_cml", ExperimentKind::coherent_vs_cml},
    };
    return k;
}

inline const char* experiment_kind_name(ExperimentKind kind) {
    for (const auto& [name, k] : experiment_kinds()) {
        if (k == kind) return name.c_str();
    }
    return "?";
}

// All values at full hardware rate, exactly as written in the file.
struct ConfigDoc {
    // [experiment]
    std::string kind = "sweep_theta";
    double scale = 0.01;  // frequency multiplier applied at load time
    std::uint64_t seed = 1;
    int workers = 0;  // 0 = one per hardware thread (capped)
    int seeds = 8;    // ensemble size for stability experiments
    int points = 24;  // sweep grid size
    double sweep_start = 0.0;
    double sweep_span = kTwoPi;
    double duration_per_point = 0.02;  // s, per sweep/ensemble leg
    double acquire_within = 0.005;     // s, lock-acquisition deadline
    int starts = 50;
    double start_spread = kPi;  // rad, random initial offsets span
    std::vector<double> r_list;
    double r_grid_min = 0.05;
    double r_grid_max = 2.0;
    double r_grid_step = 0.05;
    std::vector<double> loss_list{0.0};
    std::vector<double> f_low_list;  // Hz, analysis-band lower corners
    double band_ratio = 4.0;         // f_high / f_low for each listed band
    double bandwidth_product = 0.0;  // fixed averaging ratio; 0 = from the chain
    int welch_segment = 131072;      // samples per PSD segment (power of two)
    int psd_decimate = 16;
    int trace_decimate = 100;
    double fit_residual_tol = 0.05;
    double crossing_tol = 0.02;
    double analytic_crossing_tol = 0.01;
    double ratio_tol = 0.20;
    double slope_expected = -0.25;
    double slope_tol = 0.05;
    double min_acquire_fraction = 0.95;
    double min_separation_db = 20.0;
    double min_suppression_db = 6.0;
    double min_locked_fraction = 0.9;
    double fringe_tol = 0.05;
    double null_sigma = 3.0;
    // [plant]
    std::string mode = "homodyne";
    double squeeze_factor = 0.41;
    std::string squeezed_quadrature = "amplitude";
    double loss_lambda = 0.0;
    double amp_a = 1.0;
    double amp_b = 1.0 / 3.0;
    std::string port = "d";
    double flux_scale = 1e5;
    // [modulation]
    double theta0 = kPi / 2.0;
    double theta1 = 0.045;
    double mod_frequency = 1e5;  // Hz
    double demod_phase = 0.0;
    // [disturbance]
    std::string disturbance_kind = "none";
    double dist_frequency = 100.0;  // Hz
    double dist_amplitude = 0.0;    // rad
    double diffusion = 0.0;         // rad^2/s
    double drift_rate = 0.0;        // rad/s
    // [sampling]
    double sample_rate = 1e8;  // Hz
    double duration = 0.05;    // s
    // [bandpass]
    double f_low = 2e6;   // Hz
    double f_high = 2e7;  // Hz
    int low_rollup_order = 3;
    int high_order = 4;
    // [envelope]
    double env_cutoff = 2e5;  // Hz
    std::string env_law = "amplitude";
    // [lockin]
    double time_constant = 1e-4;  // s
    int slope_db_oct = 6;
    bool ac_couple = true;
    double ac_corner_ratio = 0.02;
    // [servo]
    double f_unity = 400.0;  // Hz
    double kp = 0.0;
    double clamp = 50.0;
    std::string servo_sign = "auto";
    double engage_fraction = 0.0;
    double slope_delta = 0.04;      // rad, slope-probe offset
    double probe_duration = 0.008;  // s, slope-probe record length
    double settle_fraction = 0.3;
    double lock_threshold = 0.15;  // rad
    double min_hold_fraction = 0.9;
};

namespace detail {

struct RawEntry {
    std::string value;
    std::size_t line = 0;
    bool used = false;
};

struct RawConfig {
    std::string source;
    std::map<std::string, std::map<std::string, RawEntry>> sections;
};

inline std::string where(const RawConfig& raw, std::size_t line) {
    return raw.source + ":" + std::to_string(line) + ": ";
}

inline const std::vector<std::string>& known_sections() {
    static const std::vector<std::string> s = {"experiment", "plant",    "modulation",
                                               "disturbance", "sampling", "bandpass",
                                               "envelope",    "lockin",   "servo"};
    return s;
}

inline RawConfig parse_raw(std::string_view text, std::string source) {
    RawConfig raw;
    raw.source = std::move(source);
    std::string section;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string line(text.substr(pos, nl == std::string_view::npos ? nl : nl - pos));
        pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        ++lineno;
        line = io::strip(line);
        if (line.empty() || line.front() == '#' || line.front() == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(where(raw, lineno) + "malformed section header: " + line);
            }
            section = io::strip(line.substr(1, line.size() - 2));
            bool known = false;
            for (const auto& s : known_sections()) known = known || s == section;
            if (!known) {
                throw ConfigError(where(raw, lineno) + "unknown section [" + section + "]");
            }
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(where(raw, lineno) + "expected `key = value`, got: " + line);
        }
        const std::string key = io::strip(line.substr(0, eq));
        const std::string value = io::strip(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where(raw, lineno) + "missing key before '='");
        if (section.empty()) {
            throw ConfigError(where(raw, lineno) + "key '" + key +
                              "' appears before any [section] header");
        }
        auto [it, inserted] = raw.sections[section].emplace(key, RawEntry{value, lineno, false});
        if (!inserted) {
            throw ConfigError(where(raw, lineno) + "duplicate key '" + key + "' in [" + section +
                              "] (first on line " + std::to_string(it->second.line) + ")");
        }
    }
    return raw;
}

// Typed access with consumption tracking; anything left unconsumed at the
// end of binding is an unknown key.
class Binder {
public:
    explicit Binder(RawConfig& raw) : raw_(raw) {}

    bool has(const std::string& sec, const std::string& key) const {
        const auto s = raw_.sections.find(sec);
        return s != raw_.sections.end() && s->second.count(key) > 0;
    }

    void number(const std::string& sec, const std::string& key, double& out, double lo, double hi,
                bool hi_open = false) {
        const RawEntry* e = take(sec, key);
        if (!e) return;
        out = parse_number(*e, key);
        check_range(sec, key, *e, out, lo, hi, hi_open);
    }

    void integer(const std::string& sec, const std::string& key, int& out, long lo, long hi) {
        const RawEntry* e = take(sec, key);
        if (!e) return;
        const double v = parse_number(*e, key);
        if (v != static_cast<double>(static_cast<long>(v))) {
            throw ConfigError(where(raw_, e->line) + key + " must be an integer, got '" +
                              e->value + "'");
        }
        const long n = static_cast<long>(v);
        if (n < lo || n > hi) {
            throw ConfigError(where(raw_, e->line) + key + " must be in [" + std::to_string(lo) +
                              ", " + std::to_string(hi) + "], got " + e->value);
        }
        out = static_cast<int>(n);
    }

    void unsigned64(const std::string& sec, const std::string& key, std::uint64_t& out) {
        const RawEntry* e = take(sec, key);
        if (!e) return;
        errno = 0;
        char* end = nullptr;
        const unsigned long long v = std::strtoull(e->value.c_str(), &end, 10);
        if (end == e->value.c_str() || *end != '\0' || errno == ERANGE) {
            throw ConfigError(where(raw_, e->line) + key + " must be an unsigned integer, got '" +
                              e->value + "'");
        }
        out = v;
    }

    void boolean(const std::string& sec, const std::string& key, bool& out) {
        const RawEntry* e = take(sec, key);
        if (!e) return;
        if (e->value == "true" || e->value == "on" || e->value == "1") {
            out = true;
        } else if (e->value == "false" || e->value == "off" || e->value == "0") {
            out = false;
        } else {
            throw ConfigError(where(raw_, e->line) + key + " must be true or false, got '" +
                              e->value + "'");
        }
    }

    void choice(const std::string& sec, const std::string& key, std::string& out,
                const std::vector<std::string>& allowed) {
        const RawEntry* e = take(sec, key);
        if (!e) return;
        for (const auto& a : allowed) {
            if (e->value == a) {
                out = e->value;
                return;
            }
        }
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        throw ConfigError(where(raw_, e->line) + key + " must be one of {" + list + "}, got '" +
                          e->value + "'");
    }

    void number_list(const std::string& sec, const std::string& key, std::vector<double>& out,
                     double lo, double hi, bool hi_open = false) {
        const RawEntry* e = take(sec, key);
        if (!e) return;
        out.clear();
        if (e->value.empty()) return;
        for (const auto& field : io::split_fields(e->value)) {
            const std::string f = io::strip(field);
            if (f.empty()) {
                throw ConfigError(where(raw_, e->line) + key + " has an empty list element");
            }
            RawEntry tmp{f, e->line, true};
            const double v = parse_number(tmp, key);
            check_range(sec, key, *e, v, lo, hi, hi_open);
            out.push_back(v);
        }
    }

    void finish() const {
        for (const auto& [sec, entries] : raw_.sections) {
            for (const auto& [key, e] : entries) {
                if (!e.used) {
                    throw ConfigError(where(raw_, e.line) + "unknown key '" + key + "' in [" +
                                      sec + "]");
                }
            }
        }
    }

private:
    RawEntry* take(const std::string& sec, const std::string& key) {
        const auto s = raw_.sections.find(sec);
        if (s == raw_.sections.end()) return nullptr;
        const auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        k->second.used = true;
        return &k->second;
    }

    double parse_number(const RawEntry& e, const std::string& key) const {
        const char* begin = e.value.c_str();
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin || *end != '\0') {
            throw ConfigError(where(raw_, e.line) + key + " must be a number, got '" + e.value +
                              "'");
        }
        return v;
    }

    void check_range(const std::string&, const std::string& key, const RawEntry& e, double v,
                     double lo, double hi, bool hi_open) const {
        const bool ok = v >= lo && (hi_open ? v < hi : v <= hi);
        if (ok) return;
        std::string bound = "[" + io::format_double(lo) + ", " +
                            (hi == std::numeric_limits<double>::infinity()
                                 ? std::string("inf")
                                 : io::format_double(hi)) +
                            (hi_open ? ")" : "]");
        throw ConfigError(where(raw_, e.line) + key + " must be in " + bound + ", got " +
                          e.value);
    }

    RawConfig& raw_;
};

}  // namespace detail

inline ConfigDoc parse_config_text(std::string_view text, std::string source) {
    detail::RawConfig raw = detail::parse_raw(text, source);
    detail::Binder b(raw);
    ConfigDoc d;
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<std::string> kind_names;
    for (const auto& [name, k] : experiment_kinds()) kind_names.push_back(name);
    b.choice("experiment", "kind", d.kind, kind_names);
    b.number("experiment", "scale", d.scale, 1e-6, 100.0);
    b.unsigned64("experiment", "seed", d.seed);
    b.integer("experiment", "workers", d.workers, 0, 256);
    b.integer("experiment", "seeds", d.seeds, 0, 100000);
    b.integer("experiment", "points", d.points, 2, 100000);
    b.number("experiment", "sweep_start", d.sweep_start, -kTwoPi, kTwoPi);
    b.number("experiment", "sweep_span", d.sweep_span, 1e-3, 2.0 * kTwoPi);
    b.number("experiment", "duration_per_point", d.duration_per_point, 1e-9, inf);
    b.number("experiment", "acquire_within", d.acquire_within, 1e-9, inf);
    b.integer("experiment", "starts", d.starts, 1, 100000);
    b.number("experiment", "start_spread", d.start_spread, 1e-3, kTwoPi);
    b.number_list("experiment", "r_list", d.r_list, 0.0, 5.0);
    b.number("experiment", "r_grid_min", d.r_grid_min, 0.0, 5.0);
    b.number("experiment", "r_grid_max", d.r_grid_max, 0.0, 5.0);
    b.number("experiment", "r_grid_step", d.r_grid_step, 1e-6, 5.0);
    b.number_list("experiment", "loss_list", d.loss_list, 0.0, 1.0, true);
    b.number_list("experiment", "f_low_list", d.f_low_list, 1e-9, inf);
    b.number("experiment", "band_ratio", d.band_ratio, 1.0 + 1e-9, 1e6);
    b.number("experiment", "bandwidth_product", d.bandwidth_product, 0.0, inf);
    b.integer("experiment", "welch_segment", d.welch_segment, 64, 1 << 24);
    b.integer("experiment", "psd_decimate", d.psd_decimate, 1, 1000000);
    b.integer("experiment", "trace_decimate", d.trace_decimate, 1, 1000000);
    b.number("experiment", "fit_residual_tol", d.fit_residual_tol, 1e-6, 1.0);
    b.number("experiment", "crossing_tol", d.crossing_tol, 1e-6, 1.0);
    b.number("experiment", "analytic_crossing_tol", d.analytic_crossing_tol, 1e-6, 1.0);
    b.number("experiment", "ratio_tol", d.ratio_tol, 1e-6, 1.0);
    b.number("experiment", "slope_expected", d.slope_expected, -10.0, 10.0);
    b.number("experiment", "slope_tol", d.slope_tol, 1e-6, 10.0);
    b.number("experiment", "min_acquire_fraction", d.min_acquire_fraction, 1e-6, 1.0);
    b.number("experiment", "min_separation_db", d.min_separation_db, 0.0, 200.0);
    b.number("experiment", "min_suppression_db", d.min_suppression_db, 0.0, 200.0);
    b.number("experiment", "min_locked_fraction", d.min_locked_fraction, 1e-6, 1.0);
    b.number("experiment", "fringe_tol", d.fringe_tol, 1e-6, 1.0);
    b.number("experiment", "null_sigma", d.null_sigma, 0.1, 100.0);

    b.choice("plant", "mode", d.mode, {"homodyne", "coherent"});
    b.number("plant", "squeeze_factor", d.squeeze_factor, 0.0, 5.0);
    b.choice("plant", "squeezed_quadrature", d.squeezed_quadrature, {"amplitude", "phase"});
    b.number("plant", "loss_lambda", d.loss_lambda, 0.0, 1.0, true);
    b.number("plant", "amp_a", d.amp_a, 0.0, inf);
    b.number("plant", "amp_b", d.amp_b, 0.0, inf);
    b.choice("plant", "port", d.port, {"c", "d"});
    b.number("plant", "flux_scale", d.flux_scale, 1e-9, inf);

    b.number("modulation", "theta0", d.theta0, -kTwoPi, kTwoPi);
    b.number("modulation", "theta1", d.theta1, 0.0, 1.0, true);
    b.number("modulation", "frequency", d.mod_frequency, 1e-9, inf);
    b.number("modulation", "demod_phase", d.demod_phase, -kTwoPi, kTwoPi);

    b.choice("disturbance", "kind", d.disturbance_kind,
             {"none", "sinusoid", "random_walk", "constant_drift"});
    b.number("disturbance", "frequency", d.dist_frequency, 0.0, inf);
    b.number("disturbance", "amplitude", d.dist_amplitude, 0.0, inf);
    b.number("disturbance", "diffusion", d.diffusion, 0.0, inf);
    b.number("disturbance", "drift_rate", d.drift_rate, -inf, inf);

    b.number("sampling", "sample_rate", d.sample_rate, 1e-9, inf);
    b.number("sampling", "duration", d.duration, 1e-12, inf);

    b.number("bandpass", "f_low", d.f_low, 1e-9, inf);
    b.number("bandpass", "f_high", d.f_high, 1e-9, inf);
    b.integer("bandpass", "low_rollup_order", d.low_rollup_order, 1, 6);
    b.integer("bandpass", "high_order", d.high_order, 1, 8);

    b.number("envelope", "cutoff", d.env_cutoff, 1e-9, inf);
    b.choice("envelope", "law", d.env_law, {"amplitude", "power"});

    b.number("lockin", "time_constant", d.time_constant, 1e-12, inf);
    b.integer("lockin", "slope_db_oct", d.slope_db_oct, 6, 12);
    if (d.slope_db_oct != 6 && d.slope_db_oct != 12) {
        throw ConfigError(source + ": slope_db_oct must be 6 or 12 (dB per octave)");
    }
    b.boolean("lockin", "ac_couple", d.ac_couple);
    b.number("lockin", "ac_corner_ratio", d.ac_corner_ratio, 1e-6, 0.5, true);

    b.number("servo", "f_unity", d.f_unity, 1e-9, inf);
    b.number("servo", "kp", d.kp, 0.0, inf);
    b.number("servo", "clamp", d.clamp, 1e-9, inf);
    b.choice("servo", "sign", d.servo_sign, {"auto", "+1", "-1"});
    b.number("servo", "engage_fraction", d.engage_fraction, 0.0, 1.0, true);
    b.number("servo", "slope_delta", d.slope_delta, 1e-6, 0.5);
    b.number("servo", "probe_duration", d.probe_duration, 1e-9, inf);
    b.number("servo", "settle_fraction", d.settle_fraction, 0.0, 0.9);
    b.number("servo", "lock_threshold", d.lock_threshold, 1e-6, kPi);
    b.number("servo", "min_hold_fraction", d.min_hold_fraction, 0.0, 1.0);

    b.finish();
    return d;
}

inline ConfigDoc parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in.good()) throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path.string());
}

namespace detail {

inline std::string join_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? ", " : "") + io::format_double(v[i]);
    }
    return out;
}

}  // namespace detail

// Normalized emission: every key in a fixed order, full-rate values.
// Re-parsing the canonical text reproduces the document exactly, so the
// FNV-1a digest of this string identifies a configuration.
inline std::string canonical_text(const ConfigDoc& d) {
    std::ostringstream o;
    const auto num = [](double v) { return io::format_double(v); };
    o << "[experiment]\n";
    o << "kind = " << d.kind << "\n";
    o << "scale = " << num(d.scale) << "\n";
    o << "seed = " << d.seed << "\n";
    o << "workers = " << d.workers << "\n";
    o << "seeds = " << d.seeds << "\n";
    o << "points = " << d.points << "\n";
    o << "sweep_start = " << num(d.sweep_start) << "\n";
    o << "sweep_span = " << num(d.sweep_span) << "\n";
    o << "duration_per_point = " << num(d.duration_per_point) << "\n";
    o << "acquire_within = " << num(d.acquire_within) << "\n";
    o << "starts = " << d.starts << "\n";
    o << "start_spread = " << num(d.start_spread) << "\n";
    o << "r_list = " << detail::join_list(d.r_list) << "\n";
    o << "r_grid_min = " << num(d.r_grid_min) << "\n";
    o << "r_grid_max = " << num(d.r_grid_max) << "\n";
    o << "r_grid_step = " << num(d.r_grid_step) << "\n";
    o << "loss_list = " << detail::join_list(d.loss_list) << "\n";
    o << "f_low_list = " << detail::join_list(d.f_low_list) << "\n";
    o << "band_ratio = " << num(d.band_ratio) << "\n";
    o << "bandwidth_product = " << num(d.bandwidth_product) << "\n";
    o << "welch_segment = " << d.welch_segment << "\n";
    o << "psd_decimate = " << d.psd_decimate << "\n";
    o << "trace_decimate = " << d.trace_decimate << "\n";
    o << "fit_residual_tol = " << num(d.fit_residual_tol) << "\n";
    o << "crossing_tol = " << num(d.crossing_tol) << "\n";
    o << "analytic_crossing_tol = " << num(d.analytic_crossing_tol) << "\n";
    o << "ratio_tol = " << num(d.ratio_tol) << "\n";
    o << "slope_expected = " << num(d.slope_expected) << "\n";
    o << "slope_tol = " << num(d.slope_tol) << "\n";
    o << "min_acquire_fraction = " << num(d.min_acquire_fraction) << "\n";
    o << "min_separation_db = " << num(d.min_separation_db) << "\n";
    o << "min_suppression_db = " << num(d.min_suppression_db) << "\n";
    o << "min_locked_fraction = " << num(d.min_locked_fraction) << "\n";
    o << "fringe_tol = " << num(d.fringe_tol) << "\n";
    o << "null_sigma = " << num(d.null_sigma) << "\n";
    o << "\n[plant]\n";
    o << "mode = " << d.mode << "\n";
    o << "squeeze_factor = " << num(d.squeeze_factor) << "\n";
    o << "squeezed_quadrature = " << d.squeezed_quadrature << "\n";
    o << "loss_lambda = " << num(d.loss_lambda) << "\n";
    o << "amp_a = " << num(d.amp_a) << "\n";
    o << "amp_b = " << num(d.amp_b) << "\n";
    o << "port = " << d.port << "\n";
    o << "flux_scale = " << num(d.flux_scale) << "\n";
    o << "\n[modulation]\n";
    o << "theta0 = " << num(d.theta0) << "\n";
    o << "theta1 = " << num(d.theta1) << "\n";
    o << "frequency = " << num(d.mod_frequency) << "\n";
    o << "demod_phase = " << num(d.demod_phase) << "\n";
    o << "\n[disturbance]\n";
    o << "kind = " << d.disturbance_kind << "\n";
    o << "frequency = " << num(d.dist_frequency) << "\n";
    o << "amplitude = " << num(d.dist_amplitude) << "\n";
    o << "diffusion = " << num(d.diffusion) << "\n";
    o << "drift_rate = " << num(d.drift_rate) << "\n";
    o << "\n[sampling]\n";
    o << "sample_rate = " << num(d.sample_rate) << "\n";
    o << "duration = " << num(d.duration) << "\n";
    o << "\n[bandpass]\n";
    o << "f_low = " << num(d.f_low) << "\n";
    o << "f_high = " << num(d.f_high) << "\n";
    o << "low_rollup_order = " << d.low_rollup_order << "\n";
    o << "high_order = " << d.high_order << "\n";
    o << "\n[envelope]\n";
    o << "cutoff = " << num(d.env_cutoff) << "\n";
    o << "law = " << d.env_law << "\n";
    o << "\n[lockin]\n";
    o << "time_constant = " << num(d.time_constant) << "\n";
    o << "slope_db_oct = " << d.slope_db_oct << "\n";
    o << "ac_couple = " << (d.ac_couple ? "true" : "false") << "\n";
    o << "ac_corner_ratio = " << num(d.ac_corner_ratio) << "\n";
    o << "\n[servo]\n";
    o << "f_unity = " << num(d.f_unity) << "\n";
    o << "kp = " << num(d.kp) << "\n";
    o << "clamp = " << num(d.clamp) << "\n";
    o << "sign = " << d.servo_sign << "\n";
    o << "engage_fraction = " << num(d.engage_fraction) << "\n";
    o << "slope_delta = " << num(d.slope_delta) << "\n";
    o << "probe_duration = " << num(d.probe_duration) << "\n";
    o << "settle_fraction = " << num(d.settle_fraction) << "\n";
    o << "lock_threshold = " << num(d.lock_threshold) << "\n";
    o << "min_hold_fraction = " << num(d.min_hold_fraction) << "\n";
    return o.str();
}

// Everything an experiment needs, in scaled (run-time) units.
struct Resolved {
    ExperimentKind kind = ExperimentKind::sweep_theta;
    std::string name;  // preset name or config-file stem
    double scale = 1.0;
    std::uint64_t seed = 1;
    std::uint64_t hash = 0;
    std::string canonical;  // full-rate normalized text
    int workers = 0;

    timeseries::SynthesisConfig synth;
    loop::ReadoutConfig readout;

    double f_unity = 0.0;
    double kp = 0.0;
    double clamp = 50.0;
    int servo_sign = 0;  // 0 = from the measured slope
    double engage_fraction = 0.0;
    double slope_delta = 0.04;
    double probe_duration = 0.0;
    double settle_fraction = 0.3;
    double lock_threshold = 0.15;
    double min_hold_fraction = 0.9;

    int seeds = 0;
    int points = 0;
    int starts = 0;
    double sweep_start = 0.0;
    double sweep_span = 0.0;
    double duration_per_point = 0.0;
    double acquire_within = 0.0;
    double start_spread = 0.0;
    std::vector<double> r_list;
    double r_grid_min = 0.0, r_grid_max = 0.0, r_grid_step = 0.0;
    std::vector<double> loss_list;
    std::vector<double> f_low_list;
    double band_ratio = 4.0;
    double bandwidth_product = 0.0;
    std::size_t welch_segment = 0;
    std::size_t psd_decimate = 1;
    std::size_t trace_decimate = 1;

    double fit_residual_tol = 0.0, crossing_tol = 0.0, analytic_crossing_tol = 0.0;
    double ratio_tol = 0.0;
    double slope_expected = 0.0, slope_tol = 0.0;
    double min_acquire_fraction = 0.0, min_separation_db = 0.0, min_suppression_db = 0.0;
    double min_locked_fraction = 0.0, fringe_tol = 0.0, null_sigma = 3.0;
};

inline ExperimentKind kind_from_name(const std::string& name) {
    for (const auto& [n, k] : experiment_kinds()) {
        if (n == name) return k;
    }
    throw ConfigError("unknown experiment kind: " + name);
}

inline Resolved resolve(const ConfigDoc& d, std::string name) {
    Resolved r;
    r.kind = kind_from_name(d.kind);
    r.name = std::move(name);
    r.scale = d.scale;
    r.seed = d.seed;
    r.workers = d.workers;
    r.canonical = canonical_text(d);
    r.hash = fnv1a64(r.canonical);

    const double fx = d.scale;        // frequencies and per-second rates
    const double tx = 1.0 / d.scale;  // durations

    auto& s = r.synth;
    s.mode = d.mode == "homodyne" ? timeseries::DetectionMode::homodyne
                                  : timeseries::DetectionMode::coherent;
    s.state.squeeze_factor = d.squeeze_factor;
    s.state.squeezed = d.squeezed_quadrature == "amplitude" ? plant::SqueezedQuadrature::amplitude
                                                            : plant::SqueezedQuadrature::phase;
    s.state.loss_lambda = d.loss_lambda;
    s.pair.amp_a = d.amp_a;
    s.pair.amp_b = d.amp_b;
    s.port = d.port == "d" ? plant::Port::d : plant::Port::c;
    s.flux_scale = d.flux_scale;
    s.modulation.theta0 = d.theta0;
    s.modulation.theta1 = d.theta1;
    s.modulation.set_mod_freq_hz(d.mod_frequency * fx);
    s.modulation.demod_phase = d.demod_phase;
    s.disturbance.kind = d.disturbance_kind == "none"          ? plant::DisturbanceKind::none
                         : d.disturbance_kind == "sinusoid"    ? plant::DisturbanceKind::sinusoid
                         : d.disturbance_kind == "random_walk" ? plant::DisturbanceKind::random_walk
                                                               : plant::DisturbanceKind::constant_drift;
    s.disturbance.freq_hz = d.dist_frequency * fx;
    s.disturbance.amplitude = d.dist_amplitude;
    s.disturbance.diffusion = d.diffusion * fx;
    s.disturbance.drift_rate = d.drift_rate * fx;
    s.sample_rate = d.sample_rate * fx;
    s.duration = d.duration * tx;
    s.seed = d.seed;

    auto& ro = r.readout;
    ro.method = loop::ReadoutMethod::noise_lock;
    ro.chain.bandpass.f_low = d.f_low * fx;
    ro.chain.bandpass.f_high = d.f_high * fx;
    ro.chain.bandpass.low_rollup_order = d.low_rollup_order;
    ro.chain.bandpass.high_order = d.high_order;
    ro.chain.envelope.cutoff = d.env_cutoff * fx;
    ro.chain.envelope.law =
        d.env_law == "amplitude" ? dsp::EnvelopeLaw::amplitude : dsp::EnvelopeLaw::power;
    ro.chain.lockin.time_constant = d.time_constant * tx;
    ro.chain.lockin.slope_db_oct = d.slope_db_oct;
    ro.chain.lockin.ac_couple = d.ac_couple;
    ro.chain.lockin.ac_corner_ratio = d.ac_corner_ratio;
    ro.direct_lockin = ro.chain.lockin;
    ro.demod_phase = d.demod_phase;

    r.f_unity = d.f_unity * fx;
    r.kp = d.kp;
    r.clamp = d.clamp;
    r.servo_sign = d.servo_sign == "auto" ? 0 : (d.servo_sign == "+1" ? 1 : -1);
    r.engage_fraction = d.engage_fraction;
    r.slope_delta = d.slope_delta;
    r.probe_duration = d.probe_duration * tx;
    r.settle_fraction = d.settle_fraction;
    r.lock_threshold = d.lock_threshold;
    r.min_hold_fraction = d.min_hold_fraction;

    r.seeds = d.seeds;
    r.points = d.points;
    r.starts = d.starts;
    r.sweep_start = d.sweep_start;
    r.sweep_span = d.sweep_span;
    r.duration_per_point = d.duration_per_point * tx;
    r.acquire_within = d.acquire_within * tx;
    r.start_spread = d.start_spread;
    r.r_list = d.r_list;
    r.r_grid_min = d.r_grid_min;
    r.r_grid_max = d.r_grid_max;
    r.r_grid_step = d.r_grid_step;
    r.loss_list = d.loss_list;
    r.f_low_list = d.f_low_list;
    for (auto& f : r.f_low_list) f *= fx;
    r.band_ratio = d.band_ratio;
    r.bandwidth_product = d.bandwidth_product;
    r.welch_segment = static_cast<std::size_t>(d.welch_segment);
    r.psd_decimate = static_cast<std::size_t>(d.psd_decimate);
    r.trace_decimate = static_cast<std::size_t>(d.trace_decimate);

    r.fit_residual_tol = d.fit_residual_tol;
    r.crossing_tol = d.crossing_tol;
    r.analytic_crossing_tol = d.analytic_crossing_tol;
    r.ratio_tol = d.ratio_tol;
    r.slope_expected = d.slope_expected;
    r.slope_tol = d.slope_tol;
    r.min_acquire_fraction = d.min_acquire_fraction;
    r.min_separation_db = d.min_separation_db;
    r.min_suppression_db = d.min_suppression_db;
    r.min_locked_fraction = d.min_locked_fraction;
    r.fringe_tol = d.fringe_tol;
    r.null_sigma = d.null_sigma;

    // Structural cross-checks. Field-level ranges were enforced at parse
    // time with line numbers; these relate fields to each other.
    if (d.f_high <= d.f_low) throw ConfigError("bandpass: f_high must exceed f_low");
    if (d.r_grid_max < d.r_grid_min) {
        throw ConfigError("experiment: r_grid_max must be >= r_grid_min");
    }
    if ((r.welch_segment & (r.welch_segment - 1)) != 0) {
        throw ConfigError("experiment: welch_segment must be a power of two");
    }
    const bool needs_homodyne = r.kind == ExperimentKind::stability_vs_R ||
                                r.kind == ExperimentKind::stability_vs_bandwidth ||
                                r.kind == ExperimentKind::stability_vs_loss ||
                                r.kind == ExperimentKind::spectrum_inloop;
    if (needs_homodyne && s.mode != timeseries::DetectionMode::homodyne) {
        throw ConfigError(std::string(experiment_kind_name(r.kind)) +
                          " requires [plant] mode = homodyne");
    }
    if (r.kind == ExperimentKind::coherent_vs_cml &&
        s.mode != timeseries::DetectionMode::coherent) {
        throw ConfigError("coherent_vs_cml requires [plant] mode = coherent");
    }
    if (r.kind == ExperimentKind::stability_vs_bandwidth && r.f_low_list.size() < 2) {
        throw ConfigError("stability_vs_bandwidth requires f_low_list with at least two bands");
    }
    if (r.kind == ExperimentKind::stability_vs_R && r.seeds > 0 && r.r_list.empty()) {
        throw ConfigError("stability_vs_R with seeds > 0 requires a non-empty r_list");
    }

    // Fail fast on impossible filter chains and synthesis parameters; these
    // validators name the offending field in their message.
    try {
        s.validate();
        ro.chain.validate(s.sample_rate);
        require(s.modulation.mod_freq_hz() < ro.chain.bandpass.f_low,
                "modulation frequency must sit below the bandpass f_low");
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return r;
}

}  // namespace noiselock::config
