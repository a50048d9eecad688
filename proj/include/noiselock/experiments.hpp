#pragma once

// Experiment runner: turns a resolved configuration into artifact files
// (CSV tables, SVG plots, summary.txt / summary.json) under an output
// directory. Every numeric verdict compares a measured quantity against a
// tolerance declared in the configuration; nothing is hard-coded here.
// Outputs are deterministic for a fixed config: worker threads only fill
// pre-indexed slots and all reductions run in a fixed order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "noiselock/analytic.hpp"
#include "noiselock/config.hpp"
#include "noiselock/io.hpp"
#include "noiselock/loop.hpp"
#include "noiselock/rng.hpp"
#include "noiselock/spectral.hpp"
#include "noiselock/svg.hpp"
#include "noiselock/timeseries.hpp"
#include "noiselock/version.hpp"

namespace noiselock::experiments {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

inline void parallel_for(std::size_t n, int workers,
                         const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const unsigned hw = std::thread::hardware_concurrency();
    std::size_t w = workers > 0 ? static_cast<std::size_t>(workers)
                                : std::min<std::size_t>(hw ? hw : 4, 8);
    w = std::min(w, n);
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr err;
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                    next.store(n);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

struct Verdict {
    std::string name;
    double value = 0.0;
    std::string cmp;  // "<=", ">=", "<", ">"
    double limit = 0.0;
    bool pass = false;
};

struct Outcome {
    bool pass = true;
    std::vector<Verdict> verdicts;
    ordered_json summary;
};

namespace detail {

inline std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline double mean_of(const std::vector<double>& v, std::size_t from = 0) {
    double s = 0.0;
    for (std::size_t i = from; i < v.size(); ++i) s += v[i];
    return s / static_cast<double>(v.size() - from);
}

inline double rms_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
}

// Standard error of the overall mean estimated from disjoint block means,
// which absorbs the sample-to-sample correlation of filtered records.
inline double block_sem(const std::vector<double>& v, std::size_t from,
                        std::size_t nblocks = 8) {
    const std::size_t n = v.size() - from;
    nblocks = std::min<std::size_t>(nblocks, std::max<std::size_t>(n / 2, 1));
    const std::size_t len = n / nblocks;
    if (len == 0 || nblocks < 2) return 0.0;
    std::vector<double> means(nblocks, 0.0);
    for (std::size_t b = 0; b < nblocks; ++b) {
        double s = 0.0;
        for (std::size_t k = 0; k < len; ++k) s += v[from + b * len + k];
        means[b] = s / static_cast<double>(len);
    }
    const double m = mean_of(means);
    double var = 0.0;
    for (double x : means) var += (x - m) * (x - m);
    var /= static_cast<double>(nblocks - 1);
    return std::sqrt(var / static_cast<double>(nblocks));
}

// Linear-interpolated zero crossings of y(x) on a grid.
inline std::vector<double> zero_crossings(const std::vector<double>& x,
                                          const std::vector<double>& y) {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        if (y[i] == 0.0) out.push_back(x[i]);
        if (y[i] * y[i + 1] < 0.0) {
            out.push_back(x[i] + (x[i + 1] - x[i]) * (-y[i]) / (y[i + 1] - y[i]));
        }
    }
    return out;
}

inline double nearest_crossing_distance(const std::vector<double>& crossings, double target,
                                        double period) {
    double best = std::numeric_limits<double>::infinity();
    for (double c : crossings) best = std::min(best, std::abs(wrap_phase(c - target, period)));
    return best;
}

inline double fit_amplitude(const std::vector<double>& y, const std::vector<double>& basis) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        num += y[i] * basis[i];
        den += basis[i] * basis[i];
    }
    require(den > 0.0, "fit_amplitude: degenerate basis");
    return num / den;
}

inline double sgn(double x) { return x < 0.0 ? -1.0 : 1.0; }

}  // namespace detail

// Shared state for one experiment run: config, output dir, accumulated
// verdicts and summary document.
struct Ctx {
    const config::Resolved& cfg;
    fs::path dir;
    Outcome out;

    Ctx(const config::Resolved& c, fs::path d) : cfg(c), dir(std::move(d)) {
        out.summary["name"] = cfg.name;
        out.summary["experiment"] = config::experiment_kind_name(cfg.kind);
        out.summary["version"] = kVersion;
        out.summary["seed"] = cfg.seed;
        out.summary["scale"] = cfg.scale;
        out.summary["config_hash"] = detail::hash_hex(cfg.hash);
        out.summary["results"] = ordered_json::object();
    }

    void stamp(io::Table& t) const {
        t.add_meta("config", detail::hash_hex(cfg.hash));
        t.add_meta("seed", std::to_string(cfg.seed));
        t.add_meta("version", kVersion);
        t.add_meta("scale", io::format_double(cfg.scale));
        t.add_meta("experiment", config::experiment_kind_name(cfg.kind));
        t.add_meta("name", cfg.name);
    }

    void csv(const std::string& file, io::Table& t) const { io::write_csv(dir / file, t); }

    template <typename T>
    void result(const std::string& key, const T& value) {
        out.summary["results"][key] = value;
    }

    bool check(const std::string& name, double value, const std::string& cmp, double limit) {
        const bool ok = cmp == "<=" ? value <= limit
                        : cmp == ">=" ? value >= limit
                        : cmp == "<"  ? value < limit
                                      : value > limit;
        out.verdicts.push_back({name, value, cmp, limit, ok});
        out.pass = out.pass && ok;
        return ok;
    }

    // Noise-readout variant with the lock-in demodulating the photocurrent
    // directly, for side-by-side comparisons.
    loop::ReadoutConfig direct_readout() const {
        loop::ReadoutConfig ro = cfg.readout;
        ro.method = loop::ReadoutMethod::coherent_demod;
        return ro;
    }

    // Mean-error slope about an angle, probed on an undisturbed plant.
    double probe_slope(const loop::ReadoutConfig& ro, double angle, std::uint64_t tag) const {
        timeseries::SynthesisConfig synth = cfg.synth;
        synth.duration = cfg.probe_duration;
        synth.disturbance = plant::DisturbanceSpec{};
        synth.seed = rng::child_seed(cfg.seed, tag);
        return loop::measure_error_slope(synth, ro, angle, cfg.slope_delta, cfg.settle_fraction);
    }

    // Independent noise samples entering one error-point average: analysis
    // bandwidth over the lock-in's noise-equivalent bandwidth.
    double averaging_product(const dsp::DspChainConfig& chain) const {
        const double fs = cfg.synth.sample_rate;
        dsp::BandpassFilter bpf(chain.bandpass, fs);
        dsp::LockIn li(chain.lockin, cfg.synth.modulation.mod_freq_hz(), 0.0, fs);
        return bpf.equivalent_noise_bandwidth() / li.noise_equivalent_bandwidth();
    }
};

// ---------------------------------------------------------------------------
// sweep_theta: open-loop error signal vs operating phase, fitted against the
// expected discriminant shape, with the analytic curve alongside.
// ---------------------------------------------------------------------------
inline void run_sweep_theta(Ctx& ctx) {
    const auto& cfg = ctx.cfg;
    const bool homodyne = cfg.synth.mode == timeseries::DetectionMode::homodyne;
    const double period = homodyne ? kPi : kTwoPi;
    const std::vector<double> expected_crossings =
        homodyne ? std::vector<double>{0.0, kPi / 2.0}
                 : std::vector<double>{kPi / 2.0, 3.0 * kPi / 2.0};

    const std::size_t n = static_cast<std::size_t>(cfg.points);
    std::vector<double> theta(n), mean(n), rms(n);
    for (std::size_t i = 0; i < n; ++i) {
        theta[i] = cfg.sweep_start + cfg.sweep_span * static_cast<double>(i) /
                                         static_cast<double>(n);
    }
    parallel_for(n, cfg.workers, [&](std::size_t i) {
        timeseries::SynthesisConfig synth = cfg.synth;
        synth.modulation.theta0 = theta[i];
        synth.duration = cfg.duration_per_point;
        synth.seed = rng::child_seed(cfg.seed, i);
        const auto p = loop::measure_error_point(synth, cfg.readout, cfg.settle_fraction);
        mean[i] = p.mean;
        rms[i] = p.rms;
    });

    std::vector<double> basis(n);
    for (std::size_t i = 0; i < n; ++i) {
        basis[i] = homodyne ? std::sin(2.0 * theta[i]) : std::cos(theta[i]);
    }
    const double amp = detail::fit_amplitude(mean, basis);
    std::vector<double> fit(n), resid(n);
    for (std::size_t i = 0; i < n; ++i) {
        fit[i] = amp * basis[i];
        resid[i] = mean[i] - fit[i];
    }
    const double resid_frac = detail::rms_of(resid) / std::abs(amp);

    io::Table sweep;
    ctx.stamp(sweep);
    sweep.add_meta("columns_note", "errors in demodulator output units");
    sweep.add_column("theta_rad", theta);
    sweep.add_column("error_mean", mean);
    sweep.add_column("error_rms", rms);
    sweep.add_column("error_fit", fit);
    ctx.csv("sweep.csv", sweep);

    // Dense analytic curve over the same span (arbitrary error units).
    const std::size_t dn = 481;
    std::vector<double> ath(dn), aerr(dn), aux(dn);
    const auto vars = homodyne ? plant::quadrature_variances(cfg.synth.state)
                               : plant::QuadratureVariances{};
    for (std::size_t i = 0; i < dn; ++i) {
        const double th =
            cfg.sweep_start + cfg.sweep_span * static_cast<double>(i) / static_cast<double>(dn);
        ath[i] = th;
        if (homodyne) {
            aerr[i] = analytic::error_signal_homodyne(vars, th, cfg.synth.modulation.theta1, 1.0,
                                                      1.0);
            aux[i] = db_from_power_ratio(plant::homodyne_variance(vars, th));
        } else {
            aerr[i] = analytic::error_signal_coherent(cfg.synth.pair, th,
                                                      cfg.synth.modulation.theta1, 1.0);
            aux[i] = plant::relative_fringe_power(cfg.synth.pair, th, cfg.synth.port);
        }
    }
    io::Table curve;
    ctx.stamp(curve);
    curve.add_column("theta_rad", ath);
    curve.add_column("error_analytic", aerr);
    curve.add_column(homodyne ? "variance_db" : "fringe_relative", aux);
    ctx.csv("analytic_curve.csv", curve);

    svg::write_plot(ctx.dir / "sweep.svg",
                    {{"measured mean", theta, mean}, {"fitted shape", theta, fit}},
                    {cfg.name + ": error signal vs phase", "theta (rad)", "error (demod units)"});

    ctx.check("fit_residual_fraction", resid_frac, "<=", cfg.fit_residual_tol);
    ctx.result("fit_amplitude", amp);
    ctx.result("fit_residual_fraction", resid_frac);

    const auto sim_cross = detail::zero_crossings(theta, mean);
    const auto ana_cross = detail::zero_crossings(ath, aerr);
    for (double e : expected_crossings) {
        const std::string tag = svg::detail::fmt(e, "%.4g");
        ctx.check("sim_crossing_offset_at_" + tag,
                  detail::nearest_crossing_distance(sim_cross, e, period), "<=",
                  cfg.crossing_tol);
        ctx.check("analytic_crossing_offset_at_" + tag,
                  detail::nearest_crossing_distance(ana_cross, e, period), "<=",
                  cfg.analytic_crossing_tol);
    }
}

// ---------------------------------------------------------------------------
// lock_acquire: close the loop mid-record and verify the commanded lock
// point is reached; optionally repeat from randomized initial phases.
// ---------------------------------------------------------------------------
namespace detail {

struct AcquireResult {
    loop::LockReport report;
    double start_offset = 0.0;
};

}  // namespace detail

inline void run_lock_acquire(Ctx& ctx) {
    const auto& cfg = ctx.cfg;
    const bool homodyne = cfg.synth.mode == timeseries::DetectionMode::homodyne;
    const double lock_angle = cfg.synth.modulation.theta0;
    const double wrap = homodyne ? kPi : kTwoPi;

    const double slope = ctx.probe_slope(cfg.readout, lock_angle, 9001);
    require(slope != 0.0, "lock_acquire: discriminant slope vanishes at the lock angle");
    const double ki = kTwoPi * cfg.f_unity / std::abs(slope);
    const double sign = cfg.servo_sign != 0 ? static_cast<double>(cfg.servo_sign)
                                            : detail::sgn(slope);

    loop::ClosedLoopConfig lc;
    lc.synth = cfg.synth;
    lc.readout = cfg.readout;
    lc.servo.ki = ki;
    lc.servo.kp = cfg.kp / std::abs(slope);
    lc.servo.sign = sign;
    lc.servo.clamp = cfg.clamp;
    lc.engage_fraction = cfg.engage_fraction;
    lc.record_decimate = cfg.trace_decimate;
    lc.record_photocurrent = true;
    lc.record_internals = false;
    const auto tr = loop::run_closed_loop(lc);
    const double engage_time = cfg.engage_fraction * cfg.synth.duration;
    const auto rep = loop::assess_lock(tr, cfg.synth.modulation, lock_angle, wrap, engage_time,
                                       cfg.lock_threshold, cfg.min_hold_fraction);

    const auto& t_err = tr.channel("error");
    const auto& t_phase = tr.channel("true_phase");
    const auto& t_ctrl = tr.channel("control");
    const auto& t_cur = tr.channel("photocurrent");
    const std::size_t nrec = t_err.size();
    std::vector<double> time(nrec);
    for (std::size_t k = 0; k < nrec; ++k) time[k] = static_cast<double>(k) / tr.sample_rate;

    io::Table trace;
    ctx.stamp(trace);
    trace.add_column("time_s", time);
    trace.add_column("true_phase_rad", t_phase);
    trace.add_column("error", t_err);
    trace.add_column("control_rad", t_ctrl);
    trace.add_column("photocurrent", t_cur);
    std::vector<double> fringe;
    if (!homodyne) {
        fringe.resize(nrec);
        for (std::size_t k = 0; k < nrec; ++k) fringe[k] = t_cur[k] / cfg.synth.flux_scale;
        trace.add_column("fringe_relative", fringe);
    }
    ctx.csv("trace.csv", trace);

    if (homodyne) {
        svg::write_plot(ctx.dir / "trace.svg",
                        {{"true phase (rad)", time, t_phase}, {"control (rad)", time, t_ctrl}},
                        {cfg.name + ": lock acquisition", "time (s)", "rad"});
    } else {
        svg::write_plot(ctx.dir / "trace.svg",
                        {{"relative fringe power", time, fringe}, {"control (rad)", time, t_ctrl}},
                        {cfg.name + ": lock acquisition", "time (s)", "fringe / rad"});
    }

    ctx.result("slope", slope);
    ctx.result("ki", ki);
    ctx.result("sign", sign);
    ctx.result("acquisition_time_s", rep.acquisition_time);
    ctx.result("residual_rms_rad", rep.residual_rms);
    ctx.result("hold_fraction", rep.hold_fraction);
    ctx.check("acquisition_time_s", rep.acquisition_time, "<=", cfg.acquire_within);

    // Post-acquisition error consistent with zero: the mean of the loop
    // error over the last quarter must sit within null_sigma standard
    // errors (block estimate) of zero.
    const std::size_t k0 = nrec - nrec / 4;
    std::vector<double> tail(t_err.begin() + static_cast<std::ptrdiff_t>(k0), t_err.end());
    const double tail_mean = detail::mean_of(tail);
    const double sem = detail::block_sem(tail, 0);
    if (sem > 0.0) {
        ctx.check("error_null_sigmas", std::abs(tail_mean) / sem, "<=", cfg.null_sigma);
    }
    ctx.result("error_tail_mean", tail_mean);

    if (!homodyne) {
        // The fringe must reach its commanded extremum: distance between the
        // tail-average relative power and the target, as a fraction of the
        // full fringe swing.
        const double target = plant::relative_fringe_power(cfg.synth.pair, lock_angle,
                                                           cfg.synth.port);
        const double swing = 2.0 * cfg.synth.pair.visibility();
        std::vector<double> ftail(fringe.begin() + static_cast<std::ptrdiff_t>(k0),
                                  fringe.end());
        const double pos = std::abs(detail::mean_of(ftail) - target) / swing;
        ctx.result("fringe_offset_fraction", pos);
        ctx.check("fringe_offset_fraction", pos, "<=", cfg.fringe_tol);
    }

    if (cfg.starts > 1) {
        const std::size_t ns = static_cast<std::size_t>(cfg.starts);
        std::vector<detail::AcquireResult> res(ns);
        parallel_for(ns, cfg.workers, [&](std::size_t i) {
            const double off =
                (rng::uniform01(cfg.seed, rng::kStreamExperiment, 5000 + i) - 0.5) *
                cfg.start_spread;
            loop::ClosedLoopConfig run = lc;
            run.synth.modulation.theta0 = lock_angle + off;
            run.synth.seed = rng::child_seed(cfg.seed, 6000 + i);
            run.record_photocurrent = false;
            const auto rtr = loop::run_closed_loop(run);
            res[i].start_offset = off;
            res[i].report = loop::assess_lock(rtr, run.synth.modulation, lock_angle, wrap,
                                              engage_time, cfg.lock_threshold, cfg.min_hold_fraction);
        });
        std::vector<double> offs(ns), acq(ns), times(ns), holds(ns);
        std::size_t good = 0;
        for (std::size_t i = 0; i < ns; ++i) {
            const bool ok =
                res[i].report.acquired && res[i].report.acquisition_time <= cfg.acquire_within;
            offs[i] = res[i].start_offset;
            acq[i] = ok ? 1.0 : 0.0;
            times[i] = res[i].report.acquisition_time;
            holds[i] = res[i].report.hold_fraction;
            good += ok;
        }
        io::Table starts;
        ctx.stamp(starts);
        starts.add_column("start_offset_rad", offs);
        starts.add_column("acquired", acq);
        starts.add_column("acquisition_time_s", times);
        starts.add_column("hold_fraction", holds);
        ctx.csv("starts.csv", starts);
        const double frac = static_cast<double>(good) / static_cast<double>(ns);
        ctx.result("acquired_fraction", frac);
        ctx.check("acquired_fraction", frac, ">=", cfg.min_acquire_fraction);
    }
}

// ---------------------------------------------------------------------------
// Stability ensembles: shared machinery for the three stability experiments.
// ---------------------------------------------------------------------------
namespace detail {

struct EnsembleStats {
    double mean = 0.0;
    double sem = 0.0;
    double locked_fraction = 0.0;
};

// Closed-loop noise ensemble at one lock angle; seeds indexed so that runs
// with the same (angle index, seed index) share noise across plant variants.
inline EnsembleStats locked_noise_ensemble(const Ctx& ctx,
                                           const timeseries::SynthesisConfig& base,
                                           const loop::ReadoutConfig& readout, double angle,
                                           double slope, std::size_t angle_index,
                                           std::vector<double>* samples_out = nullptr) {
    const auto& cfg = ctx.cfg;
    const std::size_t ns = static_cast<std::size_t>(cfg.seeds);
    std::vector<double> dtheta(ns, 0.0);
    std::vector<int> locked(ns, 0);
    parallel_for(ns, cfg.workers, [&](std::size_t s) {
        loop::StabilityRunConfig src;
        src.synth = base;
        src.synth.modulation.theta0 = angle;
        src.synth.duration = cfg.duration_per_point;
        src.synth.seed = rng::child_seed(cfg.seed, angle_index * 1000000 + s);
        src.readout = readout;
        src.lock_angle = angle;
        src.wrap_period = kPi;
        src.slope = slope;
        src.f_unity = cfg.f_unity;
        src.settle_fraction = cfg.settle_fraction;
        src.clamp = cfg.clamp;
        src.lock_threshold = cfg.lock_threshold;
        src.min_hold_fraction = cfg.min_hold_fraction;
        src.record_decimate = 5;
        const auto m = loop::measure_locked_noise(src);
        dtheta[s] = m.delta_theta;
        locked[s] = m.locked ? 1 : 0;
    });
    EnsembleStats st;
    st.mean = mean_of(dtheta);
    double var = 0.0;
    for (double d : dtheta) var += (d - st.mean) * (d - st.mean);
    if (ns > 1) var /= static_cast<double>(ns - 1);
    st.sem = ns > 1 ? std::sqrt(var / static_cast<double>(ns)) : 0.0;
    for (int l : locked) st.locked_fraction += l;
    st.locked_fraction /= static_cast<double>(ns);
    if (samples_out) *samples_out = dtheta;
    return st;
}

}  // namespace detail

inline void run_stability_vs_R(Ctx& ctx) {
    const auto& cfg = ctx.cfg;
    const double chain_n = ctx.averaging_product(cfg.readout.chain);
    const double n_avg = cfg.bandwidth_product > 0.0 ? cfg.bandwidth_product : chain_n;
    ctx.result("averaging_product", n_avg);

    // Analytic curves over the squeeze-factor grid, one pair per loss.
    std::vector<double> rgrid;
    for (double r = cfg.r_grid_min; r <= cfg.r_grid_max + 1e-12; r += cfg.r_grid_step) {
        rgrid.push_back(r);
    }
    io::Table curves;
    ctx.stamp(curves);
    curves.add_column("squeeze_factor", rgrid);
    double min_margin = std::numeric_limits<double>::infinity();
    std::vector<svg::Series> series;
    for (double L : cfg.loss_list) {
        std::vector<double> sq(rgrid.size()), anti(rgrid.size());
        for (std::size_t i = 0; i < rgrid.size(); ++i) {
            const auto [s, a] = analytic::stability_homodyne_scaled(rgrid[i], L, n_avg);
            sq[i] = s;
            anti[i] = a;
            min_margin = std::min(min_margin, a - s);
        }
        const std::string tag = svg::detail::fmt(L, "%g");
        curves.add_column("dtheta_sq_loss" + tag, sq);
        curves.add_column("dtheta_anti_loss" + tag, anti);
        series.push_back({"squeezed, loss " + tag, rgrid, sq});
        series.push_back({"anti-squeezed, loss " + tag, rgrid, anti});
    }
    ctx.csv("analytic_stability.csv", curves);
    ctx.check("analytic_sq_below_anti_min_margin", min_margin, ">", 0.0);

    // Monte-Carlo points at the requested squeeze factors.
    if (cfg.seeds > 0) {
        std::vector<double> col_r, col_loss, col_angle, col_slope, col_mean, col_sem, col_lock,
            col_ana;
        std::size_t cfg_index = 0;
        for (double R : cfg.r_list) {
            for (double L : cfg.loss_list) {
                timeseries::SynthesisConfig base = cfg.synth;
                base.state.squeeze_factor = R;
                base.state.loss_lambda = L;
                timeseries::SynthesisConfig psynth = base;
                psynth.duration = cfg.probe_duration;
                psynth.disturbance = plant::DisturbanceSpec{};
                psynth.seed = rng::child_seed(cfg.seed, 900000 + cfg_index * 10);
                const double slope_sq = loop::measure_error_slope(
                    psynth, cfg.readout, kPi / 2.0, cfg.slope_delta, cfg.settle_fraction);
                psynth.seed = rng::child_seed(cfg.seed, 900000 + cfg_index * 10 + 1);
                const double slope_anti = loop::measure_error_slope(
                    psynth, cfg.readout, 0.0, cfg.slope_delta, cfg.settle_fraction);
                const auto st_sq = detail::locked_noise_ensemble(ctx, base, cfg.readout,
                                                                 kPi / 2.0, slope_sq, 0);
                const auto st_anti = detail::locked_noise_ensemble(ctx, base, cfg.readout, 0.0,
                                                                   slope_anti, 1);
                const auto [ana_sq, ana_anti] = analytic::stability_homodyne_scaled(R, L, n_avg);

                col_r.insert(col_r.end(), {R, R});
                col_loss.insert(col_loss.end(), {L, L});
                col_angle.insert(col_angle.end(), {kPi / 2.0, 0.0});
                col_slope.insert(col_slope.end(), {slope_sq, slope_anti});
                col_mean.insert(col_mean.end(), {st_sq.mean, st_anti.mean});
                col_sem.insert(col_sem.end(), {st_sq.sem, st_anti.sem});
                col_lock.insert(col_lock.end(), {st_sq.locked_fraction, st_anti.locked_fraction});
                col_ana.insert(col_ana.end(), {ana_sq, ana_anti});

                const std::string tag =
                    "R" + std::string(svg::detail::fmt(R, "%g")) + "_loss" +
                    std::string(svg::detail::fmt(L, "%g"));
                const double ratio = st_sq.mean / st_anti.mean;
                const double expected = ana_sq / ana_anti;
                ctx.result("mc_ratio_" + tag, ratio);
                ctx.result("expected_ratio_" + tag, expected);
                ctx.check("ratio_error_" + tag, std::abs(ratio / expected - 1.0), "<=",
                          cfg.ratio_tol);
                ctx.check("locked_fraction_" + tag,
                          std::min(st_sq.locked_fraction, st_anti.locked_fraction), ">=",
                          cfg.min_locked_fraction);
                ++cfg_index;
            }
        }
        io::Table mc;
        ctx.stamp(mc);
        mc.add_column("squeeze_factor", col_r);
        mc.add_column("loss_lambda", col_loss);
        mc.add_column("lock_angle_rad", col_angle);
        mc.add_column("slope", col_slope);
        mc.add_column("dtheta_mean_rad", col_mean);
        mc.add_column("dtheta_sem_rad", col_sem);
        mc.add_column("locked_fraction", col_lock);
        mc.add_column("dtheta_analytic_rad", col_ana);
        ctx.csv("mc_points.csv", mc);
        series.push_back({"measured (squeezed lock)", col_r, col_mean});
    }
    svg::write_plot(ctx.dir / "stability.svg", series,
                    {cfg.name + ": lock-point phase stability", "squeeze factor",
                     "delta theta (rad)"});
}

inline void run_stability_vs_bandwidth(Ctx& ctx) {
    const auto& cfg = ctx.cfg;
    const std::size_t nb = cfg.f_low_list.size();
    std::vector<double> f_lo(nb), f_hi(nb), enbw(nb), slope(nb), dmean(nb), dsem(nb), dlock(nb),
        dana(nb);
    for (std::size_t i = 0; i < nb; ++i) {
        f_lo[i] = cfg.f_low_list[i];
        f_hi[i] = cfg.band_ratio * f_lo[i];
        loop::ReadoutConfig ro = cfg.readout;
        ro.chain.bandpass.f_low = f_lo[i];
        ro.chain.bandpass.f_high = f_hi[i];
        enbw[i] = dsp::BandpassFilter(ro.chain.bandpass, cfg.synth.sample_rate)
                      .equivalent_noise_bandwidth();
        timeseries::SynthesisConfig psynth = cfg.synth;
        psynth.duration = cfg.probe_duration;
        psynth.disturbance = plant::DisturbanceSpec{};
        psynth.seed = rng::child_seed(cfg.seed, 300000 + i * 10);
        slope[i] = loop::measure_error_slope(psynth, ro, kPi / 2.0, cfg.slope_delta,
                                             cfg.settle_fraction);
        const auto st =
            detail::locked_noise_ensemble(ctx, cfg.synth, ro, kPi / 2.0, slope[i], 10 + i);
        dmean[i] = st.mean;
        dsem[i] = st.sem;
        dlock[i] = st.locked_fraction;
        const double n_avg =
            enbw[i] /
            dsp::LockIn(ro.chain.lockin, cfg.synth.modulation.mod_freq_hz(), 0.0,
                        cfg.synth.sample_rate)
                .noise_equivalent_bandwidth();
        dana[i] = analytic::stability_homodyne_scaled(cfg.synth.state.squeeze_factor,
                                                      cfg.synth.state.loss_lambda, n_avg)
                      .first;
    }

    // Log-log regression of the measured stability against the measured
    // noise bandwidth of each analysis band.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < nb; ++i) {
        const double x = std::log(enbw[i]);
        const double y = std::log(dmean[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double nem = static_cast<double>(nb);
    const double fitted_slope = (nem * sxy - sx * sy) / (nem * sxx - sx * sx);

    io::Table t;
    ctx.stamp(t);
    t.add_column("f_low_hz", f_lo);
    t.add_column("f_high_hz", f_hi);
    t.add_column("enbw_hz", enbw);
    t.add_column("slope", slope);
    t.add_column("dtheta_mean_rad", dmean);
    t.add_column("dtheta_sem_rad", dsem);
    t.add_column("locked_fraction", dlock);
    t.add_column("dtheta_analytic_rad", dana);
    ctx.csv("bandwidth.csv", t);

    svg::write_plot(ctx.dir / "bandwidth.svg",
                    {{"measured", enbw, dmean}, {"analytic", enbw, dana}},
                    {cfg.name + ": stability vs analysis bandwidth", "noise bandwidth (Hz)",
                     "delta theta (rad)", true, true});

    double min_lock = 1.0;
    for (double l : dlock) min_lock = std::min(min_lock, l);
    ctx.result("loglog_slope", fitted_slope);
    ctx.check("loglog_slope_error", std::abs(fitted_slope - cfg.slope_expected), "<=",
              cfg.slope_tol);
    ctx.check("locked_fraction_min", min_lock, ">=", cfg.min_locked_fraction);
}

inline void run_stability_vs_loss(Ctx& ctx) {
    const auto& cfg = ctx.cfg;
    std::vector<double> losses = cfg.loss_list;
    std::sort(losses.begin(), losses.end());
    const double n_avg = cfg.bandwidth_product > 0.0 ? cfg.bandwidth_product
                                                     : ctx.averaging_product(cfg.readout.chain);
    const std::size_t nl = losses.size();
    std::vector<double> col_loss, col_angle, col_slope, col_mean, col_sem, col_lock, col_ana;
    std::vector<double> mc_sq(nl), mc_anti(nl), ana_sq(nl), ana_anti(nl);
    double min_lock = 1.0;
    for (std::size_t i = 0; i < nl; ++i) {
        timeseries::SynthesisConfig base = cfg.synth;
        base.state.loss_lambda = losses[i];
        timeseries::SynthesisConfig psynth = base;
        psynth.duration = cfg.probe_duration;
        psynth.disturbance = plant::DisturbanceSpec{};
        psynth.seed = rng::child_seed(cfg.seed, 400000 + i * 10);
        const double slope_sq = loop::measure_error_slope(psynth, cfg.readout, kPi / 2.0,
                                                          cfg.slope_delta, cfg.settle_fraction);
        psynth.seed = rng::child_seed(cfg.seed, 400000 + i * 10 + 1);
        const double slope_anti = loop::measure_error_slope(psynth, cfg.readout, 0.0,
                                                            cfg.slope_delta, cfg.settle_fraction);
        // Angle indices are loss-independent, so every loss level sees the
        // same photocurrent seeds: the ordering comparison is paired.
        const auto st_sq =
            detail::locked_noise_ensemble(ctx, base, cfg.readout, kPi / 2.0, slope_sq, 0);
        const auto st_anti =
            detail::locked_noise_ensemble(ctx, base, cfg.readout, 0.0, slope_anti, 1);
        const auto [a_sq, a_anti] = analytic::stability_homodyne_scaled(
            base.state.squeeze_factor, losses[i], n_avg);
        mc_sq[i] = st_sq.mean;
        mc_anti[i] = st_anti.mean;
        ana_sq[i] = a_sq;
        ana_anti[i] = a_anti;
        min_lock = std::min({min_lock, st_sq.locked_fraction, st_anti.locked_fraction});
        col_loss.insert(col_loss.end(), {losses[i], losses[i]});
        col_angle.insert(col_angle.end(), {kPi / 2.0, 0.0});
        col_slope.insert(col_slope.end(), {slope_sq, slope_anti});
        col_mean.insert(col_mean.end(), {st_sq.mean, st_anti.mean});
        col_sem.insert(col_sem.end(), {st_sq.sem, st_anti.sem});
        col_lock.insert(col_lock.end(), {st_sq.locked_fraction, st_anti.locked_fraction});
        col_ana.insert(col_ana.end(), {a_sq, a_anti});
    }
    io::Table t;
    ctx.stamp(t);
    t.add_column("loss_lambda", col_loss);
    t.add_column("lock_angle_rad", col_angle);
    t.add_column("slope", col_slope);
    t.add_column("dtheta_mean_rad", col_mean);
    t.add_column("dtheta_sem_rad", col_sem);
    t.add_column("locked_fraction", col_lock);
    t.add_column("dtheta_analytic_rad", col_ana);
    ctx.csv("loss.csv", t);

    svg::write_plot(ctx.dir / "loss.svg",
                    {{"squeezed lock (measured)", losses, mc_sq},
                     {"anti-squeezed lock (measured)", losses, mc_anti},
                     {"squeezed lock (analytic)", losses, ana_sq},
                     {"anti-squeezed lock (analytic)", losses, ana_anti}},
                    {cfg.name + ": stability vs loss", "loss", "delta theta (rad)"});

    const auto min_step = [](const std::vector<double>& v) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < v.size(); ++i) m = std::min(m, v[i + 1] - v[i]);
        return m;
    };
    ctx.check("analytic_increase_sq_min", min_step(ana_sq), ">", 0.0);
    ctx.check("analytic_increase_anti_min", min_step(ana_anti), ">", 0.0);
    ctx.check("mc_increase_sq_min", min_step(mc_sq), ">", 0.0);
    ctx.check("mc_increase_anti_min", min_step(mc_anti), ">", 0.0);
    ctx.check("locked_fraction_min", min_lock, ">=", cfg.min_locked_fraction);
}

// ---------------------------------------------------------------------------
// spectrum_inloop: error-signal spectra locked to each quadrature plus the
// open-loop reference, with loop-gain suppression below the unity-gain
// frequency.
// ---------------------------------------------------------------------------
inline void run_spectrum_inloop(Ctx& ctx) {
    const auto& cfg = ctx.cfg;
    const double fs = cfg.synth.sample_rate;
    const double fs_dec = fs / static_cast<double>(cfg.psd_decimate);

    const double slope_sq = ctx.probe_slope(cfg.readout, kPi / 2.0, 8101);
    const double slope_anti = ctx.probe_slope(cfg.readout, 0.0, 8102);

    struct Record {
        std::vector<double> error;
        std::vector<double> photocurrent;
        double hold = 1.0;
    };
    Record rec_open, rec_sq, rec_anti;

    const auto closed_record = [&](double angle, double slope, std::uint64_t child,
                                   Record& out) {
        loop::ClosedLoopConfig lc;
        lc.synth = cfg.synth;
        lc.synth.modulation.theta0 = angle;
        lc.synth.seed = rng::child_seed(cfg.seed, child);
        lc.readout = cfg.readout;
        lc.servo.ki = kTwoPi * cfg.f_unity / std::abs(slope);
        lc.servo.sign = detail::sgn(slope);
        lc.servo.clamp = cfg.clamp;
        lc.record_decimate = cfg.psd_decimate;
        lc.record_photocurrent = false;
        lc.record_internals = false;
        const auto tr = loop::run_closed_loop(lc);
        out.error = tr.channel("error");
        out.hold = loop::assess_lock(tr, lc.synth.modulation, angle, kPi, 0.0,
                                     cfg.lock_threshold, cfg.min_hold_fraction)
                       .hold_fraction;
    };

    const auto open_record = [&](double angle, std::uint64_t child, Record& out) {
        timeseries::SynthesisConfig synth = cfg.synth;
        synth.modulation.theta0 = angle;
        synth.seed = rng::child_seed(cfg.seed, child);
        const timeseries::PhotocurrentModel model(synth);
        plant::DisturbanceGen dist(synth.disturbance, synth.sample_rate, synth.seed);
        loop::ErrorReadout chain(cfg.readout, synth.modulation.mod_freq_hz(),
                                 synth.sample_rate);
        const std::size_t n = synth.sample_count();
        for (std::size_t k = 0; k < n; ++k) {
            const double theta =
                synth.modulation.theta0 +
                synth.modulation.theta1 *
                    std::sin(synth.modulation.omega_mod * static_cast<double>(k) / fs) +
                dist.value(k);
            const double i = model.sample(theta, k);
            const double e = chain.process(i).error;
            if (k % cfg.psd_decimate == 0) {
                out.error.push_back(e);
                out.photocurrent.push_back(i);
            }
        }
    };

    // Three records; the open run shares the squeezed-lock seed so the
    // suppression ratio compares like against like.
    const std::vector<std::function<void()>> jobs = {
        [&] { closed_record(kPi / 2.0, slope_sq, 1, rec_sq); },
        [&] { closed_record(0.0, slope_anti, 2, rec_anti); },
        [&] { open_record(kPi / 2.0, 1, rec_open); },
    };
    parallel_for(jobs.size(), cfg.workers, [&](std::size_t i) { jobs[i](); });

    const auto tail_psd = [&](const std::vector<double>& x) {
        const std::size_t k0 =
            static_cast<std::size_t>(cfg.settle_fraction * static_cast<double>(x.size()));
        std::vector<double> tail(x.begin() + static_cast<std::ptrdiff_t>(k0), x.end());
        require(tail.size() >= cfg.welch_segment,
                "spectrum_inloop: record too short for welch_segment after settling");
        return spectral::welch_psd(tail, fs_dec, cfg.welch_segment);
    };
    const auto psd_open = tail_psd(rec_open.error);
    const auto psd_sq = tail_psd(rec_sq.error);
    const auto psd_anti = tail_psd(rec_anti.error);
    const auto psd_current = tail_psd(rec_open.photocurrent);

    const auto to_db = [](const std::vector<double>& p) {
        std::vector<double> out(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) {
            out[i] = db_from_power_ratio(std::max(p[i], 1e-30));
        }
        return out;
    };
    const auto save_psd = [&](const std::string& file, const spectral::PsdResult& p,
                              const char* value_name) {
        io::Table t;
        ctx.stamp(t);
        t.add_column("frequency_hz", p.freq);
        t.add_column(value_name, to_db(p.psd));
        ctx.csv(file, t);
    };
    save_psd("psd_open.csv", psd_open, "psd_db");
    save_psd("psd_locked_squeezed.csv", psd_sq, "psd_db");
    save_psd("psd_locked_anti.csv", psd_anti, "psd_db");
    // Snapshot decimation folds the full photocurrent band into the analysis
    // band; dividing by the fold count restores the density so vacuum noise
    // reads 0 dB and the column is genuinely shot-noise-relative.
    spectral::PsdResult psd_current_snl = psd_current;
    for (auto& v : psd_current_snl.psd) v /= static_cast<double>(cfg.psd_decimate);
    save_psd("psd_photocurrent.csv", psd_current_snl, "psd_db_snl");

    svg::write_plot(ctx.dir / "spectra.svg",
                    {{"open loop", psd_open.freq, to_db(psd_open.psd)},
                     {"locked, squeezed", psd_sq.freq, to_db(psd_sq.psd)},
                     {"locked, anti-squeezed", psd_anti.freq, to_db(psd_anti.psd)}},
                    {cfg.name + ": in-loop error spectra", "frequency (Hz)", "PSD (dB)", true,
                     false});

    // Per-bin comparison below the loop bandwidth, and mean suppression of
    // the locked spectrum below half the unity-gain frequency.
    double min_excess = std::numeric_limits<double>::infinity();
    double supp_sum = 0.0;
    std::size_t supp_n = 0;
    for (std::size_t i = 0; i < psd_sq.freq.size(); ++i) {
        const double f = psd_sq.freq[i];
        if (f <= 0.0) continue;
        if (f <= cfg.f_unity) {
            min_excess = std::min(
                min_excess, db_from_power_ratio(psd_anti.psd[i] / std::max(psd_sq.psd[i], 1e-30)));
        }
        if (f <= cfg.f_unity / 2.0) {
            supp_sum += db_from_power_ratio(psd_open.psd[i] / std::max(psd_sq.psd[i], 1e-30));
            ++supp_n;
        }
    }
    const double suppression = supp_n ? supp_sum / static_cast<double>(supp_n) : 0.0;
    ctx.result("slope_squeezed", slope_sq);
    ctx.result("slope_anti", slope_anti);
    ctx.result("hold_fraction_squeezed", rec_sq.hold);
    ctx.result("hold_fraction_anti", rec_anti.hold);
    ctx.result("anti_minus_sq_min_db", min_excess);
    ctx.result("suppression_db", suppression);
    ctx.check("anti_exceeds_sq_min_db", min_excess, ">", 0.0);
    ctx.check("suppression_db", suppression, ">=", cfg.min_suppression_db);
    ctx.check("hold_fraction_min", std::min(rec_sq.hold, rec_anti.hold), ">=",
              cfg.min_hold_fraction);
}

// ---------------------------------------------------------------------------
// coherent_vs_cml: the noise readout and the direct demodulation side by
// side on the same synthesized fringe, plus their phase-noise floors.
// ---------------------------------------------------------------------------
namespace detail {

struct TwoPoint {
    loop::ErrorPoint a;
    loop::ErrorPoint b;
};

// One synthesized record feeding both readouts so the comparison is matched.
inline TwoPoint measure_two_points(const timeseries::SynthesisConfig& synth,
                                   const loop::ReadoutConfig& ro_a,
                                   const loop::ReadoutConfig& ro_b, double settle_fraction) {
    synth.validate();
    const timeseries::PhotocurrentModel model(synth);
    plant::DisturbanceGen dist(synth.disturbance, synth.sample_rate, synth.seed);
    loop::ErrorReadout chain_a(ro_a, synth.modulation.mod_freq_hz(), synth.sample_rate);
    loop::ErrorReadout chain_b(ro_b, synth.modulation.mod_freq_hz(), synth.sample_rate);
    const std::size_t n = synth.sample_count();
    const std::size_t k0 =
        static_cast<std::size_t>(settle_fraction * static_cast<double>(n));
    double sa = 0, sa2 = 0, sb = 0, sb2 = 0;
    std::size_t count = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double theta = synth.modulation.theta0 +
                             synth.modulation.theta1 *
                                 std::sin(synth.modulation.omega_mod * static_cast<double>(k) /
                                          synth.sample_rate) +
                             dist.value(k);
        const double i = model.sample(theta, k);
        const double ea = chain_a.process(i).error;
        const double eb = chain_b.process(i).error;
        if (k >= k0) {
            sa += ea;
            sa2 += ea * ea;
            sb += eb;
            sb2 += eb * eb;
            ++count;
        }
    }
    TwoPoint tp;
    const double cnt = static_cast<double>(count);
    tp.a.mean = sa / cnt;
    tp.a.rms = std::sqrt(std::max(0.0, sa2 / cnt - tp.a.mean * tp.a.mean));
    tp.b.mean = sb / cnt;
    tp.b.rms = std::sqrt(std::max(0.0, sb2 / cnt - tp.b.mean * tp.b.mean));
    return tp;
}

}  // namespace detail

inline void run_coherent_vs_cml(Ctx& ctx) {
    const auto& cfg = ctx.cfg;
    const loop::ReadoutConfig ro_nl = cfg.readout;
    const loop::ReadoutConfig ro_dd = ctx.direct_readout();

    const std::size_t n = static_cast<std::size_t>(cfg.points);
    std::vector<double> theta(n), nl_mean(n), nl_rms(n), dd_mean(n), dd_rms(n);
    for (std::size_t i = 0; i < n; ++i) {
        theta[i] = cfg.sweep_start +
                   cfg.sweep_span * static_cast<double>(i) / static_cast<double>(n);
    }
    parallel_for(n, cfg.workers, [&](std::size_t i) {
        timeseries::SynthesisConfig synth = cfg.synth;
        synth.modulation.theta0 = theta[i];
        synth.duration = cfg.duration_per_point;
        synth.seed = rng::child_seed(cfg.seed, i);
        const auto tp = detail::measure_two_points(synth, ro_nl, ro_dd, cfg.settle_fraction);
        nl_mean[i] = tp.a.mean;
        nl_rms[i] = tp.a.rms;
        dd_mean[i] = tp.b.mean;
        dd_rms[i] = tp.b.rms;
    });

    io::Table t;
    ctx.stamp(t);
    t.add_column("theta_rad", theta);
    t.add_column("noise_readout_mean", nl_mean);
    t.add_column("noise_readout_rms", nl_rms);
    t.add_column("direct_demod_mean", dd_mean);
    t.add_column("direct_demod_rms", dd_rms);
    ctx.csv("curves.csv", t);

    // Floors at the configured lock angle.
    const double angle = cfg.synth.modulation.theta0;
    const double slope_nl = ctx.probe_slope(ro_nl, angle, 7001);
    const double slope_dd = ctx.probe_slope(ro_dd, angle, 7002);
    timeseries::SynthesisConfig fsynth = cfg.synth;
    fsynth.duration = cfg.duration_per_point;
    fsynth.seed = rng::child_seed(cfg.seed, 7003);
    const auto floors = detail::measure_two_points(fsynth, ro_nl, ro_dd, cfg.settle_fraction);
    const double dtheta_nl =
        loop::equivalent_phase_noise(cfg.synth.modulation.theta1, floors.a.rms, slope_nl);
    // The direct demodulation is linear in phase, so its floor is plain
    // noise over slope.
    const double dtheta_dd = floors.b.rms / std::abs(slope_dd);
    const double separation_db = 20.0 * std::log10(dtheta_nl / dtheta_dd);

    // Normalized overlay: both discriminants scaled to unit peak.
    double nl_peak = 0.0, dd_peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        nl_peak = std::max(nl_peak, std::abs(nl_mean[i]));
        dd_peak = std::max(dd_peak, std::abs(dd_mean[i]));
    }
    std::vector<double> nl_norm(n), dd_norm(n);
    for (std::size_t i = 0; i < n; ++i) {
        nl_norm[i] = nl_mean[i] / nl_peak;
        dd_norm[i] = dd_mean[i] / dd_peak;
    }
    svg::write_plot(ctx.dir / "curves.svg",
                    {{"noise readout (normalized)", theta, nl_norm},
                     {"direct demodulation (normalized)", theta, dd_norm}},
                    {cfg.name + ": error discriminants", "theta (rad)", "normalized error"});

    ctx.result("slope_noise_readout", slope_nl);
    ctx.result("slope_direct_demod", slope_dd);
    ctx.result("dtheta_noise_readout_rad", dtheta_nl);
    ctx.result("dtheta_direct_demod_rad", dtheta_dd);
    ctx.result("separation_db", separation_db);
    ctx.check("noise_readout_above_direct_db", separation_db, ">=", cfg.min_separation_db);
}

// ---------------------------------------------------------------------------
// Dispatch and summary emission.
// ---------------------------------------------------------------------------
inline Outcome run_experiment(const config::Resolved& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    Ctx ctx(cfg, out_dir);

    {
        std::ofstream conf(out_dir / "config.txt");
        require(conf.good(), "run_experiment: cannot write config.txt");
        conf << cfg.canonical;
    }

    switch (cfg.kind) {
        case config::ExperimentKind::sweep_theta: run_sweep_theta(ctx); break;
        case config::ExperimentKind::lock_acquire: run_lock_acquire(ctx); break;
        case config::ExperimentKind::stability_vs_R: run_stability_vs_R(ctx); break;
        case config::ExperimentKind::stability_vs_bandwidth: run_stability_vs_bandwidth(ctx); break;
        case config::ExperimentKind::stability_vs_loss: run_stability_vs_loss(ctx); break;
        case config::ExperimentKind::spectrum_inloop: run_spectrum_inloop(ctx); break;
        case config::ExperimentKind::coherent_vs_cml: run_coherent_vs_cml(ctx); break;
    }

    ordered_json verdicts = ordered_json::array();
    for (const auto& v : ctx.out.verdicts) {
        verdicts.push_back({{"name", v.name},
                            {"value", v.value},
                            {"comparison", v.cmp},
                            {"limit", v.limit},
                            {"pass", v.pass}});
    }
    ctx.out.summary["verdicts"] = verdicts;
    ctx.out.summary["pass"] = ctx.out.pass;

    {
        std::ofstream js(out_dir / "summary.json");
        require(js.good(), "run_experiment: cannot write summary.json");
        js << ctx.out.summary.dump(2) << "\n";
    }
    {
        std::ofstream txt(out_dir / "summary.txt");
        require(txt.good(), "run_experiment: cannot write summary.txt");
        txt << "name = " << cfg.name << "\n";
        txt << "experiment = " << config::experiment_kind_name(cfg.kind) << "\n";
        txt << "version = " << kVersion << "\n";
        txt << "seed = " << cfg.seed << "\n";
        txt << "scale = " << io::format_double(cfg.scale) << "\n";
        txt << "config_hash = " << detail::hash_hex(cfg.hash) << "\n";
        for (const auto& [key, value] : ctx.out.summary["results"].items()) {
            txt << key << " = "
                << (value.is_number_float() ? io::format_double(value.get<double>())
                                            : value.dump())
                << "\n";
        }
        for (const auto& v : ctx.out.verdicts) {
            txt << "verdict " << v.name << ": " << io::format_double(v.value) << " " << v.cmp
                << " " << io::format_double(v.limit) << " : " << (v.pass ? "PASS" : "FAIL")
                << "\n";
        }
        txt << "overall = " << (ctx.out.pass ? "PASS" : "FAIL") << "\n";
    }
    return std::move(ctx.out);
}

}  // namespace noiselock::experiments
