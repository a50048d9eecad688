#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "noiselock/plant.hpp"
#include "noiselock/spectral.hpp"
#include "noiselock/timeseries.hpp"

using namespace noiselock;
using namespace noiselock::timeseries;

namespace {

SynthesisConfig base_homodyne() {
    SynthesisConfig cfg;
    cfg.mode = DetectionMode::homodyne;
    cfg.state.squeeze_factor = 0.41;
    cfg.state.squeezed = plant::SqueezedQuadrature::amplitude;
    cfg.modulation.theta0 = kPi / 2.0;
    cfg.modulation.theta1 = 0.0;
    cfg.modulation.set_mod_freq_hz(12.5e3);
    cfg.disturbance.kind = plant::DisturbanceKind::none;
    cfg.sample_rate = 1e6;
    cfg.duration = 0.5;
    cfg.seed = 77;
    return cfg;
}

double variance(const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= double(x.size());
    double acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return acc / double(x.size() - 1);
}

double mean(const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m += v;
    return m / double(x.size());
}

double midband_psd_mean(const std::vector<double>& x, double fs) {
    const auto r = spectral::welch_psd(x, fs, 8192);
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 100; k + 100 < r.psd.size(); ++k, ++n) acc += r.psd[k];
    return acc / double(n);
}

}  // namespace

TEST_CASE("homodyne record: vacuum sits exactly at the shot-noise spectral level") {
    auto cfg = base_homodyne();
    cfg.state.squeeze_factor = 0.0;
    const auto tr = synthesize(cfg);
    REQUIRE(tr.size() == 500000);
    const auto& i = tr.channel("photocurrent");

    // variance in PSD units: var * 2 / fs = V = 1
    CHECK(variance(i) * 2.0 / cfg.sample_rate == Catch::Approx(1.0).epsilon(0.005));
    // flat spectrum at the same level
    CHECK(midband_psd_mean(i, cfg.sample_rate) == Catch::Approx(1.0).epsilon(0.01));
    CHECK(std::abs(mean(i)) < 3.0 * std::sqrt(cfg.sample_rate / 2.0 / double(i.size())));
}

TEST_CASE("homodyne record: squeezed and anti-squeezed readouts land on the variances") {
    auto cfg = base_homodyne();  // R = 0.41, reading the squeezed quadrature
    const auto tr = synthesize(cfg);
    const double psd_sq = midband_psd_mean(tr.channel("photocurrent"), cfg.sample_rate);
    CHECK(10.0 * std::log10(psd_sq) == Catch::Approx(-3.5614).margin(0.05));

    cfg.modulation.theta0 = 0.0;  // anti-squeezed quadrature
    cfg.seed = 78;
    const auto tr2 = synthesize(cfg);
    const double psd_anti = midband_psd_mean(tr2.channel("photocurrent"), cfg.sample_rate);
    CHECK(10.0 * std::log10(psd_anti) == Catch::Approx(+3.5614).margin(0.05));
}

TEST_CASE("homodyne record: the phase channel is the deterministic dither trajectory") {
    auto cfg = base_homodyne();
    cfg.modulation.theta1 = 0.045;
    const auto tr = synthesize(cfg);
    const auto& th = tr.channel("true_phase");
    for (std::size_t k = 0; k < 2000; ++k) {
        const double expect =
            kPi / 2.0 + 0.045 * std::sin(cfg.modulation.omega_mod * double(k) / cfg.sample_rate);
        REQUIRE(th[k] == Catch::Approx(expect).margin(1e-15));
    }
}

TEST_CASE("homodyne record: control input shifts the phase sample for sample") {
    auto cfg = base_homodyne();
    cfg.duration = 0.01;
    const std::size_t n = cfg.sample_count();
    std::vector<double> control(n);
    for (std::size_t k = 0; k < n; ++k) control[k] = 0.3 * std::sin(0.001 * double(k));

    const auto plain = synthesize(cfg);
    const auto driven = synthesize(cfg, control);
    const auto& a = plain.channel("true_phase");
    const auto& b = driven.channel("true_phase");
    for (std::size_t k = 0; k < n; ++k) REQUIRE(b[k] - a[k] == Catch::Approx(control[k]).margin(1e-15));

    // vacuum noise has no phase dependence, so the photocurrent is unchanged
    // (up to the last-bit wobble of sin^2 + cos^2 in the variance map)
    auto vac = cfg;
    vac.state.squeeze_factor = 0.0;
    const auto v1 = synthesize(vac);
    const auto v2 = synthesize(vac, control);
    const auto& w1 = v1.channel("photocurrent");
    const auto& w2 = v2.channel("photocurrent");
    for (std::size_t k = 0; k < n; ++k) REQUIRE(w1[k] == Catch::Approx(w2[k]).margin(1e-9));
}

TEST_CASE("records are bit-identical across reruns and differ across seeds") {
    auto cfg = base_homodyne();
    cfg.duration = 0.02;
    const auto a = synthesize(cfg);
    const auto b = synthesize(cfg);
    REQUIRE(a.channel("photocurrent") == b.channel("photocurrent"));
    REQUIRE(a.channel("true_phase") == b.channel("true_phase"));

    cfg.seed = 78;
    const auto c = synthesize(cfg);
    std::size_t differs = 0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        if (c.channel("photocurrent")[k] != a.channel("photocurrent")[k]) ++differs;
    }
    CHECK(differs > c.size() / 2);
}

TEST_CASE("windowed variances scatter like chi-squared around the true level") {
    auto cfg = base_homodyne();
    cfg.state.squeeze_factor = 0.0;
    cfg.duration = 1.0;
    const auto tr = synthesize(cfg);
    const auto vars = variance_over_windows(tr.channel("photocurrent"), 4096);
    REQUIRE(vars.size() == 244);

    const double level = cfg.sample_rate / 2.0;
    CHECK(mean(vars) == Catch::Approx(level).epsilon(0.005));
    const double spread = std::sqrt(variance(vars)) / level;
    CHECK(spread == Catch::Approx(std::sqrt(2.0 / 4096.0)).epsilon(0.25));
}

TEST_CASE("coherent record: fringe mean and shot-noise floor at both lock points") {
    SynthesisConfig cfg;
    cfg.mode = DetectionMode::coherent;
    cfg.pair = {1.0, 1.0 / 3.0};  // visibility 0.6
    cfg.flux_scale = 1e5;
    cfg.modulation.theta0 = kPi / 2.0;  // bright fringe of the detected port
    cfg.modulation.theta1 = 0.0;
    cfg.modulation.set_mod_freq_hz(5e3);
    cfg.sample_rate = 1e6;
    cfg.duration = 0.2;
    cfg.seed = 5;

    REQUIRE(cfg.pair.visibility() == Catch::Approx(0.6).epsilon(1e-12));

    const auto bright = synthesize(cfg);
    const auto& ib = bright.channel("photocurrent");
    CHECK(mean(ib) == Catch::Approx(1.6e5).epsilon(1e-4));
    CHECK(variance(ib) == Catch::Approx(1.6 * cfg.sample_rate / 2.0).epsilon(0.02));

    cfg.modulation.theta0 = -kPi / 2.0;  // dark fringe
    const auto dark = synthesize(cfg);
    const auto& id = dark.channel("photocurrent");
    CHECK(mean(id) == Catch::Approx(0.4e5).epsilon(1e-3));
    CHECK(variance(id) == Catch::Approx(0.4 * cfg.sample_rate / 2.0).epsilon(0.02));

    // the other output port sees the complementary fringe
    cfg.port = plant::Port::c;
    const auto comp = synthesize(cfg);
    CHECK(mean(comp.channel("photocurrent")) == Catch::Approx(1.6e5).epsilon(1e-4));
}

TEST_CASE("synthesis config validation") {
    auto cfg = base_homodyne();
    cfg.duration = -1.0;
    CHECK_THROWS_AS(synthesize(cfg), std::invalid_argument);

    cfg = base_homodyne();
    cfg.modulation.set_mod_freq_hz(200e3);  // more than fs / 10
    CHECK_THROWS_AS(synthesize(cfg), std::invalid_argument);

    cfg = base_homodyne();
    cfg.mode = DetectionMode::coherent;
    cfg.pair.amp_b = 0.0;
    CHECK_THROWS_AS(synthesize(cfg), std::invalid_argument);

    cfg = base_homodyne();
    std::vector<double> control(3, 0.0);  // wrong length
    CHECK_THROWS_AS(synthesize(cfg, control), std::invalid_argument);
}

TEST_CASE("trace CSV round-trips bit for bit") {
    auto cfg = base_homodyne();
    cfg.duration = 0.002;
    auto tr = synthesize(cfg);
    tr.config_hash = 0xDEADBEEFCAFEF00DULL;

    const auto path = std::filesystem::temp_directory_path() / "nl_trace_roundtrip.csv";
    io::write_csv(path, tr.to_table());
    const auto back = SimTrace::from_table(io::read_csv(path));
    std::filesystem::remove(path);

    REQUIRE(back.mode == "homodyne");
    REQUIRE(back.sample_rate == tr.sample_rate);
    REQUIRE(back.seed == tr.seed);
    REQUIRE(back.config_hash == tr.config_hash);
    REQUIRE(back.channels.size() == tr.channels.size());
    for (std::size_t i = 0; i < tr.channels.size(); ++i) {
        REQUIRE(back.channels[i].first == tr.channels[i].first);
        REQUIRE(back.channels[i].second == tr.channels[i].second);
    }
}

TEST_CASE("CSV reader rejects malformed input") {
    const auto dir = std::filesystem::temp_directory_path();

    const auto ragged = dir / "nl_bad_ragged.csv";
    std::ofstream(ragged) << "a,b\n1.0,2.0\n3.0\n";
    CHECK_THROWS_WITH(io::read_csv(ragged), Catch::Matchers::ContainsSubstring("expected 2 fields"));
    std::filesystem::remove(ragged);

    const auto notnum = dir / "nl_bad_number.csv";
    std::ofstream(notnum) << "a\n1.0\nbogus\n";
    CHECK_THROWS_WITH(io::read_csv(notnum), Catch::Matchers::ContainsSubstring("not a number"));
    std::filesystem::remove(notnum);

    const auto empty = dir / "nl_bad_empty.csv";
    std::ofstream(empty) << "";
    CHECK_THROWS_WITH(io::read_csv(empty), Catch::Matchers::ContainsSubstring("empty file"));
    std::filesystem::remove(empty);
}
