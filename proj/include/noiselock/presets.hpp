#pragma once

// Built-in experiment configurations. Each preset is an ordinary config
// document (full-rate values; the scale factor defaults to 1/100). The same
// texts are shipped as files under presets/ for editing and as documentation
// of the format; a unit test keeps the two copies identical.

#include <string>
#include <string_view>
#include <vector>

namespace noiselock::presets {

struct Preset {
    const char* name;
    const char* text;
};

inline const std::vector<Preset>& all() {
    static const std::vector<Preset> presets = {
        {"fig2", R"cfg(# Open-loop error-signal and noise-variance sweep for a strongly
# phase-squeezed state (quadrature variance ratio 10^1.1, about 11 dB).
[experiment]
kind = sweep_theta
seed = 2
points = 24
duration_per_point = 0.05
crossing_tol = 0.02
analytic_crossing_tol = 0.01

[plant]
mode = homodyne
squeeze_factor = 1.2664218011467254
squeezed_quadrature = phase

[modulation]
frequency = 19700

[bandpass]
f_low = 1e6
f_high = 3e7

[envelope]
law = power
)cfg"},
        {"fig3", R"cfg(# Analytic lock-point stability curves vs squeezing factor at three loss
# levels, evaluated at unit averaging product.
[experiment]
kind = stability_vs_R
seed = 3
seeds = 0
r_grid_min = 0.05
r_grid_max = 2
r_grid_step = 0.025
loss_list = 0, 0.1, 0.5
bandwidth_product = 1
)cfg"},
        {"fig4", R"cfg(# Coherent-fringe lock acquisition: the loop engages 40% into the record
# while the phase random-walks, and must pull the dark fringe to its
# extremum.
[experiment]
kind = lock_acquire
seed = 4
acquire_within = 0.005
trace_decimate = 100

[plant]
mode = coherent
amp_a = 1
amp_b = 0.3333333333333333
port = d
flux_scale = 1e5

[modulation]
theta0 = -1.5707963267948966
theta1 = 0.15
frequency = 1e5

[disturbance]
kind = random_walk
diffusion = 20

[sampling]
sample_rate = 1e8
duration = 0.02

[lockin]
time_constant = 2e-5

[servo]
f_unity = 400
engage_fraction = 0.4
lock_threshold = 0.3
min_hold_fraction = 0.85
)cfg"},
        {"fig6", R"cfg(# Noise-readout vs direct-demodulation error signals on the same coherent
# plant: full-period sweeps of both discriminants plus their equivalent
# phase-noise floors at the dark fringe.
[experiment]
kind = coherent_vs_cml
seed = 6
points = 25
duration_per_point = 0.008
min_separation_db = 20

[plant]
mode = coherent
amp_a = 1
amp_b = 0.3333333333333333

[modulation]
theta0 = -1.5707963267948966
frequency = 1e5
)cfg"},
        {"fig8", R"cfg(# In-loop error-signal spectra for a squeezed-vacuum plant locked to the
# squeezed and to the anti-squeezed quadrature, plus the open-loop
# reference spectrum.
[experiment]
kind = spectrum_inloop
seed = 8
welch_segment = 131072
psd_decimate = 16
min_suppression_db = 6

[plant]
mode = homodyne
squeeze_factor = 0.41

[modulation]
theta0 = 1.5707963267948966
frequency = 19700

[sampling]
sample_rate = 1e8
duration = 0.16

[bandpass]
f_low = 1e6
f_high = 3e7

[lockin]
time_constant = 1e-4
slope_db_oct = 12

[servo]
f_unity = 400
lock_threshold = 0.5
)cfg"},
        {"sweep_homodyne", R"cfg(# Full-period error-signal sweep of a moderately squeezed vacuum with the
# power-law envelope, checked against the analytic discriminant shape.
[experiment]
kind = sweep_theta
seed = 11
points = 24
duration_per_point = 0.1

[plant]
mode = homodyne
squeeze_factor = 0.41

[modulation]
frequency = 19700

[bandpass]
f_low = 1e6
f_high = 3e7

[envelope]
law = power
)cfg"},
        {"sweep_coherent", R"cfg(# Full-period sweep of the noise-readout error signal on a visibility-0.6
# coherent fringe.
[experiment]
kind = sweep_theta
seed = 12
points = 24
duration_per_point = 0.03

[plant]
mode = coherent

[modulation]
theta1 = 0.15
frequency = 1e5

[envelope]
law = power

[lockin]
time_constant = 1e-5
)cfg"},
        {"stability_vs_squeezing", R"cfg(# Monte-Carlo lock-point stability at both quadratures with the analytic
# curves: the measured squeezed/anti-squeezed noise ratio is checked
# against its closed form.
[experiment]
kind = stability_vs_R
seed = 5
seeds = 20
r_list = 0.41
r_grid_min = 0.05
r_grid_max = 2
r_grid_step = 0.05
duration_per_point = 0.008
ratio_tol = 0.2
min_locked_fraction = 0.9

[modulation]
frequency = 1.25e6

[lockin]
time_constant = 1e-5

[servo]
f_unity = 1500
probe_duration = 0.004
lock_threshold = 0.75
)cfg"},
        {"stability_vs_bandwidth", R"cfg(# Lock-point stability vs analysis bandwidth over a 16x range of
# self-similar bands; the log-log slope is checked against -1/4.
[experiment]
kind = stability_vs_bandwidth
seed = 66
seeds = 6
f_low_list = 375000, 1500000, 6000000
band_ratio = 4
duration_per_point = 0.008
slope_expected = -0.25
slope_tol = 0.05

[modulation]
frequency = 1e5

[lockin]
time_constant = 1e-5

[servo]
f_unity = 1500
probe_duration = 0.004
lock_threshold = 0.75
)cfg"},
        {"stability_vs_loss", R"cfg(# Lock-point stability vs optical loss at fixed squeezing, matched noise
# seeds across loss levels, against the exact analytic ordering.
[experiment]
kind = stability_vs_loss
seed = 7
seeds = 6
loss_list = 0, 0.1, 0.5
duration_per_point = 0.008
min_locked_fraction = 0.8

[plant]
squeeze_factor = 0.41

[modulation]
frequency = 1.25e6

[lockin]
time_constant = 1e-5

[servo]
f_unity = 800
probe_duration = 0.004
lock_threshold = 0.75
min_hold_fraction = 0.85
)cfg"},
        {"rbw_zero_span", R"cfg(# Zero-span analyzer readout: a narrow resolution window centered in the
# noise band with video-bandwidth smoothing standing in for the envelope
# detector.
[experiment]
kind = sweep_theta
seed = 9
points = 12
sweep_start = -0.39269908169872414
sweep_span = 3.141592653589793
duration_per_point = 0.1
fit_residual_tol = 0.15
crossing_tol = 0.05

[plant]
mode = homodyne
squeeze_factor = 0.41

[modulation]
frequency = 19700

[bandpass]
f_low = 9.85e6
f_high = 1.015e7

[envelope]
cutoff = 3e4
law = power

[lockin]
time_constant = 2e-4
)cfg"},
    };
    return presets;
}

inline const char* find(std::string_view name) {
    for (const auto& p : all()) {
        if (name == p.name) return p.text;
    }
    return nullptr;
}

inline std::vector<std::string> names() {
    std::vector<std::string> out;
    for (const auto& p : all()) out.emplace_back(p.name);
    return out;
}

}  // namespace noiselock::presets
