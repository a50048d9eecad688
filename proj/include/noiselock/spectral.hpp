#pragma once

// Offline spectral tools: a small radix-2 FFT, Welch power spectral density
// estimation, and an ideal (non-causal) brick-wall band-pass used when the
// soft corners of the streaming filter would get in the way of theory
// comparisons.

#include <complex>
#include <cstddef>
#include <vector>

#include "noiselock/common.hpp"

namespace noiselock::spectral {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// In-place iterative radix-2 Cooley-Tukey. The inverse applies the 1/n
// normalization so fft(ifft(x)) round-trips.
inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse = false) {
    const std::size_t n = a.size();
    require(is_pow2(n), "fft_radix2: length must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? kTwoPi : -kTwoPi) / static_cast<double>(len);
        const std::complex<double> wl = std::polar(1.0, ang);
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w = 1.0;
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        for (auto& x : a) x /= static_cast<double>(n);
    }
}

struct PsdResult {
    std::vector<double> freq;  // Hz, DC .. fs/2
    std::vector<double> psd;   // one-sided density, variance per Hz
};

// Welch estimate with a periodic Hann window and per-segment mean removal.
// Calibrated as a density: unit-variance white noise at rate fs reads 2/fs,
// and the integral over frequency recovers the series variance.
inline PsdResult welch_psd(const std::vector<double>& x, double fs, std::size_t nperseg,
                           double overlap = 0.5) {
    require(fs > 0.0, "welch_psd: fs must be positive");
    require(is_pow2(nperseg) && nperseg >= 8, "welch_psd: nperseg must be a power of two >= 8");
    require(nperseg <= x.size(), "welch_psd: nperseg exceeds the series length");
    require(overlap >= 0.0 && overlap < 1.0, "welch_psd: overlap must be in [0, 1)");

    const std::size_t step =
        std::max<std::size_t>(1, static_cast<std::size_t>(nperseg * (1.0 - overlap)));
    std::vector<double> w(nperseg);
    double u = 0.0;  // window power sum(w^2)
    for (std::size_t i = 0; i < nperseg; ++i) {
        w[i] = 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(i) / nperseg));
        u += w[i] * w[i];
    }

    const std::size_t nbins = nperseg / 2 + 1;
    std::vector<double> acc(nbins, 0.0);
    std::vector<std::complex<double>> seg(nperseg);
    std::size_t nseg = 0;
    for (std::size_t start = 0; start + nperseg <= x.size(); start += step, ++nseg) {
        double mean = 0.0;
        for (std::size_t i = 0; i < nperseg; ++i) mean += x[start + i];
        mean /= static_cast<double>(nperseg);
        for (std::size_t i = 0; i < nperseg; ++i) seg[i] = (x[start + i] - mean) * w[i];
        fft_radix2(seg);
        for (std::size_t k = 0; k < nbins; ++k) acc[k] += std::norm(seg[k]);
    }

    PsdResult r;
    r.freq.resize(nbins);
    r.psd.resize(nbins);
    const double scale = 1.0 / (static_cast<double>(nseg) * fs * u);
    for (std::size_t k = 0; k < nbins; ++k) {
        r.freq[k] = fs * static_cast<double>(k) / static_cast<double>(nperseg);
        const double onesided = (k == 0 || k == nbins - 1) ? 1.0 : 2.0;
        r.psd[k] = acc[k] * scale * onesided;
    }
    return r;
}

// Ideal band-pass: zero every Fourier component outside [f_low, f_high].
// Non-causal and offline by construction; the input is zero-padded to a
// power of two, so treat the first/last filter-length of samples as edges.
inline std::vector<double> bandpass_brickwall(const std::vector<double>& x, double f_low,
                                              double f_high, double fs) {
    require(0.0 <= f_low && f_low < f_high && f_high <= fs / 2.0,
            "bandpass_brickwall: need 0 <= f_low < f_high <= fs/2");
    if (x.empty()) return {};
    const std::size_t n = next_pow2(x.size());
    std::vector<std::complex<double>> a(n, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = x[i];
    fft_radix2(a);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t kk = std::min(k, n - k);  // fold to [0, n/2]
        const double f = fs * static_cast<double>(kk) / static_cast<double>(n);
        if (f < f_low || f > f_high) a[k] = 0.0;
    }
    fft_radix2(a, true);
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = a[i].real();
    return y;
}

}  // namespace noiselock::spectral
