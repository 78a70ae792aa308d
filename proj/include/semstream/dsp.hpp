#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "semstream/errors.hpp"
#include "semstream/sound.hpp"

namespace semstream {

namespace detail {

// In-place iterative radix-2 FFT. Size must be a power of two.
inline void fft(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                auto u = a[i + k];
                auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

inline bool is_pow2(std::size_t n) { return n && (n & (n - 1)) == 0; }

// Periodic Hann window.
inline std::vector<double> hann(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n)));
    return w;
}

} // namespace detail

struct Spectrogram {
    std::vector<std::vector<double>> frames; // rows = time frames, cols = bins 0..N/2
    int frame_length = 256;
    int hop = 128;
    int sample_rate = 8000;

    std::size_t bin_count() const { return static_cast<std::size_t>(frame_length) / 2 + 1; }
    double bin_width_hz() const {
        return static_cast<double>(sample_rate) / static_cast<double>(frame_length);
    }
    double frame_time(std::size_t idx) const {
        return static_cast<double>(idx) * hop / sample_rate;
    }
};

// Hann-windowed one-sided magnitude DFT per frame; frames start at
// 0, hop, 2*hop, ...; the trailing partial frame is zero-padded.
inline Spectrogram spectrogram(const Waveform& w, int frame_length = 256, int hop = 128) {
    if (frame_length < 64 || frame_length > 1024 ||
        !detail::is_pow2(static_cast<std::size_t>(frame_length)))
        throw InvalidFraming("frame length must be a power of two in [64, 1024]");
    if (hop <= 0 || hop > frame_length)
        throw InvalidFraming("hop must satisfy 0 < hop <= frame length");
    Spectrogram s;
    s.frame_length = frame_length;
    s.hop = hop;
    s.sample_rate = w.sample_rate;
    const auto win = detail::hann(static_cast<std::size_t>(frame_length));
    const std::size_t n = w.samples.size();
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(hop)) {
        std::vector<std::complex<double>> buf(static_cast<std::size_t>(frame_length), 0.0);
        for (std::size_t i = 0; i < buf.size() && start + i < n; ++i)
            buf[i] = w.samples[start + i] * win[i];
        detail::fft(buf);
        std::vector<double> mags(s.bin_count());
        for (std::size_t k = 0; k < mags.size(); ++k) mags[k] = std::abs(buf[k]);
        s.frames.push_back(std::move(mags));
    }
    return s;
}

struct FeatureFrame {
    double time = 0.0;
    std::vector<std::pair<double, double>> peaks; // (freq Hz, magnitude), mag-descending, max 5
    double energy = 0.0;                          // sum of squared magnitudes
};

// Per-frame spectral peak picking: local maxima above a noise floor of
// 1e-3 * global max magnitude, top 5 by magnitude.
inline std::vector<FeatureFrame> extract_features(const Spectrogram& s) {
    double global_max = 0.0;
    for (const auto& row : s.frames)
        for (double m : row) global_max = std::max(global_max, m);
    const double floor = 1e-3 * global_max;

    std::vector<FeatureFrame> out;
    out.reserve(s.frames.size());
    for (std::size_t fi = 0; fi < s.frames.size(); ++fi) {
        const auto& row = s.frames[fi];
        FeatureFrame f;
        f.time = s.frame_time(fi);
        for (double m : row) f.energy += m * m;
        if (global_max > 0.0) {
            for (std::size_t k = 1; k + 1 < row.size(); ++k) {
                if (row[k] > floor && row[k] > row[k - 1] && row[k] >= row[k + 1])
                    f.peaks.emplace_back(static_cast<double>(k) * s.bin_width_hz(), row[k]);
            }
            std::stable_sort(f.peaks.begin(), f.peaks.end(),
                             [](const auto& a, const auto& b) { return a.second > b.second; });
            if (f.peaks.size() > 5) f.peaks.resize(5);
        }
        out.push_back(std::move(f));
    }
    return out;
}

} // namespace semstream
