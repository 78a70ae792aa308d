#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "semstream/dsp.hpp"
#include "semstream/rng.hpp"
#include "semstream/sound.hpp"

using namespace semstream;

namespace {

// Naive O(N^2) direct-sum DFT oracle (one-sided magnitudes, Hann windowed
// like the implementation).
std::vector<double> naive_frame_magnitudes(const std::vector<double>& frame) {
    const std::size_t n = frame.size();
    std::vector<double> win(n);
    for (std::size_t i = 0; i < n; ++i)
        win[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) / n));
    std::vector<double> mags(n / 2 + 1);
    for (std::size_t k = 0; k <= n / 2; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double ang = -2.0 * M_PI * static_cast<double>(k) * static_cast<double>(i) / n;
            acc += frame[i] * win[i] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        mags[k] = std::abs(acc);
    }
    return mags;
}

Waveform random_waveform(SplitMix64& rng, std::size_t n, int fs = 8000) {
    Waveform w;
    w.sample_rate = fs;
    for (std::size_t i = 0; i < n; ++i) w.samples.push_back(2.0 * rng.uniform() - 1.0);
    return w;
}

} // namespace

TEST_CASE("spectrogram framing validation") {
    Waveform w;
    w.samples.assign(256, 0.0);
    CHECK_THROWS_AS(spectrogram(w, 100, 50), InvalidFraming);  // not a power of two
    CHECK_THROWS_AS(spectrogram(w, 32, 16), InvalidFraming);   // below 64
    CHECK_THROWS_AS(spectrogram(w, 2048, 64), InvalidFraming); // above 1024
    CHECK_THROWS_AS(spectrogram(w, 256, 0), InvalidFraming);
    CHECK_THROWS_AS(spectrogram(w, 256, 300), InvalidFraming); // hop > frame
}

TEST_CASE("all-zero waveform gives all-zero spectrogram") {
    Waveform w;
    w.samples.assign(1000, 0.0);
    auto s = spectrogram(w, 256, 128);
    CHECK(s.frames.size() == 8); // ceil(1000/128)
    for (const auto& row : s.frames) {
        CHECK(row.size() == 129);
        for (double m : row) CHECK(m == 0.0);
    }
}

TEST_CASE("pure bin-centered sinusoid peaks at its bin") {
    const int fs = 8000, N = 256;
    const int k = 14;
    const double f = static_cast<double>(k) * fs / N;
    Waveform w;
    w.sample_rate = fs;
    for (int i = 0; i < 4 * N; ++i)
        w.samples.push_back(std::sin(2.0 * M_PI * f * i / fs));
    auto s = spectrogram(w, N, N); // non-overlapping full frames
    for (const auto& row : s.frames) {
        std::size_t argmax = 0;
        for (std::size_t b = 1; b < row.size(); ++b)
            if (row[b] > row[argmax]) argmax = b;
        CHECK(argmax == static_cast<std::size_t>(k));
    }
}

TEST_CASE("spectrogram matches the naive DFT oracle") {
    SplitMix64 rng(7);
    for (int iter = 0; iter < 20; ++iter) {
        const std::size_t n = 64u << rng.below(5); // 64..1024
        auto w = random_waveform(rng, n);
        auto s = spectrogram(w, static_cast<int>(n), static_cast<int>(n));
        REQUIRE(s.frames.size() == 1);
        auto want = naive_frame_magnitudes(w.samples);
        REQUIRE(want.size() == s.frames[0].size());
        for (std::size_t k = 0; k < want.size(); ++k)
            CHECK(std::abs(s.frames[0][k] - want[k]) < 1e-9);
    }
}

TEST_CASE("Parseval: windowed frame energy equals spectral energy") {
    SplitMix64 rng(8);
    for (int iter = 0; iter < 20; ++iter) {
        const std::size_t n = 256;
        auto w = random_waveform(rng, n);
        auto s = spectrogram(w, static_cast<int>(n), static_cast<int>(n));
        const auto& row = s.frames[0];

        double time_energy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double win = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) / n));
            time_energy += (w.samples[i] * win) * (w.samples[i] * win);
        }
        // one-sided storage: bins 1..N/2-1 appear twice in the full spectrum
        double spec_energy = row[0] * row[0] + row[n / 2] * row[n / 2];
        for (std::size_t k = 1; k < n / 2; ++k) spec_energy += 2.0 * row[k] * row[k];
        spec_energy /= static_cast<double>(n);
        CHECK(std::abs(spec_energy - time_energy) <= 1e-9 * std::max(1.0, time_energy));
    }
}

TEST_CASE("extract_features peak picking") {
    const int fs = 8000, N = 256;

    SUBCASE("zero frames have no peaks and zero energy") {
        Waveform w;
        w.sample_rate = fs;
        w.samples.assign(N, 0.0);
        auto frames = extract_features(spectrogram(w, N, N));
        REQUIRE(frames.size() == 1);
        CHECK(frames[0].peaks.empty());
        CHECK(frames[0].energy == 0.0);
    }

    SUBCASE("one sinusoid yields one peak within a bin") {
        const double f = 440.0;
        Waveform w;
        w.sample_rate = fs;
        for (int i = 0; i < N; ++i)
            w.samples.push_back(std::sin(2.0 * M_PI * f * i / fs));
        auto frames = extract_features(spectrogram(w, N, N));
        REQUIRE(frames.size() == 1);
        REQUIRE(!frames[0].peaks.empty());
        CHECK(std::abs(frames[0].peaks[0].first - f) <= static_cast<double>(fs) / N);
        // peaks sorted by magnitude descending
        for (std::size_t i = 1; i < frames[0].peaks.size(); ++i)
            CHECK(frames[0].peaks[i - 1].second >= frames[0].peaks[i].second);
        CHECK(frames[0].peaks.size() <= 5);
    }

    SUBCASE("two well-separated equal sinusoids yield two peaks") {
        const double f1 = 440.0, f2 = 660.0;
        Waveform w;
        w.sample_rate = fs;
        for (int i = 0; i < N; ++i)
            w.samples.push_back(std::sin(2.0 * M_PI * f1 * i / fs) +
                                std::sin(2.0 * M_PI * f2 * i / fs));
        auto frames = extract_features(spectrogram(w, N, N));
        REQUIRE(frames.size() == 1);
        const double bin = static_cast<double>(fs) / N;
        int near_f1 = 0, near_f2 = 0;
        for (const auto& [pf, mag] : frames[0].peaks) {
            if (std::abs(pf - f1) <= bin) ++near_f1;
            if (std::abs(pf - f2) <= bin) ++near_f2;
        }
        CHECK(near_f1 == 1);
        CHECK(near_f2 == 1);
    }
}
