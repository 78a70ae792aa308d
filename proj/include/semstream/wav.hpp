#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "semstream/errors.hpp"
#include "semstream/sound.hpp"

namespace semstream {

namespace detail {

inline void put_u16(std::ostream& out, std::uint16_t v) {
    char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    out.write(b, 2);
}

inline void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

inline std::int16_t to_pcm16(double s) {
    return static_cast<std::int16_t>(std::lround(std::clamp(s, -1.0, 1.0) * 32767.0));
}

} // namespace detail

// 16-bit linear PCM, little-endian RIFF. channels: 1 or 2 interleaved.
inline void write_wav(std::ostream& out, const std::vector<const std::vector<double>*>& channels,
                      int sample_rate) {
    if (channels.empty() || channels.size() > 2)
        throw ValidationError("wav writer supports 1 or 2 channels");
    const std::size_t frames = channels[0]->size();
    for (const auto* c : channels)
        if (c->size() != frames) throw ValidationError("channel length mismatch");
    const auto nch = static_cast<std::uint16_t>(channels.size());
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(frames * nch * 2);

    out.write("RIFF", 4);
    detail::put_u32(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    detail::put_u32(out, 16);
    detail::put_u16(out, 1); // PCM
    detail::put_u16(out, nch);
    detail::put_u32(out, static_cast<std::uint32_t>(sample_rate));
    detail::put_u32(out, static_cast<std::uint32_t>(sample_rate) * nch * 2);
    detail::put_u16(out, nch * 2);
    detail::put_u16(out, 16);
    out.write("data", 4);
    detail::put_u32(out, data_bytes);
    for (std::size_t i = 0; i < frames; ++i)
        for (const auto* c : channels)
            detail::put_u16(out, static_cast<std::uint16_t>(detail::to_pcm16((*c)[i])));
}

inline void write_wav(const std::string& path, const Waveform& mono) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write wav file: " + path);
    write_wav(out, {&mono.samples}, mono.sample_rate);
}

inline void write_wav_stereo(const std::string& path, const Waveform& left,
                             const Waveform& right) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write wav file: " + path);
    write_wav(out, {&left.samples, &right.samples}, left.sample_rate);
}

} // namespace semstream
