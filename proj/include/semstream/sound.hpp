#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "semstream/errors.hpp"
#include "semstream/kg.hpp"
#include "semstream/rng.hpp"

namespace semstream {

enum class EventKind { Speech, Music, Ambient };

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::Speech: return "speech";
        case EventKind::Music: return "music";
        case EventKind::Ambient: return "ambient";
    }
    return "?";
}

inline std::optional<EventKind> kind_from_string(const std::string& s) {
    if (s == "speech") return EventKind::Speech;
    if (s == "music") return EventKind::Music;
    if (s == "ambient") return EventKind::Ambient;
    return std::nullopt;
}

// Entity id conventions bind the sound model to the KG:
//   note_<midi>   music    word_<token>  speech    amb_<class>  ambient
inline std::string music_entity(int midi) { return "note_" + std::to_string(midi); }
inline std::string speech_entity(const std::string& word) { return "word_" + word; }
inline std::string ambient_entity(const std::string& cls) { return "amb_" + cls; }

inline std::optional<EventKind> kind_from_entity(const std::string& id) {
    if (id.rfind("note_", 0) == 0) return EventKind::Music;
    if (id.rfind("word_", 0) == 0) return EventKind::Speech;
    if (id.rfind("amb_", 0) == 0) return EventKind::Ambient;
    return std::nullopt;
}

inline EntityCategory entity_category_for_kind(EventKind k) {
    switch (k) {
        case EventKind::Speech: return EntityCategory::SpeechWord;
        case EventKind::Music: return EntityCategory::MusicNote;
        case EventKind::Ambient: return EntityCategory::AmbientClass;
    }
    return EntityCategory::Concept;
}

struct SoundEvent {
    EventKind kind;
    std::string entity; // KG entity id, encodes the sound parameters
    double onset = 0.0;
    double duration = 0.0;
    double salience = 1.0;
};

// Global ordering: onset, then kind (Speech < Music < Ambient), then entity.
inline bool event_before(const SoundEvent& a, const SoundEvent& b) {
    if (a.onset != b.onset) return a.onset < b.onset;
    if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    return a.entity < b.entity;
}

struct SoundScene {
    std::string sender_id;
    std::vector<SoundEvent> events; // kept ordered by event_before
    double length = 0.0;            // seconds

    void add(SoundEvent e) {
        if (e.duration <= 0.0) throw ValidationError("event duration must be > 0");
        if (e.onset < 0.0) throw ValidationError("event onset must be >= 0");
        if (!(e.salience > 0.0 && e.salience <= 1.0))
            throw ValidationError("event salience must be in (0,1]");
        events.push_back(std::move(e));
        std::stable_sort(events.begin(), events.end(), event_before);
    }
};

struct Waveform {
    std::vector<double> samples; // clamped to [-1, 1]
    int sample_rate = 8000;
};

// Component frequencies of an entity's synthesis signature.
// Music: the MIDI pitch frequency. Speech: 3 hash-derived "formants" on a
// 100 Hz grid in disjoint bands of [300, 3000]. Ambient: 2 hash-derived
// low tones below 200 Hz, kept >= 2 bins apart at the default framing.
inline std::vector<double> signature_frequencies(const std::string& entity) {
    auto kind = kind_from_entity(entity);
    if (!kind) throw ValidationError("entity has no sound signature: " + entity);
    if (*kind == EventKind::Music) {
        int midi = std::stoi(entity.substr(5));
        if (midi < 0 || midi > 127) throw ValidationError("midi pitch out of 0-127: " + entity);
        return {440.0 * std::pow(2.0, (midi - 69) / 12.0)};
    }
    std::uint64_t h = fnv1a64(entity);
    if (*kind == EventKind::Speech) {
        double f1 = 300.0 + 100.0 * static_cast<double>(h % 10);          // 300..1200
        double f2 = 1300.0 + 100.0 * static_cast<double>((h >> 8) % 8);   // 1300..2000
        double f3 = 2100.0 + 100.0 * static_cast<double>((h >> 16) % 10); // 2100..3000
        return {f1, f2, f3};
    }
    double f1 = 40.0 + 10.0 * static_cast<double>(h % 5);          // 40..80
    double f2 = 150.0 + 10.0 * static_cast<double>((h >> 8) % 5);  // 150..190
    return {f1, f2};
}

// Adds one event's additive-sinusoid signal (scaled by salience and an
// extra gain) into a sample buffer. 10 ms linear attack/release ramps.
inline void mix_event(std::vector<double>& buf, const SoundEvent& e, double gain,
                      int sample_rate) {
    auto freqs = signature_frequencies(e.entity);
    const double amp = gain * e.salience / static_cast<double>(freqs.size());
    const std::size_t n = buf.size();
    const std::size_t first = static_cast<std::size_t>(std::ceil(e.onset * sample_rate));
    const std::size_t last =
        std::min(n, static_cast<std::size_t>(std::floor((e.onset + e.duration) * sample_rate)));
    const double r = std::min(0.010, e.duration / 2.0);
    for (std::size_t i = first; i < last; ++i) {
        const double t = static_cast<double>(i) / sample_rate - e.onset;
        double env = 1.0;
        if (t < r) env = t / r;
        else if (e.duration - t < r) env = (e.duration - t) / r;
        env = std::clamp(env, 0.0, 1.0);
        double s = 0.0;
        for (double f : freqs) s += std::sin(2.0 * M_PI * f * t);
        buf[i] += amp * env * s;
    }
}

// Additive sinusoidal synthesis of a whole scene. Overlapping events sum;
// output clamped to [-1, 1].
inline Waveform synthesize(const SoundScene& scene, int sample_rate = 8000) {
    if (sample_rate < 4000) throw ValidationError("sample rate must be >= 4000");
    const std::size_t n = static_cast<std::size_t>(std::llround(scene.length * sample_rate));
    Waveform w;
    w.sample_rate = sample_rate;
    w.samples.assign(n, 0.0);
    for (const auto& e : scene.events) {
        if (e.onset + e.duration > scene.length + 1e-9)
            throw EventOutOfBounds("event '" + e.entity + "' exceeds scene length");
        mix_event(w.samples, e, 1.0, sample_rate);
    }
    for (double& s : w.samples) s = std::clamp(s, -1.0, 1.0);
    return w;
}

} // namespace semstream
