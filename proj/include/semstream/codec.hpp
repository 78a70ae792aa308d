#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "semstream/dsp.hpp"
#include "semstream/errors.hpp"
#include "semstream/kg.hpp"
#include "semstream/rng.hpp"
#include "semstream/sound.hpp"
#include "semstream/token.hpp"

namespace semstream {

// Temporal-context relation used for gap inference.
inline constexpr const char* kFollowedBy = "followed_by";

// Prior weight on the received entity of a corrupted token.
inline constexpr double kCorruptionPrior = 0.5;

struct Template {
    std::string entity;
    EventKind kind = EventKind::Music;
    std::vector<double> signature; // expected peak frequencies, Hz
};

inline Template make_template(const std::string& entity) {
    auto kind = kind_from_entity(entity);
    if (!kind) throw ValidationError("no template for entity: " + entity);
    return Template{entity, *kind, signature_frequencies(entity)};
}

namespace detail {

// Summed |peak - signature| distance, or nullopt when some signature
// frequency has no frame peak within +-1 bin.
inline std::optional<double> match_distance(const FeatureFrame& frame, const Template& tpl,
                                            double bin_width_hz) {
    // Spectral-leakage side peaks sit orders of magnitude below genuine
    // components; only peaks near the frame maximum may cover a signature.
    double max_mag = 0.0;
    for (const auto& [pf, mag] : frame.peaks) max_mag = std::max(max_mag, mag);
    double dist = 0.0;
    for (double f : tpl.signature) {
        double best = -1.0;
        for (const auto& [pf, mag] : frame.peaks) {
            if (mag < 0.1 * max_mag) continue;
            double d = std::abs(pf - f);
            if (best < 0.0 || d < best) best = d;
        }
        if (best < 0.0 || best > bin_width_hz + 1e-9) return std::nullopt;
        dist += best;
    }
    return dist;
}

} // namespace detail

// Template matching + run grouping: maximal runs of >= 2 consecutive frames
// matching the same template become one event. Salience is the run's mean
// frame energy normalized by the scene's max frame energy.
inline std::vector<SoundEvent> detect_events(const std::vector<FeatureFrame>& frames,
                                             const std::vector<Template>& templates,
                                             double bin_width_hz = 8000.0 / 256.0,
                                             double hop_seconds = 128.0 / 8000.0) {
    if (templates.empty()) throw ValidationError("template list must be non-empty");
    double max_energy = 0.0;
    for (const auto& f : frames) max_energy = std::max(max_energy, f.energy);

    // Per-frame best template index (-1 = silence).
    std::vector<int> label(frames.size(), -1);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        double best_dist = 0.0;
        int best = -1;
        for (std::size_t t = 0; t < templates.size(); ++t) {
            auto d = detail::match_distance(frames[i], templates[t], bin_width_hz);
            if (!d) continue;
            if (best < 0 || *d < best_dist ||
                (*d == best_dist && templates[t].entity < templates[best].entity)) {
                best = static_cast<int>(t);
                best_dist = *d;
            }
        }
        label[i] = best;
    }

    std::vector<SoundEvent> events;
    std::size_t i = 0;
    while (i < frames.size()) {
        if (label[i] < 0) { ++i; continue; }
        std::size_t j = i;
        while (j + 1 < frames.size() && label[j + 1] == label[i]) ++j;
        // Trim boundary frames that only graze the event (window tail over a
        // few milliseconds of signal), so the onset lands within one hop.
        std::size_t lo = i, hi = j;
        double run_max = 0.0;
        for (std::size_t k = i; k <= j; ++k) run_max = std::max(run_max, frames[k].energy);
        // A frame overlapping the event by less than one hop still carries up
        // to ~20% of the peak energy, so the cutoff sits above that; dropping
        // a slightly stronger frame only moves the onset later within one hop.
        while (lo < hi && frames[lo].energy < 0.3 * run_max) ++lo;
        while (hi > lo && frames[hi].energy < 0.3 * run_max) --hi;
        const std::size_t run = hi - lo + 1;
        if (run >= 2) {
            const auto& tpl = templates[static_cast<std::size_t>(label[i])];
            double mean_energy = 0.0;
            for (std::size_t k = lo; k <= hi; ++k) mean_energy += frames[k].energy;
            mean_energy /= static_cast<double>(run);
            SoundEvent e;
            e.kind = tpl.kind;
            e.entity = tpl.entity;
            e.onset = frames[lo].time;
            e.duration = static_cast<double>(run) * hop_seconds;
            e.salience = max_energy > 0.0
                             ? std::clamp(mean_energy / max_energy, 1e-6, 1.0)
                             : 1e-6;
            events.push_back(std::move(e));
        }
        i = j + 1;
    }
    return events;
}

// Role filtering + fusion into one importance-agnostic token list ordered
// by onset with the scene tie-break; seq = final position.
inline std::vector<SemanticToken> encode(std::vector<SoundEvent> events,
                                         const KnowledgeGraph& sender_kg,
                                         const std::set<EventKind>& role_filter) {
    std::erase_if(events, [&](const SoundEvent& e) { return !role_filter.count(e.kind); });
    for (const auto& e : events)
        if (!sender_kg.has_entity(e.entity)) throw UnknownEntity(e.entity);
    std::stable_sort(events.begin(), events.end(), event_before);
    std::vector<SemanticToken> tokens;
    tokens.reserve(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        tokens.push_back(SemanticToken{e.entity, e.kind, e.onset, e.duration, e.salience, i,
                                       TokenStatus::Intact});
    }
    return tokens;
}

struct DecodeResult {
    std::vector<SoundEvent> events;
    std::vector<std::pair<double, double>> silence_gaps; // (onset, duration) placeholders
    std::size_t unresolved_gaps() const { return silence_gaps.size(); }
};

namespace detail {

inline double safe_relevance(const KnowledgeGraph& kg, const std::string& a,
                             const std::string& b) {
    if (!kg.has_entity(a) || !kg.has_entity(b)) return 0.0;
    return kg.relevance(a, b);
}

// Candidate entities and path scores for a missing/distorted slot between
// intact neighbors `prev` and `next` (either may be absent at a boundary).
inline std::map<std::string, double> gap_candidates(const KnowledgeGraph& kg,
                                                    const std::optional<std::string>& prev,
                                                    const std::optional<std::string>& next) {
    std::map<std::string, double> scores;
    if (prev && kg.has_entity(*prev)) {
        for (const auto& [cand, p] : kg.successors(*prev, kFollowedBy)) {
            double s = safe_relevance(kg, *prev, cand);
            if (next) s *= safe_relevance(kg, cand, *next);
            auto [it, fresh] = scores.emplace(cand, s);
            if (!fresh) it->second = std::max(it->second, s);
        }
    } else if (next && kg.has_entity(*next)) {
        for (const auto& [cand, p] : kg.predecessors(*next, kFollowedBy))
            scores.emplace(cand, safe_relevance(kg, cand, *next));
    }
    return scores;
}

inline std::optional<std::string> pick_best(const std::map<std::string, double>& scores) {
    if (scores.empty()) return std::nullopt;
    auto best = scores.begin();
    for (auto it = std::next(scores.begin()); it != scores.end(); ++it)
        if (it->second > best->second) best = it; // ties keep the smaller entity id
    return best->first;
}

} // namespace detail

// Semantic decoding: intact tokens map straight back to events; erased
// slots (scheduled per header but undelivered) and corrupted tokens are
// reconstructed from the listener KG's followed_by context. Slots with no
// usable candidate become silence placeholders and count as unresolved.
inline DecodeResult decode(const std::vector<SemanticToken>& tokens, const FrameHeader& header,
                           const KnowledgeGraph& listener_kg) {
    if (tokens.size() > header.slot_count())
        throw HeaderMismatch("more tokens than header slots");
    std::map<std::size_t, const SemanticToken*> by_seq;
    for (const auto& t : tokens) {
        if (t.seq >= header.slot_count())
            throw HeaderMismatch("token seq exceeds header slot count");
        by_seq[t.seq] = &t;
    }

    auto slots = header.slots;
    std::sort(slots.begin(), slots.end(),
              [](const HeaderSlot& a, const HeaderSlot& b) { return a.seq < b.seq; });

    auto intact_at = [&](std::size_t idx) -> const SemanticToken* {
        auto it = by_seq.find(slots[idx].seq);
        if (it == by_seq.end() || it->second->status != TokenStatus::Intact) return nullptr;
        return it->second;
    };

    DecodeResult result;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        auto it = by_seq.find(slots[i].seq);
        const SemanticToken* tok =
            (it != by_seq.end() && it->second->status != TokenStatus::Erased) ? it->second
                                                                              : nullptr;
        if (tok && tok->status == TokenStatus::Intact) {
            result.events.push_back(
                SoundEvent{tok->kind, tok->entity, tok->onset, tok->duration, tok->salience});
            continue;
        }

        std::optional<std::string> prev, next;
        for (std::size_t k = i; k-- > 0;)
            if (auto* p = intact_at(k)) { prev = p->entity; break; }
        for (std::size_t k = i + 1; k < slots.size(); ++k)
            if (auto* p = intact_at(k)) { next = p->entity; break; }

        auto scores = detail::gap_candidates(listener_kg, prev, next);
        if (tok) { // corrupted: received entity joins at prior weight
            double s = kCorruptionPrior;
            if (prev) s *= detail::safe_relevance(listener_kg, *prev, tok->entity);
            if (next) s *= detail::safe_relevance(listener_kg, tok->entity, *next);
            auto [sit, fresh] = scores.emplace(tok->entity, s);
            if (!fresh) sit->second = std::max(sit->second, s);
        }

        auto chosen = detail::pick_best(scores);
        if (chosen && kind_from_entity(*chosen)) {
            const double onset = tok ? tok->onset : slots[i].onset;
            const double duration = tok ? tok->duration : slots[i].duration;
            const double salience = tok ? tok->salience : 0.5;
            result.events.push_back(
                SoundEvent{*kind_from_entity(*chosen), *chosen, onset, duration, salience});
        } else {
            result.silence_gaps.emplace_back(slots[i].onset, slots[i].duration);
        }
    }
    return result;
}

struct StereoWaveform {
    Waveform left;
    Waveform right;
};

// Pan position in [-1, 1], a deterministic function of the entity id.
inline double pan_position(const std::string& entity) {
    return static_cast<double>(fnv1a64(entity) % 20001) / 10000.0 - 1.0;
}

// Importance-weighted stereo rendering with constant-power panning.
// Events with importance 0 and salience < 0.1 are dropped.
inline StereoWaveform render(const std::vector<SoundEvent>& events,
                             const PreferenceProfile& profile,
                             const KnowledgeGraph& listener_kg, int sample_rate = 8000,
                             double length = 0.0) {
    if (profile.device_channels != 2)
        throw UnsupportedChannelCount(profile.device_channels);
    double end = length;
    for (const auto& e : events) end = std::max(end, e.onset + e.duration);
    const std::size_t n = static_cast<std::size_t>(std::llround(end * sample_rate));
    StereoWaveform out;
    out.left.sample_rate = out.right.sample_rate = sample_rate;
    out.left.samples.assign(n, 0.0);
    out.right.samples.assign(n, 0.0);
    for (const auto& e : events) {
        const double imp = listener_kg.has_entity(e.entity)
                               ? listener_kg.importance(e.entity, profile)
                               : 0.0;
        if (imp == 0.0 && e.salience < 0.1) continue;
        const double gain = 0.2 + 0.8 * imp;
        const double theta = pan_position(e.entity);
        const double angle = (theta + 1.0) * M_PI / 4.0;
        mix_event(out.left.samples, e, gain * std::cos(angle), sample_rate);
        mix_event(out.right.samples, e, gain * std::sin(angle), sample_rate);
    }
    for (double& s : out.left.samples) s = std::clamp(s, -1.0, 1.0);
    for (double& s : out.right.samples) s = std::clamp(s, -1.0, 1.0);
    return out;
}

} // namespace semstream
