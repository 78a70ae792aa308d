#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "semstream/codec.hpp"
#include "semstream/errors.hpp"
#include "semstream/kg.hpp"
#include "semstream/rng.hpp"
#include "semstream/sound.hpp"
#include "semstream/transmission.hpp"

namespace semstream {

struct SenderConfig {
    std::string id;
    SoundScene scene;
    std::set<EventKind> role_filter = {EventKind::Speech, EventKind::Music, EventKind::Ambient};
    ChannelModel channel;
};

struct SessionConfig {
    std::vector<SenderConfig> senders;
    PreferenceProfile profile;
    KnowledgeGraph listener_kg;
    double playout_latency_budget = 1.0; // seconds
    double readiness_fraction = 0.8;     // q
    std::uint64_t seed = 0;
    int sample_rate = 8000;
    int frame_length = 256;
    int hop = 128;

    void validate() const {
        if (senders.empty()) throw ConfigError("senders: at least one sender required");
        if (!(readiness_fraction >= 0.0 && readiness_fraction <= 1.0))
            throw ConfigError("readiness_fraction: must be in [0,1]");
        if (!(playout_latency_budget > 0.0))
            throw ConfigError("playout_latency_budget: must be > 0");
        std::set<std::string> ids;
        for (const auto& s : senders) {
            if (!ids.insert(s.id).second) throw ConfigError("senders: duplicate id " + s.id);
            s.channel.validate();
            if (!(s.scene.length > 0.0))
                throw ConfigError("scene length: must be > 0 for sender " + s.id);
            for (const auto& e : s.scene.events)
                if (!listener_kg.has_entity(e.entity))
                    throw ConfigError("scene entity not in kg: " + e.entity);
        }
    }
};

struct StreamTrace {
    std::string sender_id;
    ChannelModel channel;
    ScheduledFrame frame; // post-budget
    std::vector<DeliveryRecord> records;
    DecodeResult decoded;
    double readiness = 0.0;
    std::size_t slots = 0;
    std::size_t sent = 0;
};

struct LogEntry {
    double time = 0.0;
    std::string what;
};

struct SessionTrace {
    std::vector<StreamTrace> streams;
    std::vector<SoundEvent> merged_events;
    StereoWaveform rendered;
    std::vector<LogEntry> log; // nondecreasing timestamps
    double start_time = 0.0;
};

struct SyncReport {
    double fidelity = 0.0;
    double start_skew_s = 0.0;
    double rms_skew_s = 0.0;
    double jitter_s = 0.0;
    std::size_t deadline_misses = 0;
    std::size_t unresolved_gaps = 0;
    std::size_t tokens_sent = 0;
    std::size_t tokens_dropped = 0;
    std::size_t tokens_erased = 0;
    std::size_t tokens_corrupted = 0;
};

// Earliest arrival time at which the cumulative importance of delivered
// tokens reaches q times the total importance of the scheduled (kept)
// tokens. Never reached -> latest arrival; nothing arrives -> start_time.
inline double readiness_time(const std::vector<DeliveryRecord>& records,
                             const ScheduledFrame& frame, double q, double start_time = 0.0) {
    std::map<std::size_t, double> importance_by_seq;
    double total = 0.0;
    for (std::size_t i = 0; i < frame.tokens.size(); ++i) {
        importance_by_seq[frame.tokens[i].seq] = frame.importances[i];
        total += frame.importances[i];
    }
    std::vector<std::pair<double, double>> arrivals; // (time, importance)
    for (const auto& r : records) {
        if (!r.arrival_time) continue;
        auto it = importance_by_seq.find(r.seq);
        arrivals.emplace_back(*r.arrival_time, it != importance_by_seq.end() ? it->second : 0.0);
    }
    if (arrivals.empty()) return start_time;
    std::sort(arrivals.begin(), arrivals.end());
    if (q <= 0.0) return arrivals.front().first;
    const double threshold = q * total;
    double cum = 0.0;
    for (const auto& [t, imp] : arrivals) {
        cum += imp;
        if (cum >= threshold) return t;
    }
    return arrivals.back().first;
}

// k-way merge of per-stream decoded events under the global event ordering;
// full ties keep the input (sender) order.
inline std::vector<SoundEvent> merge_streams(
    const std::vector<std::vector<SoundEvent>>& per_sender_events) {
    std::vector<SoundEvent> merged;
    for (const auto& stream : per_sender_events)
        merged.insert(merged.end(), stream.begin(), stream.end());
    std::stable_sort(merged.begin(), merged.end(), event_before);
    return merged;
}

// End-to-end deterministic session: per sender the full encode/transmit
// pipeline, progressive decode at the stream's readiness time, one merged
// stereo render at the latest readiness.
inline SessionTrace run_session(const SessionConfig& config) {
    config.validate();
    SessionTrace trace;
    const double t0 = trace.start_time;

    for (const auto& sender : config.senders) {
        StreamTrace st;
        st.sender_id = sender.id;
        st.channel = sender.channel;
        st.channel.rng_seed =
            derive_seed(config.seed ^ sender.channel.rng_seed, "channel/" + sender.id);

        Waveform wave = synthesize(sender.scene, config.sample_rate);
        Spectrogram spec = spectrogram(wave, config.frame_length, config.hop);
        auto features = extract_features(spec);

        std::vector<Template> templates;
        std::set<std::string> seen;
        for (const auto& e : sender.scene.events)
            if (seen.insert(e.entity).second) templates.push_back(make_template(e.entity));
        std::vector<SoundEvent> detected =
            templates.empty() ? std::vector<SoundEvent>{}
                              : detect_events(features, templates, spec.bin_width_hz(),
                                              static_cast<double>(config.hop) /
                                                  config.sample_rate);

        auto tokens = encode(detected, config.listener_kg, sender.role_filter);
        auto frame = score_and_order(tokens, config.profile, config.listener_kg);
        const std::size_t budget =
            static_cast<std::size_t>(std::floor(sender.channel.rate * sender.scene.length));
        st.slots = frame.header.slot_count();
        frame = schedule(std::move(frame), budget);
        st.sent = frame.tokens.size();
        st.records = transmit(frame, st.channel, t0, config.listener_kg);
        st.readiness = readiness_time(st.records, frame, config.readiness_fraction, t0);

        // Receiver-side view: delivered tokens with channel statuses applied.
        std::map<std::size_t, const DeliveryRecord*> rec_by_seq;
        for (const auto& r : st.records) rec_by_seq[r.seq] = &r;
        std::vector<SemanticToken> received;
        for (const auto& tok : frame.tokens) {
            const auto* rec = rec_by_seq.at(tok.seq);
            if (rec->status == TokenStatus::Erased) continue;
            SemanticToken rt = tok;
            rt.status = rec->status;
            if (rec->status == TokenStatus::Corrupted) {
                rt.entity = rec->received_entity;
                if (auto k = kind_from_entity(rt.entity)) rt.kind = *k;
            }
            received.push_back(std::move(rt));
        }
        st.decoded = decode(received, frame.header, config.listener_kg);
        st.frame = std::move(frame);
        trace.streams.push_back(std::move(st));
    }

    std::vector<std::vector<SoundEvent>> per_sender;
    double max_readiness = t0;
    double max_length = 0.0;
    for (const auto& st : trace.streams) {
        per_sender.push_back(st.decoded.events);
        max_readiness = std::max(max_readiness, st.readiness);
    }
    for (const auto& s : config.senders) max_length = std::max(max_length, s.scene.length);
    trace.merged_events = merge_streams(per_sender);
    trace.rendered = render(trace.merged_events, config.profile, config.listener_kg,
                            config.sample_rate, max_length);

    // Event log assembled from the per-stream timelines in time order.
    for (const auto& st : trace.streams) {
        for (const auto& r : st.records) {
            if (r.send_time)
                trace.log.push_back(
                    {*r.send_time, "send " + st.sender_id + " seq=" + std::to_string(r.seq)});
            if (r.arrival_time)
                trace.log.push_back({*r.arrival_time, "arrive " + st.sender_id +
                                                          " seq=" + std::to_string(r.seq) +
                                                          " " + to_string(r.status)});
        }
        trace.log.push_back({st.readiness, "ready " + st.sender_id});
    }
    trace.log.push_back({max_readiness, "render"});
    std::stable_sort(trace.log.begin(), trace.log.end(),
                     [](const LogEntry& a, const LogEntry& b) { return a.time < b.time; });
    return trace;
}

// The three challenge metric families: semantic fidelity, timing
// (skew / jitter / deadline misses), and loss accounting.
inline SyncReport compute_metrics(const SessionTrace& trace,
                                  const std::vector<SoundScene>& ground_truth,
                                  const PreferenceProfile& profile,
                                  const KnowledgeGraph& listener_kg) {
    SyncReport rep;

    // Preference-weighted event recall with a 50 ms onset tolerance.
    std::vector<bool> used(trace.merged_events.size(), false);
    double num = 0.0, den = 0.0;
    for (const auto& scene : ground_truth) {
        for (const auto& gt : scene.events) {
            const double w = std::max(
                0.05, listener_kg.has_entity(gt.entity)
                          ? listener_kg.importance(gt.entity, profile)
                          : 0.0);
            den += w;
            int best = -1;
            double best_err = 0.0;
            for (std::size_t i = 0; i < trace.merged_events.size(); ++i) {
                if (used[i] || trace.merged_events[i].entity != gt.entity) continue;
                double err = std::abs(trace.merged_events[i].onset - gt.onset);
                if (err <= 0.050 && (best < 0 || err < best_err)) {
                    best = static_cast<int>(i);
                    best_err = err;
                }
            }
            if (best >= 0) {
                used[static_cast<std::size_t>(best)] = true;
                num += w;
            }
        }
    }
    rep.fidelity = den > 0.0 ? num / den : 1.0;

    // Timing: pairwise readiness skew and worst per-stream jitter.
    for (std::size_t i = 0; i < trace.streams.size(); ++i) {
        for (std::size_t j = i + 1; j < trace.streams.size(); ++j) {
            double d = std::abs(trace.streams[i].readiness - trace.streams[j].readiness);
            rep.start_skew_s = std::max(rep.start_skew_s, d);
            rep.rms_skew_s += d * d;
        }
    }
    const std::size_t pairs = trace.streams.size() * (trace.streams.size() - 1) / 2;
    rep.rms_skew_s = pairs ? std::sqrt(rep.rms_skew_s / static_cast<double>(pairs)) : 0.0;

    for (const auto& st : trace.streams) {
        std::vector<double> arrivals;
        for (const auto& r : st.records)
            if (r.status == TokenStatus::Intact && r.arrival_time)
                arrivals.push_back(*r.arrival_time);
        std::sort(arrivals.begin(), arrivals.end());
        if (arrivals.size() >= 2) {
            std::vector<double> dev;
            for (std::size_t i = 1; i < arrivals.size(); ++i)
                dev.push_back(arrivals[i] - arrivals[i - 1] - 1.0 / st.channel.rate);
            double mean = 0.0;
            for (double d : dev) mean += d;
            mean /= static_cast<double>(dev.size());
            double var = 0.0;
            for (double d : dev) var += (d - mean) * (d - mean);
            var /= static_cast<double>(dev.size());
            rep.jitter_s = std::max(rep.jitter_s, std::sqrt(var));
        }
        rep.unresolved_gaps += st.decoded.unresolved_gaps();
        rep.tokens_sent += st.sent;
        rep.tokens_dropped += st.slots - st.sent;
        for (const auto& r : st.records) {
            if (r.status == TokenStatus::Erased && r.send_time) ++rep.tokens_erased;
            if (r.status == TokenStatus::Corrupted) ++rep.tokens_corrupted;
        }
    }
    return rep;
}

inline SyncReport compute_metrics(const SessionTrace& trace, const SessionConfig& config) {
    std::vector<SoundScene> scenes;
    for (const auto& s : config.senders) scenes.push_back(s.scene);
    SyncReport rep = compute_metrics(trace, scenes, config.profile, config.listener_kg);
    for (const auto& st : trace.streams)
        if (st.readiness > trace.start_time + config.playout_latency_budget)
            ++rep.deadline_misses;
    return rep;
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

// Flat key=value serialization, one metric per line.
inline std::string format_report(const SyncReport& r) {
    std::ostringstream out;
    out << "fidelity=" << format_double(r.fidelity) << "\n";
    out << "start_skew_s=" << format_double(r.start_skew_s) << "\n";
    out << "rms_skew_s=" << format_double(r.rms_skew_s) << "\n";
    out << "jitter_s=" << format_double(r.jitter_s) << "\n";
    out << "deadline_misses=" << r.deadline_misses << "\n";
    out << "unresolved_gaps=" << r.unresolved_gaps << "\n";
    out << "tokens_sent=" << r.tokens_sent << "\n";
    out << "tokens_dropped=" << r.tokens_dropped << "\n";
    out << "tokens_erased=" << r.tokens_erased << "\n";
    out << "tokens_corrupted=" << r.tokens_corrupted << "\n";
    return out.str();
}

} // namespace semstream
