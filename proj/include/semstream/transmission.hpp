#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "semstream/errors.hpp"
#include "semstream/kg.hpp"
#include "semstream/rng.hpp"
#include "semstream/token.hpp"

namespace semstream {

struct ScheduledFrame {
    FrameHeader header;
    std::vector<SemanticToken> tokens; // importance-descending, stable on ties
    std::vector<double> importances;   // parallel to tokens
};

struct ChannelModel {
    double rate = 1.0;             // tokens / second, > 0
    double propagation_delay = 0.0;
    double jitter_std = 0.0;       // zero-mean Gaussian truncated at zero
    double erasure_prob = 0.0;
    double corruption_prob = 0.0;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (!(rate > 0.0)) throw ConfigError("channel rate must be > 0");
        if (propagation_delay < 0.0) throw ConfigError("channel delay must be >= 0");
        if (jitter_std < 0.0) throw ConfigError("channel jitter must be >= 0");
        if (erasure_prob < 0.0 || corruption_prob < 0.0 ||
            erasure_prob + corruption_prob > 1.0)
            throw ConfigError("erasure + corruption probability must stay within [0,1]");
    }
};

struct DeliveryRecord {
    std::size_t seq = 0;
    TokenStatus status = TokenStatus::Intact;
    std::optional<double> send_time;    // absent when dropped by the scheduler
    std::optional<double> arrival_time; // absent when erased or dropped
    std::string received_entity;        // possibly altered when corrupted
};

// Importance scoring and stable reordering. The header keeps the full
// pre-drop slot list so the receiver can detect filtered slots.
inline ScheduledFrame score_and_order(const std::vector<SemanticToken>& tokens,
                                      const PreferenceProfile& profile,
                                      const KnowledgeGraph& kg,
                                      std::int64_t frame_id = 0) {
    ScheduledFrame frame;
    frame.header.frame_id = frame_id;
    frame.tokens = tokens;
    frame.importances.reserve(tokens.size());
    for (const auto& t : tokens) {
        frame.header.slots.push_back(HeaderSlot{t.seq, t.onset, t.duration});
        frame.importances.push_back(kg.importance(t.entity, profile)); // throws UnknownEntity
    }
    frame.header.total_importance =
        std::accumulate(frame.importances.begin(), frame.importances.end(), 0.0);

    std::vector<std::size_t> order(tokens.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return frame.importances[a] > frame.importances[b];
    });
    std::vector<SemanticToken> sorted_tokens;
    std::vector<double> sorted_imps;
    for (std::size_t idx : order) {
        sorted_tokens.push_back(tokens[idx]);
        sorted_imps.push_back(frame.importances[idx]);
    }
    frame.tokens = std::move(sorted_tokens);
    frame.importances = std::move(sorted_imps);
    return frame;
}

// Keeps the top min(budget, count) tokens; the header is untouched so
// dropped slots remain inferable at the receiver.
inline ScheduledFrame schedule(ScheduledFrame frame, std::size_t budget) {
    if (frame.tokens.size() > budget) {
        frame.tokens.resize(budget);
        frame.importances.resize(budget);
    }
    return frame;
}

// Serial token-level channel. Per token three draws are consumed (outcome,
// jitter, corruption pick) regardless of outcome so sweeps over loss
// probabilities share one random stream. The sender KG supplies the
// same-category vocabulary for corruption substitution.
inline std::vector<DeliveryRecord> transmit(const ScheduledFrame& frame,
                                            const ChannelModel& channel, double start_time,
                                            const KnowledgeGraph& sender_kg) {
    channel.validate();
    SplitMix64 rng(channel.rng_seed);
    std::vector<DeliveryRecord> records;
    records.reserve(frame.header.slot_count());
    for (std::size_t i = 0; i < frame.tokens.size(); ++i) {
        const auto& tok = frame.tokens[i];
        DeliveryRecord rec;
        rec.seq = tok.seq;
        rec.send_time = start_time + static_cast<double>(i + 1) / channel.rate;
        rec.received_entity = tok.entity;

        const double u = rng.uniform();
        const double jitter = std::max(0.0, channel.jitter_std * rng.normal());
        const std::uint64_t pick = rng.next();

        if (u < channel.erasure_prob) {
            rec.status = TokenStatus::Erased;
            rec.arrival_time.reset();
        } else {
            rec.arrival_time = *rec.send_time + channel.propagation_delay + jitter;
            if (u < channel.erasure_prob + channel.corruption_prob) {
                rec.status = TokenStatus::Corrupted;
                auto vocab =
                    sender_kg.entities_of_category(entity_category_for_kind(tok.kind));
                std::erase(vocab, tok.entity);
                if (!vocab.empty())
                    rec.received_entity = vocab[pick % vocab.size()];
            } else {
                rec.status = TokenStatus::Intact;
            }
        }
        records.push_back(std::move(rec));
    }
    // Scheduler-dropped slots: erased records with no times.
    std::vector<bool> kept(frame.header.slot_count(), false);
    for (const auto& t : frame.tokens)
        if (t.seq < kept.size()) kept[t.seq] = true;
    for (const auto& slot : frame.header.slots) {
        if (slot.seq < kept.size() && kept[slot.seq]) continue;
        DeliveryRecord rec;
        rec.seq = slot.seq;
        rec.status = TokenStatus::Erased;
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace semstream
