#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "semstream/errors.hpp"
#include "semstream/kg.hpp"
#include "semstream/sound.hpp"

namespace semstream {

// Reserved sound-kind anchor entities used by role filters.
inline const char* category_anchor(EventKind k) {
    switch (k) {
        case EventKind::Speech: return "cat_speech";
        case EventKind::Music: return "cat_music";
        case EventKind::Ambient: return "cat_ambient";
    }
    return "?";
}

struct DeviceRegistration {
    std::string device_id;
    std::string role; // role root entity in the global KG
    KnowledgeGraph private_kg;
};

struct UpdatePolicy {
    int min_feedback_count = 1;
    double min_interval = 60.0; // seconds
    double alpha = 0.2;
    unsigned hop_limit = 3;
    double role_threshold = 0.5;

    void validate() const {
        if (min_feedback_count < 1) throw ConfigError("min_feedback_count: must be >= 1");
        if (!(min_interval > 0.0)) throw ConfigError("min_interval: must be > 0");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha: must be in (0,1)");
        if (hop_limit < 1) throw ConfigError("hop_limit: must be >= 1");
        if (!(role_threshold > 0.0 && role_threshold <= 1.0))
            throw ConfigError("role_threshold: must be in (0,1]");
    }
};

struct FeedbackEvent {
    std::string listener_id;
    TripleKey triple;
    Verdict verdict = Verdict::Positive;
    double time = 0.0;
};

// Sound kinds whose category anchor is relevance-reachable from the role at
// or above the threshold; an empty result falls back to the full set so a
// device never goes silent.
inline std::set<EventKind> derive_role_filter(const KnowledgeGraph& local,
                                              const std::string& role, double threshold) {
    if (!local.has_entity(role)) throw UnknownEntity(role);
    std::set<EventKind> out;
    for (EventKind k : {EventKind::Speech, EventKind::Music, EventKind::Ambient}) {
        const std::string anchor = category_anchor(k);
        if (!local.has_entity(anchor)) continue;
        if (local.relevance(role, anchor) >= threshold) out.insert(k);
    }
    if (out.empty())
        out = {EventKind::Speech, EventKind::Music, EventKind::Ambient};
    return out;
}

inline bool should_update(const UpdatePolicy& policy, int pending_feedback,
                          double elapsed_since_last) {
    return pending_feedback >= policy.min_feedback_count ||
           elapsed_since_last >= policy.min_interval;
}

struct RoundResult {
    KnowledgeGraph global;
    std::map<std::string, KnowledgeGraph> locals;            // device id -> local KG
    std::map<std::string, std::set<EventKind>> role_filters; // device id -> filter
    std::size_t edges_updated = 0;
    std::vector<std::string> warnings; // skipped feedback on unknown triples
};

// One coordinator round: merge private KGs into the global, fold in
// feedback in time order, then redistribute role-scoped locals and filters.
inline RoundResult round_update(const KnowledgeGraph& global,
                                const std::vector<DeviceRegistration>& registrations,
                                std::vector<FeedbackEvent> feedback,
                                const UpdatePolicy& policy) {
    policy.validate();
    if (registrations.empty()) throw ConfigError("registrations: must be non-empty");
    {
        std::set<std::string> ids;
        for (const auto& r : registrations)
            if (!ids.insert(r.device_id).second)
                throw ConfigError("registrations: duplicate device id " + r.device_id);
    }

    std::vector<KnowledgeGraph> inputs{global};
    for (const auto& r : registrations) inputs.push_back(r.private_kg);
    RoundResult result;
    result.global = merge(inputs);

    std::stable_sort(feedback.begin(), feedback.end(),
                     [](const FeedbackEvent& a, const FeedbackEvent& b) {
                         return a.time < b.time;
                     });
    std::set<TripleKey> touched;
    for (const auto& fb : feedback) {
        if (!result.global.has_triple(fb.triple)) {
            result.warnings.push_back("feedback on unknown triple skipped: " +
                                      fb.triple.str());
            continue;
        }
        result.global = apply_feedback(result.global, fb.triple, fb.verdict, policy.alpha);
        touched.insert(fb.triple);
    }
    result.edges_updated = touched.size();
    result.global.ensure_version_above(global.version());

    for (const auto& r : registrations) {
        if (!result.global.has_entity(r.role)) throw UnknownEntity(r.role);
        KnowledgeGraph local = result.global.extract_local({r.role}, policy.hop_limit);
        result.role_filters[r.device_id] =
            derive_role_filter(local, r.role, policy.role_threshold);
        result.locals[r.device_id] = std::move(local);
    }
    return result;
}

} // namespace semstream
