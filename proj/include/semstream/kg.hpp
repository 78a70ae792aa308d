#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "semstream/errors.hpp"

namespace semstream {

enum class EntityCategory {
    SpeechWord,
    MusicNote,
    AmbientClass,
    Concept,
    Role,
    PreferenceTarget,
};

inline const char* to_string(EntityCategory c) {
    switch (c) {
        case EntityCategory::SpeechWord: return "speech-word";
        case EntityCategory::MusicNote: return "music-note";
        case EntityCategory::AmbientClass: return "ambient-class";
        case EntityCategory::Concept: return "concept";
        case EntityCategory::Role: return "role";
        case EntityCategory::PreferenceTarget: return "preference-target";
    }
    return "?";
}

inline std::optional<EntityCategory> category_from_string(const std::string& s) {
    if (s == "speech-word") return EntityCategory::SpeechWord;
    if (s == "music-note") return EntityCategory::MusicNote;
    if (s == "ambient-class") return EntityCategory::AmbientClass;
    if (s == "concept") return EntityCategory::Concept;
    if (s == "role") return EntityCategory::Role;
    if (s == "preference-target") return EntityCategory::PreferenceTarget;
    return std::nullopt;
}

struct TripleKey {
    std::string head;
    std::string relation;
    std::string tail;

    auto operator<=>(const TripleKey&) const = default;

    std::string str() const { return head + " " + relation + " " + tail; }
};

struct PreferenceProfile {
    std::vector<std::pair<std::string, double>> targets; // (entity id, weight in [0,1])
    int device_channels = 2;
};

// Probabilistic directed multigraph of (head, relation, tail, prob) triples.
// Value semantics: mutators bump the version counter; callers that need the
// old state keep a copy.
class KnowledgeGraph {
public:
    void add_entity(const std::string& id, EntityCategory cat) {
        if (id.empty()) throw ValidationError("entity id must be non-empty");
        auto it = entities_.find(id);
        if (it != entities_.end()) {
            if (it->second != cat) throw CategoryConflict(id);
            return; // idempotent re-add of same entity
        }
        entities_.emplace(id, cat);
        ++version_;
    }

    void add_triple(const std::string& head, const std::string& relation,
                    const std::string& tail, double prob) {
        if (relation.empty()) throw ValidationError("relation label must be non-empty");
        if (!has_entity(head)) throw UnknownEntity(head);
        if (!has_entity(tail)) throw UnknownEntity(tail);
        if (!(prob > 0.0 && prob <= 1.0)) throw InvalidProbability(prob);
        TripleKey key{head, relation, tail};
        if (triples_.count(key)) throw DuplicateTriple(key.str());
        triples_.emplace(key, prob);
        ++version_;
    }

    bool has_entity(const std::string& id) const { return entities_.count(id) != 0; }

    EntityCategory category(const std::string& id) const {
        auto it = entities_.find(id);
        if (it == entities_.end()) throw UnknownEntity(id);
        return it->second;
    }

    bool has_triple(const TripleKey& key) const { return triples_.count(key) != 0; }

    double triple_prob(const TripleKey& key) const {
        auto it = triples_.find(key);
        if (it == triples_.end()) throw UnknownTriple(key.str());
        return it->second;
    }

    const std::map<std::string, EntityCategory>& entities() const { return entities_; }
    const std::map<TripleKey, double>& triples() const { return triples_; }
    std::uint64_t version() const { return version_; }

    std::size_t entity_count() const { return entities_.size(); }
    std::size_t triple_count() const { return triples_.size(); }

    // Max-product path probability head->tail ("widest path" Dijkstra on the
    // product directly; equivalent to least cost under -ln(prob) but exact
    // against prefix-product enumeration). Parallel relations between the
    // same pair contribute their max prob.
    double relevance(const std::string& source, const std::string& target) const {
        return relevance_path(source, target).first;
    }

    // Returns (value, maximizing entity path). Path empty when unreachable.
    std::pair<double, std::vector<std::string>> relevance_path(
        const std::string& source, const std::string& target) const {
        if (!has_entity(source)) throw UnknownEntity(source);
        if (!has_entity(target)) throw UnknownEntity(target);
        if (source == target) return {1.0, {source}};

        auto adj = best_adjacency();
        std::map<std::string, double> best;
        std::map<std::string, std::string> pred;
        using Item = std::pair<double, std::string>;
        std::priority_queue<Item> heap;
        best[source] = 1.0;
        heap.push({1.0, source});
        while (!heap.empty()) {
            auto [p, u] = heap.top();
            heap.pop();
            if (p < best[u]) continue;
            if (u == target) break;
            auto it = adj.find(u);
            if (it == adj.end()) continue;
            for (const auto& [v, edge_p] : it->second) {
                double cand = p * edge_p;
                auto bi = best.find(v);
                if (bi == best.end() || cand > bi->second) {
                    best[v] = cand;
                    pred[v] = u;
                    heap.push({cand, v});
                }
            }
        }
        auto bi = best.find(target);
        if (bi == best.end()) return {0.0, {}};
        std::vector<std::string> path;
        for (std::string node = target;; node = pred.at(node)) {
            path.push_back(node);
            if (node == source) break;
        }
        std::reverse(path.begin(), path.end());
        return {bi->second, path};
    }

    // Importance of an entity under a preference profile: max over targets
    // (e, w) of w * relevance(entity, e). Missing targets contribute 0.
    double importance(const std::string& entity, const PreferenceProfile& profile) const {
        if (!has_entity(entity)) throw UnknownEntity(entity);
        double best = 0.0;
        for (const auto& [target, weight] : profile.targets) {
            if (!has_entity(target)) continue;
            best = std::max(best, weight * relevance(entity, target));
        }
        return best;
    }

    // Subgraph induced by everything reachable from the roots within
    // hop_limit directed hops (roots included).
    KnowledgeGraph extract_local(const std::vector<std::string>& roots,
                                 unsigned hop_limit) const {
        std::set<std::string> kept;
        std::vector<std::string> frontier;
        for (const auto& r : roots) {
            if (!has_entity(r)) throw UnknownEntity(r);
            if (kept.insert(r).second) frontier.push_back(r);
        }
        auto adj = best_adjacency();
        for (unsigned hop = 0; hop < hop_limit && !frontier.empty(); ++hop) {
            std::vector<std::string> next;
            for (const auto& u : frontier) {
                auto it = adj.find(u);
                if (it == adj.end()) continue;
                for (const auto& [v, p] : it->second)
                    if (kept.insert(v).second) next.push_back(v);
            }
            frontier = std::move(next);
        }
        KnowledgeGraph out;
        for (const auto& id : kept) out.add_entity(id, entities_.at(id));
        for (const auto& [key, p] : triples_)
            if (kept.count(key.head) && kept.count(key.tail))
                out.add_triple(key.head, key.relation, key.tail, p);
        return out;
    }

    // Tails of (head, relation, *) triples, with probs.
    std::vector<std::pair<std::string, double>> successors(
        const std::string& head, const std::string& relation) const {
        std::vector<std::pair<std::string, double>> out;
        auto lo = triples_.lower_bound(TripleKey{head, relation, ""});
        for (auto it = lo; it != triples_.end(); ++it) {
            if (it->first.head != head || it->first.relation != relation) break;
            out.emplace_back(it->first.tail, it->second);
        }
        return out;
    }

    // Heads of (*, relation, tail) triples, with probs.
    std::vector<std::pair<std::string, double>> predecessors(
        const std::string& tail, const std::string& relation) const {
        std::vector<std::pair<std::string, double>> out;
        for (const auto& [key, p] : triples_)
            if (key.relation == relation && key.tail == tail)
                out.emplace_back(key.head, p);
        return out;
    }

    std::vector<std::string> entities_of_category(EntityCategory cat) const {
        std::vector<std::string> out;
        for (const auto& [id, c] : entities_)
            if (c == cat) out.push_back(id);
        return out;
    }

    // Keeps the version counter monotone when a graph is rebuilt from pieces
    // (merge produces a fresh counter).
    void ensure_version_above(std::uint64_t v) {
        if (version_ <= v) version_ = v + 1;
    }

    void set_triple_prob(const TripleKey& key, double prob) {
        auto it = triples_.find(key);
        if (it == triples_.end()) throw UnknownTriple(key.str());
        it->second = prob;
        ++version_;
    }

private:
    // Best prob per (head, tail) across parallel relations.
    std::map<std::string, std::map<std::string, double>> best_adjacency() const {
        std::map<std::string, std::map<std::string, double>> adj;
        for (const auto& [key, p] : triples_) {
            double& slot = adj[key.head][key.tail];
            slot = std::max(slot, p);
        }
        return adj;
    }

    std::map<std::string, EntityCategory> entities_;
    std::map<TripleKey, double> triples_;
    std::uint64_t version_ = 0;
};

// EMA probability update from listener feedback, floored at 0.01 so no edge
// becomes permanently unusable.
enum class Verdict { Positive, Negative };

inline KnowledgeGraph apply_feedback(const KnowledgeGraph& g, const TripleKey& key,
                                     Verdict verdict, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ValidationError("feedback alpha must be in (0,1)");
    double p = g.triple_prob(key); // throws UnknownTriple
    double v = verdict == Verdict::Positive ? 1.0 : 0.0;
    double updated = (1.0 - alpha) * p + alpha * v;
    updated = std::clamp(updated, 0.01, 1.0);
    KnowledgeGraph out = g;
    out.set_triple_prob(key, updated);
    return out;
}

// Union of entities and triples; duplicate (head, relation, tail) keys
// combine by noisy-OR: 1 - prod(1 - p_i).
inline KnowledgeGraph merge(const std::vector<KnowledgeGraph>& graphs) {
    if (graphs.empty()) throw ValidationError("merge requires at least one graph");
    KnowledgeGraph out;
    std::map<TripleKey, double> survival; // prod(1 - p_i)
    std::map<TripleKey, double> max_p;
    for (const auto& g : graphs) {
        for (const auto& [id, cat] : g.entities()) out.add_entity(id, cat);
        for (const auto& [key, p] : g.triples()) {
            auto [it, fresh] = survival.emplace(key, 1.0);
            it->second *= (1.0 - p);
            double& m = max_p[key];
            m = std::max(m, p);
        }
    }
    for (const auto& [key, s] : survival) {
        double p = 1.0 - s;
        p = std::max(p, max_p[key]); // noisy-OR never below the strongest input
        p = std::min(p, 1.0);
        out.add_triple(key.head, key.relation, key.tail, p);
    }
    return out;
}

} // namespace semstream
