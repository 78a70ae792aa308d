#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "semstream/coordinator.hpp"

using namespace semstream;

namespace {

KnowledgeGraph base_global() {
    KnowledgeGraph g;
    g.add_entity("role_vocalist", EntityCategory::Role);
    g.add_entity("role_pianist", EntityCategory::Role);
    g.add_entity("cat_speech", EntityCategory::Concept);
    g.add_entity("cat_music", EntityCategory::Concept);
    g.add_entity("cat_ambient", EntityCategory::Concept);
    g.add_triple("role_vocalist", "plays", "cat_speech", 0.95);
    g.add_triple("role_pianist", "plays", "cat_music", 0.9);
    return g;
}

UpdatePolicy default_policy() {
    UpdatePolicy p;
    p.min_feedback_count = 2;
    p.min_interval = 60.0;
    p.alpha = 0.2;
    p.hop_limit = 3;
    p.role_threshold = 0.5;
    return p;
}

} // namespace

TEST_CASE("derive_role_filter threshold and fallback") {
    auto g = base_global();
    auto vocal = derive_role_filter(g, "role_vocalist", 0.5);
    CHECK(vocal == std::set<EventKind>{EventKind::Speech});

    auto piano = derive_role_filter(g, "role_pianist", 0.5);
    CHECK(piano == std::set<EventKind>{EventKind::Music});

    // no category edges -> full fallback
    KnowledgeGraph bare;
    bare.add_entity("role_x", EntityCategory::Role);
    auto full = derive_role_filter(bare, "role_x", 0.5);
    CHECK(full.size() == 3);

    // threshold 1 with all probs < 1 -> fallback to full set
    auto strict = derive_role_filter(g, "role_vocalist", 1.0);
    CHECK(strict.size() == 3);

    CHECK_THROWS_AS(derive_role_filter(g, "missing", 0.5), UnknownEntity);
}

TEST_CASE("derive_role_filter is monotone nonincreasing in threshold") {
    auto g = base_global();
    g.add_triple("role_vocalist", "backs", "cat_music", 0.6);
    std::set<EventKind> prev;
    bool first = true;
    for (double theta : {0.1, 0.5, 0.7, 0.9}) {
        auto f = derive_role_filter(g, "role_vocalist", theta);
        if (!first && f.size() < 3) { // ignore the non-empty fallback
            for (auto k : f) CHECK(prev.count(k) == 1);
        }
        prev = f;
        first = false;
    }
}

TEST_CASE("should_update trigger rule") {
    auto p = default_policy();
    CHECK(should_update(p, 2, 0.0));       // count threshold reached
    CHECK(!should_update(p, 0, 30.0));     // neither
    CHECK(should_update(p, 0, 60.0));      // interval boundary inclusive
    CHECK(should_update(p, 5, 100.0));
}

TEST_CASE("round_update: identity round keeps probabilities") {
    auto g = base_global();
    std::vector<DeviceRegistration> regs{{"d1", "role_vocalist", KnowledgeGraph{}}};
    auto result = round_update(g, regs, {}, default_policy());
    CHECK(result.global.version() > g.version());
    CHECK(result.global.triple_prob(TripleKey{"role_vocalist", "plays", "cat_speech"}) == 0.95);
    CHECK(result.edges_updated == 0);
    CHECK(result.locals.count("d1") == 1);
    CHECK(result.role_filters.at("d1") == std::set<EventKind>{EventKind::Speech});
}

TEST_CASE("round_update: feedback moves edge probability by EMA") {
    auto g = base_global();
    g.add_entity("a", EntityCategory::Concept);
    g.add_entity("b", EntityCategory::Concept);
    g.add_triple("a", "followed_by", "b", 0.5);
    std::vector<DeviceRegistration> regs{{"d1", "role_vocalist", KnowledgeGraph{}}};
    std::vector<FeedbackEvent> fb{
        {"listener", TripleKey{"a", "followed_by", "b"}, Verdict::Positive, 1.0}};
    auto result = round_update(g, regs, fb, default_policy());
    CHECK(result.global.triple_prob(TripleKey{"a", "followed_by", "b"}) ==
          doctest::Approx(0.6).epsilon(1e-12));
    CHECK(result.edges_updated == 1);
    CHECK(result.warnings.empty());
}

TEST_CASE("round_update: unknown-triple feedback is skipped with a warning") {
    auto g = base_global();
    std::vector<DeviceRegistration> regs{{"d1", "role_vocalist", KnowledgeGraph{}}};
    std::vector<FeedbackEvent> fb{
        {"listener", TripleKey{"no", "such", "edge"}, Verdict::Positive, 1.0}};
    auto result = round_update(g, regs, fb, default_policy());
    CHECK(result.edges_updated == 0);
    REQUIRE(result.warnings.size() == 1);
}

TEST_CASE("round_update: disjoint private KGs both land in the global") {
    auto g = base_global();
    KnowledgeGraph p1;
    p1.add_entity("note_60", EntityCategory::MusicNote);
    p1.add_entity("role_pianist", EntityCategory::Role);
    p1.add_triple("role_pianist", "knows", "note_60", 0.8);
    KnowledgeGraph p2;
    p2.add_entity("word_hi", EntityCategory::SpeechWord);
    p2.add_entity("role_vocalist", EntityCategory::Role);
    p2.add_triple("role_vocalist", "knows", "word_hi", 0.7);

    std::vector<DeviceRegistration> regs{{"d1", "role_pianist", p1},
                                         {"d2", "role_vocalist", p2}};
    auto result = round_update(g, regs, {}, default_policy());
    CHECK(result.global.has_entity("note_60"));
    CHECK(result.global.has_entity("word_hi"));
    // each local contains only its role-reachable part
    CHECK(result.locals.at("d1").has_entity("note_60"));
    CHECK(!result.locals.at("d1").has_entity("word_hi"));
    CHECK(result.locals.at("d2").has_entity("word_hi"));
    CHECK(!result.locals.at("d2").has_entity("note_60"));
}

TEST_CASE("round_update invariants: growth monotonicity and local subsetting") {
    auto g = base_global();
    g.add_entity("x", EntityCategory::Concept);
    g.add_triple("role_vocalist", "likes", "x", 0.4);
    KnowledgeGraph priv;
    priv.add_entity("y", EntityCategory::Concept);
    std::vector<DeviceRegistration> regs{{"d1", "role_vocalist", priv}};
    auto result = round_update(g, regs, {}, default_policy());

    // nothing deleted
    for (const auto& [id, cat] : g.entities()) CHECK(result.global.has_entity(id));
    for (const auto& [key, p] : g.triples()) CHECK(result.global.has_triple(key));

    // every local is a subgraph of the new global
    for (const auto& [dev, local] : result.locals) {
        for (const auto& [id, cat] : local.entities()) {
            CHECK(result.global.has_entity(id));
            CHECK(result.global.category(id) == cat);
        }
        for (const auto& [key, p] : local.triples()) {
            CHECK(result.global.has_triple(key));
            CHECK(result.global.triple_prob(key) == p);
        }
    }
}

TEST_CASE("repeated feedback rounds converge monotonically toward the verdict") {
    auto g = base_global();
    g.add_entity("a", EntityCategory::Concept);
    g.add_entity("b", EntityCategory::Concept);
    g.add_triple("a", "followed_by", "b", 0.3);
    TripleKey key{"a", "followed_by", "b"};
    std::vector<DeviceRegistration> regs{{"d1", "role_vocalist", KnowledgeGraph{}}};
    std::vector<FeedbackEvent> fb{{"listener", key, Verdict::Positive, 1.0}};

    auto r1 = round_update(g, regs, fb, default_policy());
    auto r2 = round_update(r1.global, regs, fb, default_policy());
    double p0 = g.triple_prob(key);
    double p1 = r1.global.triple_prob(key);
    double p2 = r2.global.triple_prob(key);
    CHECK(std::abs(1.0 - p1) < std::abs(1.0 - p0));
    CHECK(std::abs(1.0 - p2) < std::abs(1.0 - p1));
}

TEST_CASE("round_update rejects bad inputs") {
    auto g = base_global();
    CHECK_THROWS_AS(round_update(g, {}, {}, default_policy()), ConfigError);
    std::vector<DeviceRegistration> dup{{"d1", "role_vocalist", KnowledgeGraph{}},
                                        {"d1", "role_pianist", KnowledgeGraph{}}};
    CHECK_THROWS_AS(round_update(g, dup, {}, default_policy()), ConfigError);
    std::vector<DeviceRegistration> missing{{"d1", "role_ghost", KnowledgeGraph{}}};
    CHECK_THROWS_AS(round_update(g, missing, {}, default_policy()), UnknownEntity);
}
