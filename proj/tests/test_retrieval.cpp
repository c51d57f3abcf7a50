#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "kgrag/errors.hpp"
#include "kgrag/kg.hpp"
#include "kgrag/retrieval.hpp"
#include "kgrag/rng.hpp"
#include "kgrag/vecops.hpp"

using namespace kgrag;

namespace {

KnowledgeSnippet doc_snippet(std::string id, std::string body,
                             std::vector<std::string> linked = {}) {
    KnowledgeSnippet s;
    s.id = std::move(id);
    s.text = std::move(body);
    s.source = SnippetSource::document_chunk;
    std::sort(linked.begin(), linked.end());
    s.linked_entities = std::move(linked);
    return s;
}

std::string random_text(Rng& rng, std::size_t words) {
    static const char* pool[] = {"carrier", "uplink",  "downlink", "frame",   "slot",
                                 "antenna", "channel", "latency",  "jitter",  "packet",
                                 "rlc",     "pdcp",    "mac",      "session", "bearer"};
    std::string s;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) s += " ";
        s += pool[rng.uniform_int(15)];
    }
    return s;
}

}  // namespace

TEST_CASE("encoder: determinism, normalization and case folding") {
    HashedEncoder enc(64);
    auto a = enc.encode("handover latency");
    auto b = enc.encode("handover latency");
    CHECK(a == b);

    double norm = std::sqrt(vecops::squared_norm(a.data(), a.size()));
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-9));

    CHECK(enc.encode("HANDOVER latency") == a);
    CHECK_THROWS_WITH_AS(enc.encode(""), doctest::Contains("empty-text"), Error);
    // Punctuation-only text has no tokens: zero vector, no crash.
    auto zero = enc.encode("?!...");
    CHECK(vecops::squared_norm(zero.data(), zero.size()) == 0.0);
}

TEST_CASE("build_index counts document frequencies like a hand count") {
    HashedEncoder enc(32);
    auto index = build_index({doc_snippet("s1", "alpha beta alpha"),
                              doc_snippet("s2", "beta gamma"),
                              doc_snippet("s3", "delta")},
                             enc);
    CHECK(index.size() == 3);
    CHECK(index.stats().snippet_count == 3);
    CHECK(index.stats().df.at("alpha") == 1);  // per-document, not per-occurrence
    CHECK(index.stats().df.at("beta") == 2);
    CHECK(index.stats().df.at("gamma") == 1);
    CHECK(index.stats().df.count("omega") == 0);

    SUBCASE("rebuild of the same input is identical") {
        auto again = build_index({doc_snippet("s1", "alpha beta alpha"),
                                  doc_snippet("s2", "beta gamma"),
                                  doc_snippet("s3", "delta")},
                                 enc);
        CHECK(again.stats().df == index.stats().df);
        for (const auto& s : index.snippets()) {
            auto u = index.vector_of(s.id);
            auto v = again.vector_of(s.id);
            CHECK(std::equal(u.begin(), u.end(), v.begin()));
        }
    }
    SUBCASE("empty input yields an empty index") {
        auto empty = build_index({}, enc);
        CHECK(empty.empty());
        CHECK(empty.stats().snippet_count == 0);
    }
    SUBCASE("duplicate ids are rejected") {
        CHECK_THROWS_WITH_AS(
            build_index({doc_snippet("s1", "a"), doc_snippet("s1", "b")}, enc),
            doctest::Contains("duplicate-id"), Error);
    }
}

TEST_CASE("cosine_sim hand examples") {
    std::vector<double> u{1, 0}, v{0, 1}, w{1, 2, 3}, x{4, 5, 6};
    CHECK(cosine_sim(u, u) == 1.0);
    CHECK(cosine_sim(u, v) == 0.0);
    CHECK(cosine_sim(w, x) ==
          doctest::Approx(32.0 / (std::sqrt(14.0) * std::sqrt(77.0))).epsilon(1e-9));
    CHECK(cosine_sim(w, x) == doctest::Approx(0.974631).epsilon(1e-6));

    std::vector<double> zero{0, 0};
    CHECK_THROWS_WITH_AS(cosine_sim(u, zero), doctest::Contains("zero-vector"), Error);
    CHECK_THROWS_WITH_AS(cosine_sim(u, w), doctest::Contains("dimension-mismatch"), Error);
}

TEST_CASE("tfidf_score follows the smoothed formula") {
    HashedEncoder enc(32);
    SUBCASE("no query terms in the snippet scores 0") {
        auto index = build_index({doc_snippet("s1", "alpha beta")}, enc);
        CHECK(tfidf_score("omega", index.snippets()[0], index.stats()) == 0.0);
    }
    SUBCASE("single-snippet corpus, term twice in snippet") {
        auto index = build_index({doc_snippet("s1", "alpha beta alpha")}, enc);
        // tf=2, N=1, df=1: 2 * (ln(2/2) + 1) = 2.
        CHECK(tfidf_score("alpha", index.snippets()[0], index.stats()) ==
              doctest::Approx(2.0).epsilon(1e-12));
    }
    SUBCASE("query term multiplicity does not double-count") {
        auto index = build_index({doc_snippet("s1", "alpha beta alpha")}, enc);
        CHECK(tfidf_score("alpha alpha", index.snippets()[0], index.stats()) ==
              tfidf_score("alpha", index.snippets()[0], index.stats()));
    }
    SUBCASE("unseen corpus term contributes 0 when absent from the snippet") {
        auto index = build_index({doc_snippet("s1", "alpha beta")}, enc);
        CHECK(tfidf_score("omega omega", index.snippets()[0], index.stats()) == 0.0);
    }
}

TEST_CASE("entity_match_score is the covered fraction of query entities") {
    KnowledgeGraph g;
    auto rlc = g.add_entity("RLC", "protocol").id;
    auto pdcp = g.add_entity("PDCP", "protocol").id;
    g.freeze();

    auto both = doc_snippet("s1", "covers both", {rlc, pdcp});
    auto one = doc_snippet("s2", "covers one", {rlc});
    auto none = doc_snippet("s3", "covers none", {});

    std::string query = "How do RLC and PDCP interact?";
    CHECK(entity_match_score(query, both, g) == 1.0);
    CHECK(entity_match_score(query, one, g) == 0.5);
    CHECK(entity_match_score(query, none, g) == 0.0);
    CHECK(entity_match_score("nothing known here", both, g) == 0.0);
}

TEST_CASE("entity_match_score stays in [0,1] and a superset link scores 1") {
    Rng rng(41);
    KnowledgeGraph g;
    std::vector<std::string> names{"rlc", "pdcp", "mac", "harq", "bearer"};
    std::vector<std::string> ids;
    for (const auto& n : names) ids.push_back(g.add_entity(n, "t").id);
    g.freeze();

    for (int round = 0; round < 60; ++round) {
        std::string query;
        for (int w = 0; w < 4; ++w) {
            query += (rng.coin() ? names[rng.uniform_int(names.size())]
                                 : "filler" + std::to_string(rng.uniform_int(9))) +
                     " ";
        }
        std::vector<std::string> linked;
        for (const auto& id : ids) {
            if (rng.coin()) linked.push_back(id);
        }
        auto snippet = doc_snippet("s", "body", linked);
        double em = entity_match_score(query, snippet, g);
        CHECK(em >= 0.0);
        CHECK(em <= 1.0);
    }
    // A snippet linked to every entity covers any query's entity set.
    auto superset = doc_snippet("all", "body", ids);
    CHECK(entity_match_score("rlc talks to mac about harq", superset, g) == 1.0);
}

TEST_CASE("hybrid_score combines the parts with the weights") {
    HashedEncoder enc(64);
    auto index = build_index({doc_snippet("s1", "alpha beta"), doc_snippet("s2", "gamma")}, enc);
    auto qvec = enc.encode("alpha");

    SUBCASE("weights (1,0,0) reduce to cosine similarity") {
        ScoringWeights w{1, 0, 0};
        auto scored = hybrid_score("alpha", qvec, index.snippets()[0], index, w);
        CHECK(scored.score == scored.parts.sim);
        CHECK(scored.parts.sim ==
              cosine_sim(qvec, index.vector_of("s1")));
    }
    SUBCASE("weights (0,0,1) with full entity coverage scores 1") {
        KnowledgeGraph g;
        auto id = g.add_entity("alpha", "term").id;
        g.freeze();
        auto snip = doc_snippet("s9", "anything", {id});
        auto small = build_index({snip}, enc);
        ScoringWeights w{0, 0, 1};
        auto scored = hybrid_score("alpha?", enc.encode("alpha?"), snip, small, w, &g);
        CHECK(scored.score == 1.0);
        CHECK(scored.parts.em == 1.0);
    }
    SUBCASE("arithmetic recombination") {
        ScoringWeights w{0.5, 0.3, 0.2};
        ScoreParts parts{0.9, 2.0, 1.0};
        // 0.45 + 0.60 + 0.20 = 1.25
        CHECK(w.sim * parts.sim + w.tfidf * parts.tfidf + w.em * parts.em ==
              doctest::Approx(1.25).epsilon(1e-12));
    }
    SUBCASE("parts always recombine to the score") {
        Rng rng(3);
        KnowledgeGraph g;
        g.add_entity("alpha", "x");
        g.freeze();
        for (int i = 0; i < 20; ++i) {
            ScoringWeights w{rng.uniform_real(0, 2), rng.uniform_real(0, 1),
                             rng.uniform_real(0, 1)};
            auto s = hybrid_score("alpha beta", qvec, index.snippets()[i % 2], index, w, &g);
            CHECK(s.score ==
                  doctest::Approx(w.sim * s.parts.sim + w.tfidf * s.parts.tfidf +
                                  w.em * s.parts.em)
                      .epsilon(1e-9));
        }
    }
    SUBCASE("all-zero weights are rejected") {
        ScoringWeights w{0, 0, 0};
        CHECK_THROWS_WITH_AS(hybrid_score("q", qvec, index.snippets()[0], index, w),
                             doctest::Contains("invalid-argument"), Error);
    }
}

TEST_CASE("retrieve_top_k equals brute-force scoring with stable sort") {
    HashedEncoder enc(64);
    Rng rng(17);
    for (int round = 0; round < 10; ++round) {
        std::vector<KnowledgeSnippet> snippets;
        std::size_t n = 2 + rng.uniform_int(40);
        for (std::size_t i = 0; i < n; ++i) {
            snippets.push_back(doc_snippet("s" + std::to_string(i),
                                           random_text(rng, 3 + rng.uniform_int(10))));
        }
        auto index = build_index(snippets, enc);
        std::string query = random_text(rng, 4);
        ScoringWeights w{1.0, 0.05, 0.0};
        std::size_t k = 1 + rng.uniform_int(n + 3);

        auto got = retrieve_top_k(query, index, enc, nullptr, k, w);

        // Independent path: component scores + stable sort.
        auto qvec = enc.encode(query);
        struct Row {
            std::string id;
            double score;
        };
        std::vector<Row> brute;
        for (const auto& s : index.snippets()) {
            double sim = 0.0;
            auto sv = index.vector_of(s.id);
            if (vecops::squared_norm(qvec.data(), qvec.size()) > 0 &&
                vecops::squared_norm(sv.data(), sv.size()) > 0) {
                sim = cosine_sim(qvec, sv);
            }
            double score = w.sim * sim + w.tfidf * tfidf_score(query, s, index.stats());
            brute.push_back({s.id, score});
        }
        std::stable_sort(brute.begin(), brute.end(), [](const Row& a, const Row& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.id < b.id;
        });
        REQUIRE(got.size() == std::min(k, n));
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].snippet.id == brute[i].id);
            CHECK(got[i].score == brute[i].score);
        }
    }
}

TEST_CASE("retrieve_top_k tie-break and edge cases") {
    HashedEncoder enc(64);
    SUBCASE("identical snippets tie and come back in id order") {
        auto index = build_index(
            {doc_snippet("zz", "same text"), doc_snippet("aa", "same text")}, enc);
        auto got = retrieve_top_k("same text", index, enc, nullptr, 2, {1, 0, 0});
        REQUIRE(got.size() == 2);
        CHECK(got[0].snippet.id == "aa");
        CHECK(got[1].snippet.id == "zz");
        CHECK(got[0].score == got[1].score);
    }
    SUBCASE("k larger than the corpus returns everything") {
        auto index = build_index({doc_snippet("a", "x y"), doc_snippet("b", "y z")}, enc);
        CHECK(retrieve_top_k("y", index, enc, nullptr, 10, {1, 0, 0}).size() == 2);
    }
    SUBCASE("empty index errors") {
        VectorIndex empty = build_index({}, enc);
        CHECK_THROWS_WITH_AS(retrieve_top_k("q", empty, enc, nullptr, 3, {1, 0, 0}),
                             doctest::Contains("empty-index"), Error);
    }
}

TEST_CASE("positive scaling of the sim weight never changes the order") {
    HashedEncoder enc(64);
    Rng rng(29);
    std::vector<KnowledgeSnippet> snippets;
    for (int i = 0; i < 25; ++i) {
        snippets.push_back(doc_snippet("s" + std::to_string(i), random_text(rng, 8)));
    }
    auto index = build_index(snippets, enc);
    auto baseline = retrieve_top_k("carrier uplink", index, enc, nullptr, 25, {1, 0, 0});
    for (double alpha : {0.001, 0.5, 3.0, 1000.0}) {
        auto scaled = retrieve_top_k("carrier uplink", index, enc, nullptr, 25,
                                     {alpha, 0, 0});
        REQUIRE(scaled.size() == baseline.size());
        for (std::size_t i = 0; i < scaled.size(); ++i) {
            CHECK(scaled[i].snippet.id == baseline[i].snippet.id);
        }
    }
}

TEST_CASE("linearize_triples renders sorted sentences and links all entities") {
    KnowledgeGraph g;
    auto rlc = g.add_entity("RLC", "protocol").id;
    auto arq = g.add_entity("ARQ", "mechanism").id;
    auto pdcp = g.add_entity("PDCP", "protocol").id;
    auto uses = g.add_relation("uses");
    auto below = g.add_relation("sits below");
    g.add_triple(rlc, uses, Tail::entity(arq));
    g.add_triple(rlc, below, Tail::entity(pdcp));
    g.freeze();

    SUBCASE("single triple") {
        auto s = linearize_triples({g.triples()[0]}, g, "kg:test");
        CHECK(s.text == "RLC uses ARQ.");
        CHECK(s.source == SnippetSource::kg_triples);
        CHECK(s.source_triples.size() == 1);
        CHECK(s.linked_entities == std::vector<std::string>{std::min(rlc, arq),
                                                            std::max(rlc, arq)});
    }
    SUBCASE("two triples render two sentences in sorted order") {
        auto s = linearize_triples(g.triples(), g, "kg:test");
        CHECK(s.text == "RLC sits below PDCP. RLC uses ARQ.");
        CHECK(s.linked_entities.size() == 3);
    }
    SUBCASE("entity names parsed back from the text equal the linked names") {
        auto s = linearize_triples(g.triples(), g, "kg:test");
        for (const auto& id : s.linked_entities) {
            CHECK(s.text.find(g.entity(id).name) != std::string::npos);
        }
    }
    SUBCASE("literal tail uses the literal value") {
        KnowledgeGraph h;
        auto a = h.add_entity("Timer", "parameter").id;
        auto r = h.add_relation("defaults to");
        h.add_triple(a, r, Tail::of(Literal{"100ms", LiteralType::text}));
        auto s = linearize_triples(h.triples(), h, "kg:x");
        CHECK(s.text == "Timer defaults to 100ms.");
        CHECK(s.linked_entities == std::vector<std::string>{a});
    }
    SUBCASE("empty input and dangling references error") {
        CHECK_THROWS_WITH_AS(linearize_triples({}, g, "kg:x"),
                             doctest::Contains("invalid-argument"), Error);
        Triple dangling{"e999", uses, Tail::entity(arq)};
        CHECK_THROWS_WITH_AS(linearize_triples({dangling}, g, "kg:x"),
                             doctest::Contains("unknown-reference"), Error);
    }
}

TEST_CASE("retrieve_for_query merges kg snippets with document snippets") {
    KnowledgeGraph g;
    auto rlc = g.add_entity("RLC", "protocol").id;
    auto arq = g.add_entity("ARQ", "mechanism").id;
    auto uses = g.add_relation("uses");
    g.add_triple(rlc, uses, Tail::entity(arq));
    g.freeze();

    HashedEncoder enc(64);
    auto index = build_index({doc_snippet("d0", "something about channels"),
                              doc_snippet("d1", "rlc configuration guide", {rlc})},
                             enc);

    SUBCASE("query naming an entity surfaces the linearized neighborhood") {
        auto got = retrieve_for_query("what does RLC use?", g, index, enc, 10, {1, 0.05, 0.5}, 1);
        bool found = false;
        for (const auto& s : got) {
            if (s.snippet.id == "kg:" + rlc) {
                found = true;
                CHECK(s.snippet.text == "RLC uses ARQ.");
                CHECK(s.snippet.source == SnippetSource::kg_triples);
            }
        }
        CHECK(found);
    }
    SUBCASE("query naming no entity degenerates to plain retrieval") {
        auto plain = retrieve_top_k("channels", index, enc, &g, 2, {1, 0.05, 0.5});
        auto fused = retrieve_for_query("channels", g, index, enc, 2, {1, 0.05, 0.5}, 3);
        REQUIRE(plain.size() == fused.size());
        for (std::size_t i = 0; i < plain.size(); ++i) {
            CHECK(plain[i].snippet.id == fused[i].snippet.id);
            CHECK(plain[i].score == fused[i].score);
        }
    }
    SUBCASE("k=1 returns the single best snippet") {
        auto got = retrieve_for_query("RLC", g, index, enc, 1, {1, 0.05, 0.5}, 1);
        CHECK(got.size() == 1);
    }
    SUBCASE("hops=0 seeds nothing") {
        auto got = retrieve_for_query("RLC", g, index, enc, 10, {1, 0, 0}, 0);
        for (const auto& s : got) CHECK(s.snippet.source == SnippetSource::document_chunk);
    }
    SUBCASE("empty index with no entity match errors like plain retrieval") {
        VectorIndex empty = build_index({}, enc);
        CHECK_THROWS_WITH_AS(retrieve_for_query("channels", g, empty, enc, 2, {1, 0, 0}, 1),
                             doctest::Contains("empty-index"), Error);
        // With an entity match the kg snippet alone is retrievable.
        auto got = retrieve_for_query("RLC", g, empty, enc, 2, {1, 0, 0}, 1);
        REQUIRE(got.size() == 1);
        CHECK(got[0].snippet.id == "kg:" + rlc);
    }
}

TEST_CASE("retrieval is deterministic") {
    HashedEncoder enc(128);
    Rng rng(31);
    std::vector<KnowledgeSnippet> snippets;
    for (int i = 0; i < 30; ++i) {
        snippets.push_back(doc_snippet("s" + std::to_string(i), random_text(rng, 12)));
    }
    auto index = build_index(snippets, enc);
    KnowledgeGraph g;
    g.add_entity("carrier", "term");
    g.freeze();
    auto a = retrieve_for_query("carrier latency", g, index, enc, 7, {1, 0.05, 0.5}, 1);
    auto b = retrieve_for_query("carrier latency", g, index, enc, 7, {1, 0.05, 0.5}, 1);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].snippet.id == b[i].snippet.id);
        CHECK(a[i].score == b[i].score);
    }
}
