#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "kgrag/errors.hpp"
#include "kgrag/kg.hpp"
#include "kgrag/rng.hpp"

using namespace kgrag;

namespace {

// Small graph: A -uses-> B, C -feeds-> A, A -reports-> "5" (literal).
KnowledgeGraph sample_graph(std::string* a_out = nullptr, std::string* b_out = nullptr,
                            std::string* c_out = nullptr) {
    KnowledgeGraph g;
    auto a = g.add_entity("A", "component").id;
    auto b = g.add_entity("B", "component").id;
    auto c = g.add_entity("C", "component").id;
    auto uses = g.add_relation("uses");
    auto feeds = g.add_relation("feeds");
    auto reports = g.add_relation("reports");
    g.add_triple(a, uses, Tail::entity(b));
    g.add_triple(c, feeds, Tail::entity(a));
    g.add_triple(a, reports, Tail::of(Literal{"5", LiteralType::number}));
    if (a_out) *a_out = a;
    if (b_out) *b_out = b;
    if (c_out) *c_out = c;
    return g;
}

}  // namespace

TEST_CASE("add_entity canonicalizes on (normalized name, type)") {
    KnowledgeGraph g;
    auto first = g.add_entity("3GPP", "organization");
    CHECK(first.inserted);
    CHECK(g.entity_count() == 1);

    auto dup = g.add_entity("3gpp ", "organization");
    CHECK_FALSE(dup.inserted);
    CHECK(dup.id == first.id);
    CHECK(g.entity_count() == 1);

    // Same name, different type: distinct entity. Brute-force check over the
    // entity set that the dedup key really is the pair.
    auto other = g.add_entity("3GPP", "protocol");
    CHECK(other.inserted);
    CHECK(g.entity_count() == 2);
    std::set<std::pair<std::string, std::string>> keys;
    for (const auto& id : g.entity_ids()) {
        const Entity& e = g.entity(id);
        keys.insert({e.name, e.entity_type});
    }
    CHECK(keys.size() == g.entity_count());
}

TEST_CASE("add_entity rejects all-whitespace names and merges metadata") {
    KnowledgeGraph g;
    CHECK_THROWS_WITH_AS(g.add_entity("   \t", "x"), doctest::Contains("empty-name"), Error);
    g.add_entity("RLC", "protocol", {{"context", "first"}});
    auto merged = g.add_entity("rlc", "protocol", {{"context", "second"}, {"extra", "yes"}});
    CHECK_FALSE(merged.inserted);
    const Entity& e = g.entity(merged.id);
    CHECK(e.metadata.at("context") == "first");  // first value wins
    CHECK(e.metadata.at("extra") == "yes");
    CHECK(e.name == "RLC");  // first-seen surface is canonical
}

TEST_CASE("add_triple has set semantics and direction matters") {
    KnowledgeGraph g;
    auto a = g.add_entity("A", "t").id;
    auto b = g.add_entity("B", "t").id;
    auto r = g.add_relation("uses");

    CHECK(g.add_triple(a, r, Tail::entity(b)));
    CHECK(g.triple_count() == 1);
    CHECK_FALSE(g.add_triple(a, r, Tail::entity(b)));
    CHECK(g.triple_count() == 1);
    CHECK(g.add_triple(b, r, Tail::entity(a)));
    CHECK(g.triple_count() == 2);

    // Enumerate the stored set: both directions present exactly once.
    std::set<std::pair<std::string, std::string>> pairs;
    for (const Triple& t : g.triples()) pairs.insert({t.head, t.tail.entity_id});
    CHECK(pairs == std::set<std::pair<std::string, std::string>>{{a, b}, {b, a}});

    CHECK_THROWS_WITH_AS(g.add_triple("e999", r, Tail::entity(b)),
                         doctest::Contains("unknown-id"), Error);
    CHECK_THROWS_WITH_AS(g.add_triple(a, "r999", Tail::entity(b)),
                         doctest::Contains("unknown-id"), Error);
    CHECK_THROWS_WITH_AS(g.add_triple(a, r, Tail::entity("e999")),
                         doctest::Contains("unknown-id"), Error);
}

TEST_CASE("set semantics hold for any insertion sequence") {
    Rng rng(99);
    KnowledgeGraph g;
    std::vector<std::string> ids;
    for (int i = 0; i < 6; ++i) ids.push_back(g.add_entity("e" + std::to_string(i), "t").id);
    auto r1 = g.add_relation("r1");
    auto r2 = g.add_relation("r2");

    std::set<std::tuple<std::string, std::string, std::string>> expected;
    for (int i = 0; i < 200; ++i) {
        const auto& h = ids[rng.uniform_int(ids.size())];
        const auto& t = ids[rng.uniform_int(ids.size())];
        const auto& r = rng.coin() ? r1 : r2;
        bool inserted = g.add_triple(h, r, Tail::entity(t));
        CHECK(inserted == expected.insert({h, r, t}).second);
    }
    CHECK(g.triple_count() == expected.size());
}

TEST_CASE("neighbors filters by direction with deterministic order") {
    std::string a, b, c;
    KnowledgeGraph g = sample_graph(&a, &b, &c);

    auto out = g.neighbors(a, KnowledgeGraph::Direction::out);
    REQUIRE(out.size() == 2);  // uses->B and reports->"5"
    CHECK(out[0].relation == *g.relation_id_for("reports"));
    CHECK(out[1].tail.entity_id == b);

    auto in = g.neighbors(a, KnowledgeGraph::Direction::in);
    REQUIRE(in.size() == 1);
    CHECK(in[0].head == c);

    CHECK(g.neighbors(b, KnowledgeGraph::Direction::in).size() == 1);
    CHECK(g.neighbors(b, KnowledgeGraph::Direction::out).empty());
    CHECK_THROWS_WITH_AS(g.neighbors("nope", KnowledgeGraph::Direction::both),
                         doctest::Contains("unknown-id"), Error);
}

TEST_CASE("neighbors(both) equals union of in and out for every entity") {
    std::string a;
    KnowledgeGraph g = sample_graph(&a);
    // Add a self-loop so union vs sum is distinguishable.
    auto loop = g.add_relation("loops");
    g.add_triple(a, loop, Tail::entity(a));

    auto key = [](const Triple& t) {
        return std::make_tuple(t.head, t.relation, t.tail.sort_key());
    };
    for (const auto& id : g.entity_ids()) {
        std::set<std::tuple<std::string, std::string, std::string>> expected;
        for (const Triple& t : g.neighbors(id, KnowledgeGraph::Direction::in)) {
            expected.insert(key(t));
        }
        for (const Triple& t : g.neighbors(id, KnowledgeGraph::Direction::out)) {
            expected.insert(key(t));
        }
        auto both = g.neighbors(id, KnowledgeGraph::Direction::both);
        std::set<std::tuple<std::string, std::string, std::string>> got;
        for (const Triple& t : both) got.insert(key(t));
        CHECK(got == expected);
        CHECK(both.size() == got.size());  // no duplicates from the union
    }
}

TEST_CASE("index coherence: adjacency equals a full rebuild from the triple set") {
    std::string a;
    KnowledgeGraph g = sample_graph(&a);
    for (const auto& id : g.entity_ids()) {
        std::vector<Triple> expected_out;
        for (const Triple& t : g.triples()) {
            if (t.head == id) expected_out.push_back(t);
        }
        auto got = g.neighbors(id, KnowledgeGraph::Direction::out);
        CHECK(got.size() == expected_out.size());
        for (const Triple& t : expected_out) {
            CHECK(std::find(got.begin(), got.end(), t) != got.end());
        }
    }
}

TEST_CASE("subgraph expands breadth-first over both directions") {
    KnowledgeGraph g;
    auto a = g.add_entity("A", "t").id;
    auto b = g.add_entity("B", "t").id;
    auto c = g.add_entity("C", "t").id;
    auto r = g.add_relation("r");
    g.add_triple(a, r, Tail::entity(b));
    g.add_triple(b, r, Tail::entity(c));

    SUBCASE("hops=0 keeps only seeds") {
        auto sub = g.subgraph({a}, 0);
        CHECK(sub.entity_count() == 1);
        CHECK(sub.triple_count() == 0);
    }
    SUBCASE("hops=1 on a chain keeps only the incident edge") {
        auto sub = g.subgraph({a}, 1);
        CHECK(sub.triple_count() == 1);
        CHECK(sub.triples()[0].head == a);
        CHECK(sub.entity_count() == 2);
    }
    SUBCASE("hops beyond the diameter yields the whole component") {
        auto sub = g.subgraph({a}, 10);
        // Transitive closure oracle: brute-force reachability.
        CHECK(sub.triple_count() == g.triple_count());
        CHECK(sub.entity_count() == g.entity_count());
    }
    SUBCASE("unknown seed") {
        CHECK_THROWS_WITH_AS(g.subgraph({"e999"}, 1), doctest::Contains("unknown-id"), Error);
    }
}

TEST_CASE("subgraph at large hops equals the transitive-closure oracle") {
    Rng rng(17);
    for (int round = 0; round < 10; ++round) {
        KnowledgeGraph g;
        std::vector<std::string> ids;
        std::size_t n = 4 + rng.uniform_int(10);
        for (std::size_t i = 0; i < n; ++i) {
            ids.push_back(g.add_entity("n" + std::to_string(i), "t").id);
        }
        auto r = g.add_relation("r");
        for (std::size_t i = 0; i < n; ++i) {
            g.add_triple(ids[rng.uniform_int(n)], r, Tail::entity(ids[rng.uniform_int(n)]));
        }

        // Undirected reachability by brute-force fixed point.
        std::set<std::string> reach{ids[0]};
        for (;;) {
            std::size_t before = reach.size();
            for (const Triple& t : g.triples()) {
                if (reach.count(t.head) || reach.count(t.tail.entity_id)) {
                    reach.insert(t.head);
                    reach.insert(t.tail.entity_id);
                }
            }
            if (reach.size() == before) break;
        }
        std::set<std::tuple<std::string, std::string, std::string>> expected_triples;
        for (const Triple& t : g.triples()) {
            if (reach.count(t.head)) {
                expected_triples.insert({t.head, t.relation, t.tail.sort_key()});
            }
        }

        auto sub = g.subgraph({ids[0]}, n + 5);  // beyond any possible diameter
        auto sub_ids = sub.entity_ids();
        std::set<std::string> got_entities(sub_ids.begin(), sub_ids.end());
        CHECK(got_entities == reach);
        std::set<std::tuple<std::string, std::string, std::string>> got_triples;
        for (const Triple& t : sub.triples()) {
            got_triples.insert({t.head, t.relation, t.tail.sort_key()});
        }
        CHECK(got_triples == expected_triples);
    }
}

TEST_CASE("subgraph is monotone in hops") {
    Rng rng(5);
    KnowledgeGraph g;
    std::vector<std::string> ids;
    for (int i = 0; i < 10; ++i) ids.push_back(g.add_entity("n" + std::to_string(i), "t").id);
    auto r = g.add_relation("r");
    for (int i = 0; i < 25; ++i) {
        g.add_triple(ids[rng.uniform_int(ids.size())], r,
                     Tail::entity(ids[rng.uniform_int(ids.size())]));
    }
    auto key = [](const Triple& t) {
        return std::make_tuple(t.head, t.relation, t.tail.sort_key());
    };
    std::set<std::tuple<std::string, std::string, std::string>> prev;
    for (std::size_t hops = 0; hops <= 4; ++hops) {
        auto sub = g.subgraph({ids[0]}, hops);
        std::set<std::tuple<std::string, std::string, std::string>> cur;
        for (const Triple& t : sub.triples()) cur.insert(key(t));
        CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
        prev = std::move(cur);
    }
}

TEST_CASE("freeze makes the graph immutable") {
    KnowledgeGraph g;
    g.add_entity("A", "t");
    g.freeze();
    CHECK_THROWS_WITH_AS(g.add_entity("B", "t"), doctest::Contains("graph-frozen"), Error);
    CHECK_THROWS_WITH_AS(g.add_relation("r"), doctest::Contains("graph-frozen"), Error);
}

TEST_CASE("match_entities prefers the longest canonical name") {
    KnowledgeGraph g;
    auto latency = g.add_entity("latency", "metric").id;
    auto handover = g.add_entity("handover latency", "metric").id;
    auto rlc = g.add_entity("RLC", "protocol").id;
    g.freeze();

    auto hits = g.match_entities("the Handover  Latency of RLC");
    CHECK(hits == std::vector<std::string>{std::min(handover, rlc), std::max(handover, rlc)});
    // Bare "latency" still matches on its own.
    CHECK(g.match_entities("pure latency numbers") == std::vector<std::string>{latency});
    CHECK(g.match_entities("nothing relevant").empty());
}
