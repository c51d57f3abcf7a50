#include "kgrag/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "kgrag/errors.hpp"
#include "kgrag/text.hpp"
#include "kgrag/vecops.hpp"

namespace kgrag {

HashedEncoder::HashedEncoder(std::size_t dim) : dim_(dim) {
    if (dim == 0) raise("invalid-argument", "encoder dim must be positive");
}

std::string HashedEncoder::id() const { return "hashed-bow-" + std::to_string(dim_); }

std::vector<double> HashedEncoder::encode(std::string_view t) const {
    if (t.empty()) raise("empty-text", "cannot encode empty text");
    std::vector<double> v(dim_, 0.0);
    for (const auto& token : text::tokenize(t)) {
        v[text::fnv1a64(token) % dim_] += 1.0;
    }
    double sq = vecops::squared_norm(v.data(), dim_);
    if (sq > 0.0) vecops::scale(v.data(), 1.0 / std::sqrt(sq), dim_);
    return v;
}

const char* snippet_source_name(SnippetSource s) {
    return s == SnippetSource::document_chunk ? "document_chunk" : "kg_triples";
}

SnippetSource snippet_source_from_name(std::string_view name) {
    if (name == "document_chunk") return SnippetSource::document_chunk;
    if (name == "kg_triples") return SnippetSource::kg_triples;
    raise("parse-error", "unknown snippet source: " + std::string(name));
}

VectorIndex::VectorIndex(std::string encoder_id, std::size_t dim)
    : encoder_id_(std::move(encoder_id)), dim_(dim) {}

std::span<const double> VectorIndex::vector_of(const std::string& snippet_id) const {
    auto it = row_by_id_.find(snippet_id);
    if (it == row_by_id_.end()) raise("unknown-id", "snippet not indexed: " + snippet_id);
    return {vectors_.data() + it->second * dim_, dim_};
}

void VectorIndex::add(KnowledgeSnippet snippet, std::vector<double> vector) {
    if (snippet.id.empty()) raise("duplicate-id", "snippet id is empty");
    if (vector.size() != dim_) raise("dimension-mismatch", "snippet vector has wrong dimension");
    if (snippet.text.empty()) raise("empty-text", "snippet text is empty: " + snippet.id);
    bool has_triples = !snippet.source_triples.empty();
    if (has_triples != (snippet.source == SnippetSource::kg_triples)) {
        raise("invariant-violation",
              "source_triples must be non-empty exactly for kg_triples snippets: " + snippet.id);
    }
    auto [it, inserted] = row_by_id_.emplace(snippet.id, snippets_.size());
    (void)it;
    if (!inserted) raise("duplicate-id", "duplicate snippet id: " + snippet.id);
    vectors_.insert(vectors_.end(), vector.begin(), vector.end());
    snippets_.push_back(std::move(snippet));
}

VectorIndex build_index(const std::vector<KnowledgeSnippet>& snippets, const Encoder& encoder) {
    VectorIndex index(encoder.id(), encoder.dim());
    CorpusStats stats;
    for (const auto& snippet : snippets) {
        index.add(snippet, encoder.encode(snippet.text));
        std::set<std::string> distinct;
        for (const auto& token : text::tokenize(snippet.text)) distinct.insert(token);
        for (const auto& token : distinct) ++stats.df[token];
        ++stats.snippet_count;
    }
    index.set_stats(std::move(stats));
    return index;
}

double cosine_sim(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        raise("dimension-mismatch", "cosine_sim over vectors of different dimension");
    }
    double nu = vecops::squared_norm(u.data(), u.size());
    double nv = vecops::squared_norm(v.data(), v.size());
    if (nu == 0.0 || nv == 0.0) raise("zero-vector", "cosine_sim over a zero vector");
    return vecops::dot(u.data(), v.data(), u.size()) / (std::sqrt(nu) * std::sqrt(nv));
}

double tfidf_score(const std::string& query, const KnowledgeSnippet& snippet,
                   const CorpusStats& stats) {
    std::map<std::string, std::size_t> snippet_tf;
    for (const auto& token : text::tokenize(snippet.text)) ++snippet_tf[token];

    std::set<std::string> query_terms;
    for (const auto& token : text::tokenize(query)) query_terms.insert(token);

    double n = static_cast<double>(stats.snippet_count);
    double score = 0.0;
    for (const auto& term : query_terms) {
        auto tf_it = snippet_tf.find(term);
        if (tf_it == snippet_tf.end()) continue;
        auto df_it = stats.df.find(term);
        double df = df_it == stats.df.end() ? 0.0 : static_cast<double>(df_it->second);
        double idf = std::log((1.0 + n) / (1.0 + df)) + 1.0;
        score += static_cast<double>(tf_it->second) * idf;
    }
    return score;
}

double entity_match_score(const std::string& query, const KnowledgeSnippet& snippet,
                          const KnowledgeGraph& graph) {
    std::vector<std::string> query_entities = graph.match_entities(query);
    if (query_entities.empty()) return 0.0;
    std::size_t covered = 0;
    for (const auto& id : query_entities) {
        if (std::binary_search(snippet.linked_entities.begin(), snippet.linked_entities.end(),
                               id)) {
            ++covered;
        }
    }
    return static_cast<double>(covered) / static_cast<double>(query_entities.size());
}

namespace {

double lenient_cosine(std::span<const double> u, std::span<const double> v) {
    double nu = vecops::squared_norm(u.data(), u.size());
    double nv = vecops::squared_norm(v.data(), v.size());
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return vecops::dot(u.data(), v.data(), u.size()) / (std::sqrt(nu) * std::sqrt(nv));
}

ScoredSnippet score_one(const std::string& query, std::span<const double> qvec,
                        const KnowledgeSnippet& snippet, std::span<const double> svec,
                        const CorpusStats& stats, const ScoringWeights& weights,
                        const KnowledgeGraph* graph) {
    if (qvec.size() != svec.size()) {
        raise("dimension-mismatch", "query and snippet vectors differ in dimension");
    }
    ScoredSnippet out;
    out.snippet = snippet;
    out.parts.sim = lenient_cosine(qvec, svec);
    out.parts.tfidf = tfidf_score(query, snippet, stats);
    out.parts.em = (graph != nullptr) ? entity_match_score(query, snippet, *graph) : 0.0;
    out.score =
        weights.sim * out.parts.sim + weights.tfidf * out.parts.tfidf + weights.em * out.parts.em;
    return out;
}

void validate_weights(const ScoringWeights& w) {
    if (w.sim < 0 || w.tfidf < 0 || w.em < 0) {
        raise("invalid-argument", "scoring weights must be non-negative");
    }
    if (w.sim == 0 && w.tfidf == 0 && w.em == 0) {
        raise("invalid-argument", "at least one scoring weight must be positive");
    }
}

}  // namespace

ScoredSnippet hybrid_score(const std::string& query, std::span<const double> qvec,
                           const KnowledgeSnippet& snippet, const VectorIndex& index,
                           const ScoringWeights& weights, const KnowledgeGraph* graph) {
    validate_weights(weights);
    return score_one(query, qvec, snippet, index.vector_of(snippet.id), index.stats(), weights,
                     graph);
}

namespace detail {

std::vector<ScoredSnippet> score_candidates(
    const std::string& query, const std::vector<const KnowledgeSnippet*>& candidates,
    const std::vector<std::span<const double>>& vectors, const VectorIndex& stats_index,
    const Encoder& encoder, const KnowledgeGraph* graph, const ScoringWeights& weights) {
    validate_weights(weights);
    std::vector<ScoredSnippet> scored;
    if (candidates.empty()) return scored;
    std::vector<double> qvec = encoder.encode(query);
    scored.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        scored.push_back(score_one(query, qvec, *candidates[i], vectors[i], stats_index.stats(),
                                   weights, graph));
    }
    return scored;
}

void sort_and_truncate(std::vector<ScoredSnippet>& scored, std::size_t k) {
    std::sort(scored.begin(), scored.end(), [](const ScoredSnippet& a, const ScoredSnippet& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.snippet.id < b.snippet.id;
    });
    if (scored.size() > k) scored.resize(k);
}

std::vector<KnowledgeSnippet> kg_snippets_for_query(const std::string& query,
                                                    const KnowledgeGraph& graph,
                                                    std::size_t hops) {
    std::vector<KnowledgeSnippet> out;
    for (const auto& seed : graph.match_entities(query)) {
        KnowledgeGraph sub = graph.subgraph({seed}, hops);
        if (sub.triple_count() == 0) continue;
        out.push_back(linearize_triples(sub.triples(), graph, "kg:" + seed));
    }
    return out;
}

}  // namespace detail

std::vector<ScoredSnippet> retrieve_top_k(const std::string& query, const VectorIndex& index,
                                          const Encoder& encoder, const KnowledgeGraph* graph,
                                          std::size_t k, const ScoringWeights& weights) {
    if (index.empty()) raise("empty-index", "retrieve_top_k over an empty index");
    if (k == 0) raise("invalid-argument", "k must be positive");

    std::vector<const KnowledgeSnippet*> candidates;
    std::vector<std::span<const double>> vectors;
    candidates.reserve(index.size());
    for (const auto& snippet : index.snippets()) {
        candidates.push_back(&snippet);
        vectors.push_back(index.vector_of(snippet.id));
    }
    auto scored = detail::score_candidates(query, candidates, vectors, index, encoder, graph,
                                           weights);
    detail::sort_and_truncate(scored, k);
    return scored;
}

KnowledgeSnippet linearize_triples(const std::vector<Triple>& triples,
                                   const KnowledgeGraph& graph, const std::string& snippet_id) {
    if (triples.empty()) raise("invalid-argument", "cannot linearize zero triples");

    struct Rendered {
        std::string sentence;
        std::string sort_key;
    };
    std::vector<Rendered> rendered;
    std::set<std::string> linked;
    for (const Triple& t : triples) {
        if (!graph.has_entity(t.head) || !graph.has_relation(t.relation) ||
            (t.tail.is_entity() && !graph.has_entity(t.tail.entity_id))) {
            raise("unknown-reference", "triple references ids missing from the graph");
        }
        const std::string& head_name = graph.entity(t.head).name;
        const std::string& label = graph.relation(t.relation).label;
        std::string tail_str =
            t.tail.is_entity() ? graph.entity(t.tail.entity_id).name : t.tail.literal.value;
        linked.insert(t.head);
        if (t.tail.is_entity()) linked.insert(t.tail.entity_id);
        rendered.push_back({head_name + " " + label + " " + tail_str + ".",
                            head_name + "\x1f" + label + "\x1f" + t.tail.sort_key()});
    }
    std::sort(rendered.begin(), rendered.end(),
              [](const Rendered& a, const Rendered& b) { return a.sort_key < b.sort_key; });

    KnowledgeSnippet snippet;
    snippet.id = snippet_id;
    snippet.source = SnippetSource::kg_triples;
    snippet.source_triples = triples;
    snippet.linked_entities.assign(linked.begin(), linked.end());
    for (std::size_t i = 0; i < rendered.size(); ++i) {
        if (i > 0) snippet.text += " ";
        snippet.text += rendered[i].sentence;
    }
    return snippet;
}

std::vector<ScoredSnippet> retrieve_for_query(const std::string& query,
                                              const KnowledgeGraph& graph,
                                              const VectorIndex& index, const Encoder& encoder,
                                              std::size_t k, const ScoringWeights& weights,
                                              std::size_t hops) {
    if (k == 0) raise("invalid-argument", "k must be positive");

    std::vector<KnowledgeSnippet> kg_snippets = detail::kg_snippets_for_query(query, graph, hops);
    if (index.empty() && kg_snippets.empty()) {
        raise("empty-index", "no document snippets and no matching graph neighborhoods");
    }

    std::vector<const KnowledgeSnippet*> candidates;
    std::vector<std::span<const double>> vectors;
    std::vector<std::vector<double>> kg_vectors(kg_snippets.size());
    for (const auto& snippet : index.snippets()) {
        candidates.push_back(&snippet);
        vectors.push_back(index.vector_of(snippet.id));
    }
    for (std::size_t i = 0; i < kg_snippets.size(); ++i) {
        kg_vectors[i] = encoder.encode(kg_snippets[i].text);
        candidates.push_back(&kg_snippets[i]);
        vectors.push_back(kg_vectors[i]);
    }

    auto scored =
        detail::score_candidates(query, candidates, vectors, index, encoder, &graph, weights);
    detail::sort_and_truncate(scored, k);
    return scored;
}

}  // namespace kgrag
