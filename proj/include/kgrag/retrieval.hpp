#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgrag/kg.hpp"

namespace kgrag {

/// Deterministic text -> fixed-dimension vector. Same text, same vector.
class Encoder {
public:
    virtual ~Encoder() = default;
    virtual std::size_t dim() const = 0;
    virtual std::string id() const = 0;
    /// Throws Error("empty-text") on empty input. Texts with no tokens
    /// (punctuation only) encode to the zero vector.
    virtual std::vector<double> encode(std::string_view text) const = 0;
};

/// Hashed bag-of-terms with TF weighting, L2-normalized. Runs fully
/// offline; the hash is FNV-1a, not std::hash, so vectors are identical
/// across platforms.
class HashedEncoder : public Encoder {
public:
    explicit HashedEncoder(std::size_t dim = 256);
    std::size_t dim() const override { return dim_; }
    std::string id() const override;
    std::vector<double> encode(std::string_view text) const override;

private:
    std::size_t dim_;
};

enum class SnippetSource { document_chunk, kg_triples };

const char* snippet_source_name(SnippetSource s);
SnippetSource snippet_source_from_name(std::string_view name);

struct KnowledgeSnippet {
    std::string id;
    std::string text;
    SnippetSource source = SnippetSource::document_chunk;
    std::vector<Triple> source_triples;        // non-empty iff source == kg_triples
    std::vector<std::string> linked_entities;  // sorted unique entity ids
};

struct CorpusStats {
    std::map<std::string, std::size_t> df;  // documents containing each term
    std::size_t snippet_count = 0;
};

/// Immutable snippet index: one vector per snippet plus the corpus
/// statistics TF-IDF needs. Safe for concurrent queries once built.
class VectorIndex {
public:
    VectorIndex() = default;
    VectorIndex(std::string encoder_id, std::size_t dim);

    const std::string& encoder_id() const { return encoder_id_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return snippets_.size(); }
    bool empty() const { return snippets_.empty(); }

    const std::vector<KnowledgeSnippet>& snippets() const { return snippets_; }
    std::span<const double> vector_of(const std::string& snippet_id) const;
    const CorpusStats& stats() const { return stats_; }

    /// Used by build_index and the snapshot loader; duplicate ids throw.
    void add(KnowledgeSnippet snippet, std::vector<double> vector);
    void set_stats(CorpusStats stats) { stats_ = std::move(stats); }

private:
    std::string encoder_id_;
    std::size_t dim_ = 0;
    std::vector<KnowledgeSnippet> snippets_;
    std::map<std::string, std::size_t> row_by_id_;
    std::vector<double> vectors_;
    CorpusStats stats_;
};

/// Encode every snippet and count per-term document frequencies.
VectorIndex build_index(const std::vector<KnowledgeSnippet>& snippets, const Encoder& encoder);

struct ScoringWeights {
    double sim = 1.0;      // alpha
    double tfidf = 0.05;   // beta
    double em = 0.5;       // entity-match weight
};

struct ScoreParts {
    double sim = 0.0;
    double tfidf = 0.0;
    double em = 0.0;
};

struct ScoredSnippet {
    KnowledgeSnippet snippet;
    double score = 0.0;
    ScoreParts parts;
};

/// (u . v) / (|u| |v|). Throws on dimension mismatch or zero vectors.
double cosine_sim(std::span<const double> u, std::span<const double> v);

/// Sum over distinct query terms of tf(term, snippet) * idf(term), with
/// tf the raw count and idf = ln((1+N)/(1+df)) + 1.
double tfidf_score(const std::string& query, const KnowledgeSnippet& snippet,
                   const CorpusStats& stats);

/// Fraction of the query's graph entities covered by the snippet's linked
/// entities; 0 when the query names none.
double entity_match_score(const std::string& query, const KnowledgeSnippet& snippet,
                          const KnowledgeGraph& graph);

/// s(q, k) = alpha*sim + beta*tfidf + em_weight*em. Pass graph=nullptr to
/// skip entity matching (the em part is then 0). Zero-norm vectors score
/// sim = 0 rather than erroring.
ScoredSnippet hybrid_score(const std::string& query, std::span<const double> qvec,
                           const KnowledgeSnippet& snippet, const VectorIndex& index,
                           const ScoringWeights& weights, const KnowledgeGraph* graph = nullptr);

/// Exhaustively score every indexed snippet and return the top
/// min(k, index size), sorted by score descending with snippet-id
/// tie-break.
std::vector<ScoredSnippet> retrieve_top_k(const std::string& query, const VectorIndex& index,
                                          const Encoder& encoder, const KnowledgeGraph* graph,
                                          std::size_t k, const ScoringWeights& weights);

/// Render triples as one "<head> <relation> <tail>." sentence each, in a
/// deterministic order. linked_entities covers every entity endpoint.
KnowledgeSnippet linearize_triples(const std::vector<Triple>& triples,
                                   const KnowledgeGraph& graph, const std::string& snippet_id);

/// KG-RAG retrieval: entities named in the query seed hop-limited
/// subgraphs whose linearizations join the document snippets as candidates,
/// then everything is ranked together.
std::vector<ScoredSnippet> retrieve_for_query(const std::string& query,
                                              const KnowledgeGraph& graph,
                                              const VectorIndex& index, const Encoder& encoder,
                                              std::size_t k, const ScoringWeights& weights,
                                              std::size_t hops);

namespace detail {
/// Shared scorer; returns every candidate unsorted. Lenient: an empty
/// candidate set yields an empty result (the public entry points raise).
std::vector<ScoredSnippet> score_candidates(
    const std::string& query, const std::vector<const KnowledgeSnippet*>& candidates,
    const std::vector<std::span<const double>>& vectors, const VectorIndex& stats_index,
    const Encoder& encoder, const KnowledgeGraph* graph, const ScoringWeights& weights);

void sort_and_truncate(std::vector<ScoredSnippet>& scored, std::size_t k);

/// KG snippets for the query's seed entities (kg:<entity id> per seed).
std::vector<KnowledgeSnippet> kg_snippets_for_query(const std::string& query,
                                                    const KnowledgeGraph& graph,
                                                    std::size_t hops);
}  // namespace detail

}  // namespace kgrag
