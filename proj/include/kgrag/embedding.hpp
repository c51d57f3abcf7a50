#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kgrag/kg.hpp"
#include "kgrag/rng.hpp"

namespace kgrag {

enum class Corruption { tail_only, head_or_tail };

struct TrainConfig {
    std::size_t dim = 32;
    double margin = 1.0;
    double learning_rate = 0.01;
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    std::size_t negatives_per_positive = 1;
    Corruption corruption = Corruption::head_or_tail;
    std::uint64_t seed = 42;
};

struct TrainStats {
    std::vector<double> epoch_mean_loss;
    double final_loss = 0.0;
    std::chrono::milliseconds elapsed{0};
};

/// Entity and relation vectors in a shared d-dimensional space. Rows are
/// laid out in sorted-id order, so a (graph, seed) pair reproduces the
/// table bit for bit.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::size_t dim, std::vector<std::string> entity_ids,
                   std::vector<std::string> relation_ids);

    std::size_t dim() const { return dim_; }
    const std::vector<std::string>& entity_ids() const { return entity_ids_; }
    const std::vector<std::string>& relation_ids() const { return relation_ids_; }

    bool has_entity(const std::string& id) const { return entity_row_.count(id) != 0; }
    bool has_relation(const std::string& id) const { return relation_row_.count(id) != 0; }

    std::span<const double> entity_vec(const std::string& id) const;
    std::span<const double> relation_vec(const std::string& id) const;
    std::span<double> mutable_entity_vec(const std::string& id);
    std::span<double> mutable_relation_vec(const std::string& id);

    std::span<const double> entity_row(std::size_t row) const;
    std::size_t entity_row_index(const std::string& id) const;

    std::uint64_t seed() const { return seed_; }
    std::size_t epochs_trained() const { return epochs_trained_; }
    void set_provenance(std::uint64_t seed, std::size_t epochs) {
        seed_ = seed;
        epochs_trained_ = epochs;
    }

    /// Scale every entity vector to unit L2 norm (zero vectors left alone).
    void normalize_entities();

    const std::vector<double>& entity_data() const { return entity_data_; }
    const std::vector<double>& relation_data() const { return relation_data_; }

private:
    std::size_t dim_ = 0;
    std::vector<std::string> entity_ids_;    // sorted
    std::vector<std::string> relation_ids_;  // sorted
    std::map<std::string, std::size_t> entity_row_;
    std::map<std::string, std::size_t> relation_row_;
    std::vector<double> entity_data_;
    std::vector<double> relation_data_;
    std::uint64_t seed_ = 0;
    std::size_t epochs_trained_ = 0;
};

/// Vectors drawn uniformly from [-6/sqrt(d), +6/sqrt(d)] with Rng(seed);
/// entity vectors L2-normalized. Deterministic given (graph, seed).
EmbeddingTable init_embeddings(const KnowledgeGraph& graph, const TrainConfig& config);

/// score(h, r, t) = -||f_E(h) + f_R(r) - f_E(t)||_2^2; always <= 0.
double score_triple(const EmbeddingTable& table, const std::string& h, const std::string& r,
                    const std::string& t);

struct NegativeSample {
    std::string head;
    std::string relation;
    std::string tail;
    /// Set when 100 corruption attempts all produced known true triples and
    /// the last candidate was returned anyway.
    bool false_negative_possible = false;
};

/// Corrupt the head or tail (per config) with a uniformly chosen different
/// entity, filtered against the graph's known triples.
NegativeSample negative_sample(const Triple& triple, const KnowledgeGraph& graph,
                               const TrainConfig& config, Rng& rng);

/// max(0, margin + neg_score - pos_score).
double margin_loss(double pos_score, double neg_score, double margin);

/// Gradient of the pair hinge loss with respect to every touched vector.
/// Used by the trainer and finite-difference checked by the tests.
struct PairGradient {
    std::map<std::string, std::vector<double>> entity_grad;
    std::map<std::string, std::vector<double>> relation_grad;
    double loss = 0.0;
};
PairGradient pair_gradient(const EmbeddingTable& table, const std::string& pos_h,
                           const std::string& pos_r, const std::string& pos_t,
                           const std::string& neg_h, const std::string& neg_r,
                           const std::string& neg_t, double margin);

/// Mini-batch SGD on the margin ranking loss over the graph's entity-tailed
/// triples. Entity vectors are re-normalized after each epoch. Fully
/// deterministic given config.seed.
std::pair<EmbeddingTable, TrainStats> train(const KnowledgeGraph& graph,
                                            const TrainConfig& config);

struct ScoredEntity {
    std::string id;
    double score = 0.0;
};

/// Rank every candidate tail for (h, r, ?): score descending, ties broken
/// by entity id ascending. With filtered=true, tails already linked by
/// (h, r, .) in the graph are excluded.
std::vector<ScoredEntity> predict_links(const EmbeddingTable& table, const KnowledgeGraph& graph,
                                        const std::string& h, const std::string& r, std::size_t k,
                                        bool filtered = false);

struct RankResult {
    double mrr = 0.0;
    std::map<std::size_t, double> hits_at;
    std::size_t evaluated_triples = 0;
};

/// Filtered tail ranking over all entities: candidates forming known graph
/// triples (other than the test tail itself) are skipped.
RankResult rank_metrics(const EmbeddingTable& table, const KnowledgeGraph& graph,
                        const std::vector<Triple>& test_triples,
                        const std::vector<std::size_t>& ks = {1, 3, 10});

}  // namespace kgrag
