#include "kgrag/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "kgrag/errors.hpp"
#include "kgrag/vecops.hpp"

namespace kgrag {

EmbeddingTable::EmbeddingTable(std::size_t dim, std::vector<std::string> entity_ids,
                               std::vector<std::string> relation_ids)
    : dim_(dim), entity_ids_(std::move(entity_ids)), relation_ids_(std::move(relation_ids)) {
    for (std::size_t i = 0; i < entity_ids_.size(); ++i) entity_row_[entity_ids_[i]] = i;
    for (std::size_t i = 0; i < relation_ids_.size(); ++i) relation_row_[relation_ids_[i]] = i;
    if (entity_row_.size() != entity_ids_.size() || relation_row_.size() != relation_ids_.size()) {
        raise("duplicate-id", "embedding table ids must be unique");
    }
    entity_data_.assign(entity_ids_.size() * dim_, 0.0);
    relation_data_.assign(relation_ids_.size() * dim_, 0.0);
}

std::span<const double> EmbeddingTable::entity_vec(const std::string& id) const {
    auto it = entity_row_.find(id);
    if (it == entity_row_.end()) raise("missing-vector", "no entity vector for " + id);
    return {entity_data_.data() + it->second * dim_, dim_};
}

std::span<const double> EmbeddingTable::relation_vec(const std::string& id) const {
    auto it = relation_row_.find(id);
    if (it == relation_row_.end()) raise("missing-vector", "no relation vector for " + id);
    return {relation_data_.data() + it->second * dim_, dim_};
}

std::span<double> EmbeddingTable::mutable_entity_vec(const std::string& id) {
    auto it = entity_row_.find(id);
    if (it == entity_row_.end()) raise("missing-vector", "no entity vector for " + id);
    return {entity_data_.data() + it->second * dim_, dim_};
}

std::span<double> EmbeddingTable::mutable_relation_vec(const std::string& id) {
    auto it = relation_row_.find(id);
    if (it == relation_row_.end()) raise("missing-vector", "no relation vector for " + id);
    return {relation_data_.data() + it->second * dim_, dim_};
}

std::span<const double> EmbeddingTable::entity_row(std::size_t row) const {
    return {entity_data_.data() + row * dim_, dim_};
}

std::size_t EmbeddingTable::entity_row_index(const std::string& id) const {
    auto it = entity_row_.find(id);
    if (it == entity_row_.end()) raise("missing-vector", "no entity vector for " + id);
    return it->second;
}

void EmbeddingTable::normalize_entities() {
    for (std::size_t row = 0; row < entity_ids_.size(); ++row) {
        double* v = entity_data_.data() + row * dim_;
        double sq = vecops::squared_norm(v, dim_);
        if (sq > 0.0) vecops::scale(v, 1.0 / std::sqrt(sq), dim_);
    }
}

EmbeddingTable init_embeddings(const KnowledgeGraph& graph, const TrainConfig& config) {
    if (!graph.frozen()) raise("graph-not-frozen", "freeze the graph before embedding it");
    if (graph.entity_count() == 0) raise("empty-graph", "cannot embed an empty graph");
    if (config.dim == 0) raise("invalid-argument", "embedding dim must be positive");

    EmbeddingTable table(config.dim, graph.entity_ids(), graph.relation_ids());
    double range = 6.0 / std::sqrt(static_cast<double>(config.dim));
    Rng rng(config.seed);
    for (const auto& id : table.entity_ids()) {
        auto v = table.mutable_entity_vec(id);
        for (auto& x : v) x = rng.uniform_real(-range, range);
    }
    for (const auto& id : table.relation_ids()) {
        auto v = table.mutable_relation_vec(id);
        for (auto& x : v) x = rng.uniform_real(-range, range);
    }
    table.normalize_entities();
    table.set_provenance(config.seed, 0);
    return table;
}

double score_triple(const EmbeddingTable& table, const std::string& h, const std::string& r,
                    const std::string& t) {
    auto hv = table.entity_vec(h);
    auto rv = table.relation_vec(r);
    auto tv = table.entity_vec(t);
    return -vecops::translation_sq_dist(hv.data(), rv.data(), tv.data(), table.dim());
}

namespace {

NegativeSample negative_sample_impl(const std::string& h, const std::string& r,
                                    const std::string& t,
                                    const std::vector<std::string>& entity_ids,
                                    const KnowledgeGraph& graph, const TrainConfig& config,
                                    Rng& rng) {
    std::size_t n = entity_ids.size();
    if (n < 2) raise("invalid-argument", "negative sampling needs at least 2 entities");

    NegativeSample candidate{h, r, t, false};
    for (int attempt = 0; attempt < 100; ++attempt) {
        bool corrupt_head =
            config.corruption == Corruption::head_or_tail ? rng.coin() : false;
        const std::string& original = corrupt_head ? h : t;
        auto orig_it = std::lower_bound(entity_ids.begin(), entity_ids.end(), original);
        std::size_t orig_idx = static_cast<std::size_t>(orig_it - entity_ids.begin());
        bool orig_present = orig_it != entity_ids.end() && *orig_it == original;

        std::size_t draw_span = orig_present ? n - 1 : n;
        std::size_t k = static_cast<std::size_t>(rng.uniform_int(draw_span));
        if (orig_present && k >= orig_idx) ++k;
        const std::string& replacement = entity_ids[k];

        candidate = corrupt_head ? NegativeSample{replacement, r, t, false}
                                 : NegativeSample{h, r, replacement, false};
        if (!graph.contains_entity_triple(candidate.head, candidate.relation, candidate.tail)) {
            return candidate;
        }
    }
    candidate.false_negative_possible = true;
    return candidate;
}

}  // namespace

NegativeSample negative_sample(const Triple& triple, const KnowledgeGraph& graph,
                               const TrainConfig& config, Rng& rng) {
    if (!triple.tail.is_entity()) {
        raise("invalid-argument", "negative sampling needs an entity-tailed triple");
    }
    auto ids = graph.entity_ids();
    return negative_sample_impl(triple.head, triple.relation, triple.tail.entity_id, ids, graph,
                                config, rng);
}

double margin_loss(double pos_score, double neg_score, double margin) {
    return std::max(0.0, margin + neg_score - pos_score);
}

PairGradient pair_gradient(const EmbeddingTable& table, const std::string& pos_h,
                           const std::string& pos_r, const std::string& pos_t,
                           const std::string& neg_h, const std::string& neg_r,
                           const std::string& neg_t, double margin) {
    std::size_t d = table.dim();
    std::vector<double> pos_res(d), neg_res(d);
    vecops::translation_residual(table.entity_vec(pos_h).data(), table.relation_vec(pos_r).data(),
                                 table.entity_vec(pos_t).data(), pos_res.data(), d);
    vecops::translation_residual(table.entity_vec(neg_h).data(), table.relation_vec(neg_r).data(),
                                 table.entity_vec(neg_t).data(), neg_res.data(), d);
    double pos_score = -vecops::squared_norm(pos_res.data(), d);
    double neg_score = -vecops::squared_norm(neg_res.data(), d);

    PairGradient g;
    g.loss = margin_loss(pos_score, neg_score, margin);
    if (g.loss <= 0.0) return g;

    auto accumulate = [&](std::map<std::string, std::vector<double>>& into, const std::string& id,
                          double coeff, const std::vector<double>& res) {
        auto [it, fresh] = into.try_emplace(id, std::vector<double>(d, 0.0));
        (void)fresh;
        vecops::axpy(coeff, res.data(), it->second.data(), d);
    };
    // d loss / d residual_pos = +2 residual_pos; negative side flips sign.
    accumulate(g.entity_grad, pos_h, 2.0, pos_res);
    accumulate(g.relation_grad, pos_r, 2.0, pos_res);
    accumulate(g.entity_grad, pos_t, -2.0, pos_res);
    accumulate(g.entity_grad, neg_h, -2.0, neg_res);
    accumulate(g.relation_grad, neg_r, -2.0, neg_res);
    accumulate(g.entity_grad, neg_t, 2.0, neg_res);
    return g;
}

std::pair<EmbeddingTable, TrainStats> train(const KnowledgeGraph& graph,
                                            const TrainConfig& config) {
    if (!graph.frozen()) raise("graph-not-frozen", "freeze the graph before training");

    struct Ids {
        std::string h, r, t;
    };
    std::vector<Ids> positives;
    for (const Triple& t : graph.triples()) {
        if (t.tail.is_entity()) positives.push_back({t.head, t.relation, t.tail.entity_id});
    }
    if (positives.empty()) {
        raise("no-trainable-triples", "graph has no entity-tailed triples");
    }
    if (config.batch_size == 0 || config.negatives_per_positive == 0) {
        raise("invalid-argument", "batch_size and negatives_per_positive must be positive");
    }

    auto started = std::chrono::steady_clock::now();
    EmbeddingTable table = init_embeddings(graph, config);
    auto entity_ids = graph.entity_ids();

    // Separate stream from init so adding epochs never reshapes the
    // initialization draw.
    Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    TrainStats stats;
    stats.epoch_mean_loss.reserve(config.epochs);
    std::vector<std::size_t> order(positives.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::size_t d = config.dim;
    std::vector<double> pos_res(d), neg_res(d);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t pairs = 0;

        for (std::size_t batch_start = 0; batch_start < order.size();
             batch_start += config.batch_size) {
            std::size_t batch_end = std::min(batch_start + config.batch_size, order.size());
            // Sparse per-batch gradient accumulators, applied after the
            // whole batch is scored against the pre-update parameters.
            std::map<std::string, std::vector<double>> ent_grads;
            std::map<std::string, std::vector<double>> rel_grads;
            auto accumulate = [&](std::map<std::string, std::vector<double>>& into,
                                  const std::string& id, double coeff, const double* res) {
                auto [it, fresh] = into.try_emplace(id, std::vector<double>(d, 0.0));
                (void)fresh;
                vecops::axpy(coeff, res, it->second.data(), d);
            };

            for (std::size_t bi = batch_start; bi < batch_end; ++bi) {
                const Ids& pos = positives[order[bi]];
                for (std::size_t neg_i = 0; neg_i < config.negatives_per_positive; ++neg_i) {
                    NegativeSample neg = negative_sample_impl(pos.h, pos.r, pos.t, entity_ids,
                                                              graph, config, rng);
                    vecops::translation_residual(table.entity_vec(pos.h).data(),
                                                 table.relation_vec(pos.r).data(),
                                                 table.entity_vec(pos.t).data(), pos_res.data(), d);
                    vecops::translation_residual(table.entity_vec(neg.head).data(),
                                                 table.relation_vec(neg.relation).data(),
                                                 table.entity_vec(neg.tail).data(), neg_res.data(),
                                                 d);
                    double pos_score = -vecops::squared_norm(pos_res.data(), d);
                    double neg_score = -vecops::squared_norm(neg_res.data(), d);
                    double loss = margin_loss(pos_score, neg_score, config.margin);
                    loss_sum += loss;
                    ++pairs;
                    if (loss <= 0.0) continue;

                    accumulate(ent_grads, pos.h, 2.0, pos_res.data());
                    accumulate(rel_grads, pos.r, 2.0, pos_res.data());
                    accumulate(ent_grads, pos.t, -2.0, pos_res.data());
                    accumulate(ent_grads, neg.head, -2.0, neg_res.data());
                    accumulate(rel_grads, neg.relation, -2.0, neg_res.data());
                    accumulate(ent_grads, neg.tail, 2.0, neg_res.data());
                }
            }

            for (const auto& [id, grad] : ent_grads) {
                vecops::axpy(-config.learning_rate, grad.data(),
                             table.mutable_entity_vec(id).data(), d);
            }
            for (const auto& [id, grad] : rel_grads) {
                vecops::axpy(-config.learning_rate, grad.data(),
                             table.mutable_relation_vec(id).data(), d);
            }
        }

        table.normalize_entities();
        stats.epoch_mean_loss.push_back(pairs == 0 ? 0.0 : loss_sum / static_cast<double>(pairs));
    }

    stats.final_loss = stats.epoch_mean_loss.empty() ? 0.0 : stats.epoch_mean_loss.back();
    stats.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - started);
    table.set_provenance(config.seed, config.epochs);
    return {std::move(table), std::move(stats)};
}

namespace {

// Comparator shared by predict_links and rank_metrics: score descending,
// entity id ascending.
bool ranks_before(double score_a, const std::string& id_a, double score_b,
                  const std::string& id_b) {
    if (score_a != score_b) return score_a > score_b;
    return id_a < id_b;
}

}  // namespace

std::vector<ScoredEntity> predict_links(const EmbeddingTable& table, const KnowledgeGraph& graph,
                                        const std::string& h, const std::string& r, std::size_t k,
                                        bool filtered) {
    if (k == 0) raise("invalid-argument", "k must be positive");
    auto hv = table.entity_vec(h);
    auto rv = table.relation_vec(r);

    std::vector<ScoredEntity> scored;
    scored.reserve(table.entity_ids().size());
    for (const auto& candidate : table.entity_ids()) {
        if (filtered && graph.contains_entity_triple(h, r, candidate)) continue;
        auto tv = table.entity_vec(candidate);
        double score = -vecops::translation_sq_dist(hv.data(), rv.data(), tv.data(), table.dim());
        scored.push_back({candidate, score});
    }
    std::sort(scored.begin(), scored.end(), [](const ScoredEntity& a, const ScoredEntity& b) {
        return ranks_before(a.score, a.id, b.score, b.id);
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

RankResult rank_metrics(const EmbeddingTable& table, const KnowledgeGraph& graph,
                        const std::vector<Triple>& test_triples,
                        const std::vector<std::size_t>& ks) {
    if (test_triples.empty()) raise("empty-test-set", "rank_metrics needs at least one triple");

    RankResult result;
    for (std::size_t k : ks) result.hits_at[k] = 0.0;

    for (const Triple& t : test_triples) {
        if (!t.tail.is_entity()) {
            raise("invalid-argument", "rank_metrics needs entity-tailed triples");
        }
        auto hv = table.entity_vec(t.head);
        auto rv = table.relation_vec(t.relation);
        auto true_tv = table.entity_vec(t.tail.entity_id);
        double true_score =
            -vecops::translation_sq_dist(hv.data(), rv.data(), true_tv.data(), table.dim());

        std::size_t rank = 1;
        for (const auto& candidate : table.entity_ids()) {
            if (candidate == t.tail.entity_id) continue;
            if (graph.contains_entity_triple(t.head, t.relation, candidate)) continue;  // filtered
            auto cv = table.entity_vec(candidate);
            double score =
                -vecops::translation_sq_dist(hv.data(), rv.data(), cv.data(), table.dim());
            if (ranks_before(score, candidate, true_score, t.tail.entity_id)) ++rank;
        }

        result.mrr += 1.0 / static_cast<double>(rank);
        for (std::size_t k : ks) {
            if (rank <= k) result.hits_at[k] += 1.0;
        }
        ++result.evaluated_triples;
    }

    double n = static_cast<double>(result.evaluated_triples);
    result.mrr /= n;
    for (auto& [k, v] : result.hits_at) {
        (void)k;
        v /= n;
    }
    return result;
}

}  // namespace kgrag
