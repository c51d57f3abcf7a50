#include "kgrag/kg.hpp"

#include <algorithm>
#include <deque>

#include "kgrag/errors.hpp"
#include "kgrag/text.hpp"

namespace kgrag {

namespace {

std::tuple<std::string, std::string, std::string> triple_key(const Triple& t) {
    return {t.head, t.relation, t.tail.sort_key()};
}

}  // namespace

const char* literal_type_name(LiteralType t) {
    switch (t) {
        case LiteralType::text:
            return "text";
        case LiteralType::number:
            return "number";
        case LiteralType::identifier:
            return "identifier";
    }
    return "text";
}

LiteralType literal_type_from_name(std::string_view name) {
    if (name == "text") return LiteralType::text;
    if (name == "number") return LiteralType::number;
    if (name == "identifier") return LiteralType::identifier;
    raise("parse-error", "unknown literal datatype: " + std::string(name));
}

Tail Tail::entity(std::string id) {
    Tail t;
    t.kind = Kind::entity;
    t.entity_id = std::move(id);
    return t;
}

Tail Tail::of(Literal lit) {
    Tail t;
    t.kind = Kind::literal;
    t.literal = std::move(lit);
    return t;
}

std::string Tail::sort_key() const {
    if (kind == Kind::entity) return "E\x1f" + entity_id;
    return std::string("L\x1f") + literal_type_name(literal.datatype) + "\x1f" + literal.value;
}

void KnowledgeGraph::ensure_mutable() const {
    if (frozen_) raise("graph-frozen", "graph is frozen; mutation rejected");
}

std::string KnowledgeGraph::mint_id(const char* prefix, std::size_t& counter,
                                    const std::map<std::string, std::size_t>& taken) const {
    for (;;) {
        std::string id = prefix + std::to_string(counter++);
        if (taken.find(id) == taken.end()) return id;
    }
}

KnowledgeGraph::AddEntityResult KnowledgeGraph::add_entity(
    std::string_view name, std::string_view entity_type,
    const std::map<std::string, std::string>& metadata) {
    ensure_mutable();
    std::string canonical = text::normalize_name(name);
    if (canonical.empty()) raise("empty-name", "entity name is empty after normalization");

    auto key = std::make_pair(canonical, std::string(entity_type));
    auto it = entity_by_key_.find(key);
    if (it != entity_by_key_.end()) {
        Entity& existing = entities_[it->second];
        for (const auto& [k, v] : metadata) existing.metadata.emplace(k, v);
        return {existing.id, false};
    }

    Entity e;
    e.id = mint_id("e", next_entity_, entity_by_id_);
    e.name = text::collapse_whitespace(name);
    e.entity_type = entity_type;
    e.metadata = metadata;
    entity_by_id_[e.id] = entities_.size();
    entity_by_key_[key] = entities_.size();
    entities_.push_back(std::move(e));
    return {entities_.back().id, true};
}

std::string KnowledgeGraph::add_relation(std::string_view label) {
    ensure_mutable();
    if (label.empty()) raise("empty-name", "relation label is empty");
    std::string l(label);
    auto it = relation_by_label_.find(l);
    if (it != relation_by_label_.end()) return relations_[it->second].id;

    RelationType r;
    r.id = mint_id("r", next_relation_, relation_by_id_);
    r.label = l;
    relation_by_id_[r.id] = relations_.size();
    relation_by_label_[l] = relations_.size();
    relations_.push_back(std::move(r));
    return relations_.back().id;
}

bool KnowledgeGraph::add_triple(const std::string& head, const std::string& relation,
                                const Tail& tail) {
    ensure_mutable();
    if (!has_entity(head)) raise("unknown-id", "triple head does not resolve: " + head);
    if (!has_relation(relation)) raise("unknown-id", "triple relation does not resolve: " + relation);
    if (tail.is_entity() && !has_entity(tail.entity_id)) {
        raise("unknown-id", "triple tail does not resolve: " + tail.entity_id);
    }
    if (!tail.is_entity() && tail.literal.value.empty()) {
        raise("empty-name", "literal tail has empty value");
    }

    Triple t{head, relation, tail};
    auto [it, inserted] = triple_keys_.insert(triple_key(t));
    (void)it;
    if (!inserted) return false;

    std::size_t idx = triples_.size();
    by_head_[t.head].push_back(idx);
    by_relation_[t.relation].push_back(idx);
    if (t.tail.is_entity()) by_tail_[t.tail.entity_id].push_back(idx);
    triples_.push_back(std::move(t));
    return true;
}

const Entity& KnowledgeGraph::entity(const std::string& id) const {
    auto it = entity_by_id_.find(id);
    if (it == entity_by_id_.end()) raise("unknown-id", "no such entity: " + id);
    return entities_[it->second];
}

const RelationType& KnowledgeGraph::relation(const std::string& id) const {
    auto it = relation_by_id_.find(id);
    if (it == relation_by_id_.end()) raise("unknown-id", "no such relation: " + id);
    return relations_[it->second];
}

const Entity* KnowledgeGraph::find_entity(std::string_view name,
                                          std::string_view entity_type) const {
    auto key = std::make_pair(text::normalize_name(name), std::string(entity_type));
    auto it = entity_by_key_.find(key);
    return it == entity_by_key_.end() ? nullptr : &entities_[it->second];
}

std::optional<std::string> KnowledgeGraph::relation_id_for(std::string_view label) const {
    auto it = relation_by_label_.find(std::string(label));
    if (it == relation_by_label_.end()) return std::nullopt;
    return relations_[it->second].id;
}

std::vector<std::string> KnowledgeGraph::entity_ids() const {
    std::vector<std::string> ids;
    ids.reserve(entities_.size());
    for (const auto& [id, idx] : entity_by_id_) {
        (void)idx;
        ids.push_back(id);
    }
    return ids;
}

std::vector<std::string> KnowledgeGraph::relation_ids() const {
    std::vector<std::string> ids;
    ids.reserve(relations_.size());
    for (const auto& [id, idx] : relation_by_id_) {
        (void)idx;
        ids.push_back(id);
    }
    return ids;
}

bool KnowledgeGraph::contains(const Triple& t) const {
    return triple_keys_.count(triple_key(t)) != 0;
}

bool KnowledgeGraph::contains_entity_triple(const std::string& head, const std::string& relation,
                                            const std::string& tail_entity) const {
    return triple_keys_.count({head, relation, "E\x1f" + tail_entity}) != 0;
}

const std::vector<std::size_t>* KnowledgeGraph::head_index(const std::string& id) const {
    auto it = by_head_.find(id);
    return it == by_head_.end() ? nullptr : &it->second;
}

const std::vector<std::size_t>* KnowledgeGraph::tail_index(const std::string& id) const {
    auto it = by_tail_.find(id);
    return it == by_tail_.end() ? nullptr : &it->second;
}

std::vector<Triple> KnowledgeGraph::neighbors(const std::string& entity_id, Direction dir) const {
    if (!has_entity(entity_id)) raise("unknown-id", "no such entity: " + entity_id);

    std::set<std::size_t> picked;
    if (dir == Direction::out || dir == Direction::both) {
        if (const auto* idxs = head_index(entity_id)) picked.insert(idxs->begin(), idxs->end());
    }
    if (dir == Direction::in || dir == Direction::both) {
        if (const auto* idxs = tail_index(entity_id)) picked.insert(idxs->begin(), idxs->end());
    }

    std::vector<Triple> out;
    out.reserve(picked.size());
    for (std::size_t idx : picked) out.push_back(triples_[idx]);
    std::sort(out.begin(), out.end(), [this](const Triple& a, const Triple& b) {
        auto ka = std::make_tuple(relation(a.relation).label, a.tail.sort_key(), a.head);
        auto kb = std::make_tuple(relation(b.relation).label, b.tail.sort_key(), b.head);
        return ka < kb;
    });
    return out;
}

KnowledgeGraph KnowledgeGraph::subgraph(const std::vector<std::string>& seeds,
                                        std::size_t hops) const {
    for (const auto& s : seeds) {
        if (!has_entity(s)) raise("unknown-id", "no such entity: " + s);
    }

    // Distance labels via BFS over both directions; a triple is included
    // when one endpoint sits strictly inside the hop radius.
    std::map<std::string, std::size_t> dist;
    std::deque<std::string> frontier;
    for (const auto& s : seeds) {
        if (dist.emplace(s, 0).second) frontier.push_back(s);
    }
    std::set<std::size_t> included;
    while (!frontier.empty()) {
        std::string cur = frontier.front();
        frontier.pop_front();
        std::size_t d = dist[cur];
        if (d >= hops) continue;
        auto visit = [&](const std::vector<std::size_t>* idxs) {
            if (!idxs) return;
            for (std::size_t idx : *idxs) {
                included.insert(idx);
                const Triple& t = triples_[idx];
                for (const std::string* other : {&t.head, &t.tail.entity_id}) {
                    if (other->empty()) continue;  // literal tail
                    if (dist.emplace(*other, d + 1).second) frontier.push_back(*other);
                }
            }
        };
        visit(head_index(cur));
        visit(tail_index(cur));
    }

    KnowledgeGraph sub;
    auto copy_entity = [&](const std::string& id) {
        if (!sub.has_entity(id)) sub.restore_entity(entity(id));
    };
    for (const auto& s : seeds) copy_entity(s);
    for (std::size_t idx : included) {
        const Triple& t = triples_[idx];
        copy_entity(t.head);
        if (t.tail.is_entity()) copy_entity(t.tail.entity_id);
        if (!sub.has_relation(t.relation)) sub.restore_relation(relation(t.relation));
    }
    for (std::size_t idx : included) sub.restore_triple(triples_[idx]);
    return sub;
}

void KnowledgeGraph::freeze() { frozen_ = true; }

std::vector<std::string> KnowledgeGraph::match_entities(std::string_view t) const {
    // Canonical names as token sequences, bucketed by first token with the
    // longest candidates tried first at each query position.
    std::map<std::string, std::vector<std::pair<std::vector<std::string>, std::size_t>>> by_first;
    for (std::size_t i = 0; i < entities_.size(); ++i) {
        auto name_tokens = text::tokenize(entities_[i].name);
        if (name_tokens.empty()) continue;
        by_first[name_tokens[0]].push_back({std::move(name_tokens), i});
    }
    for (auto& [first, cands] : by_first) {
        (void)first;
        std::sort(cands.begin(), cands.end(), [this](const auto& a, const auto& b) {
            if (a.first.size() != b.first.size()) return a.first.size() > b.first.size();
            return entities_[a.second].id < entities_[b.second].id;
        });
    }

    auto words = text::tokenize(t);
    std::set<std::string> found;
    std::size_t pos = 0;
    while (pos < words.size()) {
        std::size_t advance = 1;
        auto bucket = by_first.find(words[pos]);
        if (bucket != by_first.end()) {
            std::size_t matched_len = 0;
            for (const auto& [name_tokens, ent_idx] : bucket->second) {
                if (matched_len != 0 && name_tokens.size() < matched_len) break;
                if (pos + name_tokens.size() > words.size()) continue;
                bool ok = true;
                for (std::size_t k = 0; k < name_tokens.size(); ++k) {
                    if (name_tokens[k] != words[pos + k]) {
                        ok = false;
                        break;
                    }
                }
                if (ok) {
                    // Longest match wins; every entity sharing that name
                    // (different types) is reported.
                    found.insert(entities_[ent_idx].id);
                    matched_len = name_tokens.size();
                }
            }
            if (matched_len > 0) advance = matched_len;
        }
        pos += advance;
    }
    return {found.begin(), found.end()};
}

void KnowledgeGraph::restore_entity(Entity e) {
    ensure_mutable();
    if (e.id.empty()) raise("invariant-violation", "entity id is empty");
    std::string canonical = text::normalize_name(e.name);
    if (canonical.empty()) raise("empty-name", "entity name is empty after normalization");
    if (entity_by_id_.count(e.id)) raise("invariant-violation", "duplicate entity id: " + e.id);
    auto key = std::make_pair(canonical, e.entity_type);
    if (entity_by_key_.count(key)) {
        raise("invariant-violation", "duplicate entity key: (" + canonical + ", " + e.entity_type + ")");
    }
    entity_by_id_[e.id] = entities_.size();
    entity_by_key_[key] = entities_.size();
    entities_.push_back(std::move(e));
}

void KnowledgeGraph::restore_relation(RelationType r) {
    ensure_mutable();
    if (r.id.empty()) raise("invariant-violation", "relation id is empty");
    if (r.label.empty()) raise("empty-name", "relation label is empty");
    if (relation_by_id_.count(r.id)) raise("invariant-violation", "duplicate relation id: " + r.id);
    if (relation_by_label_.count(r.label)) {
        raise("invariant-violation", "duplicate relation label: " + r.label);
    }
    relation_by_id_[r.id] = relations_.size();
    relation_by_label_[r.label] = relations_.size();
    relations_.push_back(std::move(r));
}

void KnowledgeGraph::restore_triple(Triple t) {
    if (!add_triple(t.head, t.relation, t.tail)) {
        raise("invariant-violation", "duplicate triple in restore");
    }
}

}  // namespace kgrag
