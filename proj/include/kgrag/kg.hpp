#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace kgrag {

enum class LiteralType { text, number, identifier };

const char* literal_type_name(LiteralType t);
LiteralType literal_type_from_name(std::string_view name);

struct Literal {
    std::string value;
    LiteralType datatype = LiteralType::text;

    friend bool operator==(const Literal&, const Literal&) = default;
    friend auto operator<=>(const Literal&, const Literal&) = default;
};

struct Entity {
    std::string id;
    std::string name;  // first-seen surface, whitespace-collapsed
    std::string entity_type;
    std::map<std::string, std::string> metadata;
};

struct RelationType {
    std::string id;
    std::string label;
};

/// Triple tail: either a reference to an entity or an inline literal.
struct Tail {
    enum class Kind { entity, literal };

    Kind kind = Kind::literal;
    std::string entity_id;  // kind == entity
    Literal literal;        // kind == literal

    static Tail entity(std::string id);
    static Tail of(Literal lit);

    bool is_entity() const { return kind == Kind::entity; }

    /// Total-order key; "E\x1f<id>" or "L\x1f<datatype>\x1f<value>".
    std::string sort_key() const;

    friend bool operator==(const Tail& a, const Tail& b) {
        return a.kind == b.kind && a.entity_id == b.entity_id && a.literal == b.literal;
    }
};

struct Triple {
    std::string head;      // entity id
    std::string relation;  // relation id
    Tail tail;

    friend bool operator==(const Triple&, const Triple&) = default;
};

/// In-memory triple store with entity canonicalization, adjacency indexes
/// and k-hop expansion. Build is single-writer; freeze() makes the graph
/// immutable and safe for concurrent reads. Iteration orders are
/// deterministic throughout (sorted keys, insertion-ordered triples).
class KnowledgeGraph {
public:
    enum class Direction { out, in, both };

    struct AddEntityResult {
        std::string id;
        bool inserted = false;
    };

    /// Canonicalization key is (lowercased whitespace-collapsed name,
    /// entity_type). A hit merges metadata (insert-if-absent) and returns
    /// the existing id.
    AddEntityResult add_entity(std::string_view name, std::string_view entity_type,
                               const std::map<std::string, std::string>& metadata = {});

    /// Get-or-create a relation type by label.
    std::string add_relation(std::string_view label);

    /// Returns true when inserted, false when the exact triple existed.
    bool add_triple(const std::string& head, const std::string& relation, const Tail& tail);

    const Entity& entity(const std::string& id) const;
    const RelationType& relation(const std::string& id) const;
    const Entity* find_entity(std::string_view name, std::string_view entity_type) const;
    std::optional<std::string> relation_id_for(std::string_view label) const;

    std::size_t entity_count() const { return entities_.size(); }
    std::size_t relation_count() const { return relations_.size(); }
    std::size_t triple_count() const { return triples_.size(); }

    std::vector<std::string> entity_ids() const;    // sorted
    std::vector<std::string> relation_ids() const;  // sorted
    const std::vector<Triple>& triples() const { return triples_; }

    bool contains(const Triple& t) const;
    bool contains_entity_triple(const std::string& head, const std::string& relation,
                                const std::string& tail_entity) const;
    bool has_entity(const std::string& id) const { return entity_by_id_.count(id) != 0; }
    bool has_relation(const std::string& id) const { return relation_by_id_.count(id) != 0; }

    /// Triples incident to the entity, sorted by
    /// (relation label, tail key, head id).
    std::vector<Triple> neighbors(const std::string& entity_id, Direction dir) const;

    /// Breadth-first expansion over both edge directions. The result holds
    /// every triple reached within `hops` steps of a seed plus all entities
    /// and relations those triples reference; ids are preserved.
    KnowledgeGraph subgraph(const std::vector<std::string>& seeds, std::size_t hops) const;

    void freeze();
    bool frozen() const { return frozen_; }

    /// Entity ids whose canonical names occur in `t` (word-boundary,
    /// longest match first). Sorted, unique.
    std::vector<std::string> match_entities(std::string_view t) const;

    // Persistence/subgraph support: insert fully-formed records, keeping
    // ids. Invariants are still validated.
    void restore_entity(Entity e);
    void restore_relation(RelationType r);
    void restore_triple(Triple t);

private:
    void ensure_mutable() const;
    std::string mint_id(const char* prefix, std::size_t& counter,
                        const std::map<std::string, std::size_t>& taken) const;
    const std::vector<std::size_t>* head_index(const std::string& id) const;
    const std::vector<std::size_t>* tail_index(const std::string& id) const;

    std::vector<Entity> entities_;
    std::map<std::string, std::size_t> entity_by_id_;
    std::map<std::pair<std::string, std::string>, std::size_t> entity_by_key_;

    std::vector<RelationType> relations_;
    std::map<std::string, std::size_t> relation_by_id_;
    std::map<std::string, std::size_t> relation_by_label_;

    std::vector<Triple> triples_;
    std::set<std::tuple<std::string, std::string, std::string>> triple_keys_;
    std::map<std::string, std::vector<std::size_t>> by_head_;
    std::map<std::string, std::vector<std::size_t>> by_tail_;  // entity tails only
    std::map<std::string, std::vector<std::size_t>> by_relation_;

    std::size_t next_entity_ = 1;
    std::size_t next_relation_ = 1;
    bool frozen_ = false;
};

}  // namespace kgrag
