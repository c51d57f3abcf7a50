#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kgrag/kg.hpp"
#include "kgrag/llm_client.hpp"

namespace kgrag {

struct Document {
    std::string id;
    std::string text;
    std::string source;
    std::vector<std::string> tags;

    Document() = default;
    /// Throws Error("empty-document") on empty id or text.
    Document(std::string id, std::string text, std::string source = {},
             std::vector<std::string> tags = {});
};

struct Chunk {
    std::string doc_id;
    std::size_t index = 0;
    std::string text;
    std::size_t start = 0;  // [start, end) character span into the document
    std::size_t end = 0;
};

struct ChunkingConfig {
    std::size_t max_chars = 1200;
    std::size_t overlap = 100;
};

/// Character-window chunking with boundary snapping: a cut prefers the last
/// paragraph break, then the last sentence end, inside a window of
/// max_chars/8 before the hard limit. Consecutive chunks overlap by exactly
/// `overlap` characters, so dropping the first `overlap` characters of every
/// chunk after the first reconstructs the document byte for byte.
std::vector<Chunk> chunk_document(const Document& doc, std::size_t max_chars,
                                  std::size_t overlap);

inline std::vector<Chunk> chunk_document(const Document& doc, const ChunkingConfig& cfg) {
    return chunk_document(doc, cfg.max_chars, cfg.overlap);
}

struct ExtractedEntity {
    std::string surface;
    std::string entity_type;
    std::string context;  // sentence-level evidence
    std::string doc_id;
    std::size_t chunk_index = 0;
    /// Set by the LLM extractor when the surface does not occur verbatim in
    /// the chunk. The rule-based extractor never sets it.
    bool unverified = false;
};

struct ExtractedRelation {
    std::string head_surface;
    std::string tail_surface;
    std::string label;
    std::string doc_id;
    std::size_t chunk_index = 0;
};

struct Extraction {
    std::vector<ExtractedEntity> entities;
    std::vector<ExtractedRelation> relations;
};

/// Behavior contract: deterministic given identical input and
/// configuration; every relation endpoint equals the surface of some
/// entity in the same result.
class Extractor {
public:
    virtual ~Extractor() = default;
    virtual Extraction extract(const Chunk& chunk) = 0;
    virtual std::string name() const = 0;
};

struct GazetteerEntry {
    std::string surface;
    std::string type;
};

struct RelationPattern {
    std::string label;
    std::string regex;  // exactly two capture groups: head and tail
};

/// Pure, offline extractor: gazetteer surfaces are matched case-insensitively
/// at word boundaries; relation patterns are regexes (case-insensitive) whose
/// two captures must both name matched entities.
class RuleBasedExtractor : public Extractor {
public:
    RuleBasedExtractor(std::vector<GazetteerEntry> gazetteer,
                       std::vector<RelationPattern> patterns);

    /// gazetteer: lines of "surface<TAB>type"; patterns: lines of
    /// "label<TAB>regex". Blank lines and #-comments are skipped.
    static RuleBasedExtractor from_files(const std::filesystem::path& gazetteer_file,
                                         const std::filesystem::path& patterns_file);

    Extraction extract(const Chunk& chunk) override;
    std::string name() const override { return "rule-based"; }

private:
    std::vector<GazetteerEntry> gazetteer_;
    std::vector<RelationPattern> patterns_;
};

struct LlmExtractorConfig {
    std::string system_prompt =
        "You extract telecommunications domain knowledge. Respond with JSON only.";
    /// The chunk text is appended after this instruction.
    std::string prompt =
        "Extract the named entities and the relations between them from the text below.\n"
        "Respond with exactly one JSON object of the form\n"
        "{\"entities\": [{\"surface\": \"...\", \"type\": \"...\"}],\n"
        " \"relations\": [{\"head\": \"...\", \"tail\": \"...\", \"label\": \"...\"}]}\n"
        "Entity types are short tags such as protocol, component, metric, standard.\n"
        "Relation heads and tails must repeat entity surfaces verbatim.\n\nText:\n";
    int max_tokens = 1024;
};

/// LLM-backed extractor. The model must return the JSON object documented in
/// LlmExtractorConfig; one repair pass strips code fences, a malformed reply
/// is re-requested once, and unparseable items are dropped with a warning.
class LlmExtractor : public Extractor {
public:
    LlmExtractor(LLMClient& client, LlmExtractorConfig config = {});
    Extraction extract(const Chunk& chunk) override;
    std::string name() const override { return "llm"; }

private:
    LLMClient& client_;
    LlmExtractorConfig config_;
};

struct MergeReport {
    std::size_t entities_added = 0;
    std::size_t entities_merged = 0;
    std::size_t triples_added = 0;
    std::size_t triples_duplicate = 0;
};

/// Canonicalize extracted entities into the graph and turn relations into
/// triples. Counts are exact.
MergeReport merge_into_graph(KnowledgeGraph& graph, const std::vector<Extraction>& extractions);

}  // namespace kgrag
