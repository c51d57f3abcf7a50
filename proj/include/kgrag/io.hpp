#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "kgrag/embedding.hpp"
#include "kgrag/evaluation.hpp"
#include "kgrag/extract.hpp"
#include "kgrag/generation.hpp"
#include "kgrag/kg.hpp"
#include "kgrag/retrieval.hpp"

namespace kgrag {

struct CorpusManifest {
    std::filesystem::path root;
    std::vector<std::string> include;  // globs over /-separated relative paths
    enum class Format { plain_text, markdown } format = Format::plain_text;
    /// Tags attached to every document whose relative path matches the glob
    /// key.
    std::map<std::string, std::vector<std::string>> tags;
};

CorpusManifest manifest_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
CorpusManifest load_manifest(const std::filesystem::path& path);

/// Simple glob: `*` matches within a path segment, `**` across segments,
/// `?` one character.
bool glob_match(const std::string& pattern, const std::string& path);

/// One Document per matched file, id = relative path, sorted. Markdown
/// sources are reduced to text: heading markers stripped, blank lines
/// dropped, fenced code blocks kept verbatim.
std::vector<Document> load_corpus(const CorpusManifest& manifest);

std::string markdown_to_text(const std::string& markdown);

// Snapshots are line-delimited JSON with a version-carrying header record
// and a record-counting footer; a missing or inconsistent footer means the
// file was truncated. Writes go to a temp file renamed into place.
void save_kg(const KnowledgeGraph& graph, const std::filesystem::path& path);
KnowledgeGraph load_kg(const std::filesystem::path& path);  // returned graph is frozen

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

void save_index(const VectorIndex& index, const std::filesystem::path& path);
VectorIndex load_index(const std::filesystem::path& path);

void save_chunks(const std::vector<Chunk>& chunks, const std::filesystem::path& path);
std::vector<Chunk> load_chunks(const std::filesystem::path& path);

/// Line-delimited {id, question, options: [{label, text}], answer,
/// difficulty?}. Any invalid line rejects the whole file, naming the line.
std::vector<MCQItem> load_mcq(const std::filesystem::path& path);

/// Line-delimited {id, text or document_path, reference}. document_path is
/// resolved against the dataset file's directory.
std::vector<SummarizationExample> load_summarization(const std::filesystem::path& path);

/// Everything a run needs, minus the API key (environment only).
struct RunConfig {
    ChunkingConfig chunking;
    std::size_t encoder_dim = 256;
    TrainConfig train;
    GenerationConfig generation;
    HttpClientConfig client;
};

nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

void save_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport load_report(const std::filesystem::path& path);

}  // namespace kgrag
