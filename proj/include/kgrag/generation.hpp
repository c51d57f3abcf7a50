#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgrag/extract.hpp"
#include "kgrag/kg.hpp"
#include "kgrag/llm_client.hpp"
#include "kgrag/retrieval.hpp"

namespace kgrag {

enum class Mode { llm_only, rag, kg_rag };

const char* mode_name(Mode m);
Mode mode_from_name(std::string_view name);

struct GenerationConfig {
    Mode mode = Mode::kg_rag;
    std::size_t top_k = 5;
    std::size_t hops = 1;
    double temperature = 0.0;
    int max_output_tokens = 512;
    ScoringWeights weights;
    /// Prompt budget in approximate tokens (chars/4).
    std::size_t input_token_budget = 3072;
    ChunkingConfig chunking;  // summarize chunks the document with this
    std::size_t parallelism = 4;
};

/// One system prompt for every task keeps replay fixtures stable.
inline constexpr std::string_view kSystemPrompt =
    "You are an expert assistant for telecommunications standards and systems.";

/// Instruction headers. Each is mode-neutral so that a prompt with zero
/// snippets is byte-identical across modes.
inline constexpr std::string_view kQaInstruction =
    "Answer the multiple-choice question. If knowledge snippets are provided, use them when "
    "they are relevant. Reply with the option letter only.";
inline constexpr std::string_view kSummarizeInstruction =
    "Summarize the following technical document concisely, preserving the key facts.";
inline constexpr std::string_view kKnowledgeTaskInstruction =
    "Use the provided knowledge snippets to complete the task.";

/// The assembled prompt. Rendered layout, byte for byte:
///
///   <instruction>\n
///   [for each kept snippet, 1-based:]
///   \n### Knowledge [i] (<source>)\n<snippet text>\n
///   \n### Question\n<query>\n
///
/// No knowledge header is emitted when zero snippets survive.
struct AssembledInput {
    std::string query;
    std::vector<std::pair<std::string, std::string>> snippets;  // (id, text), rendered order
    std::string rendered;
    std::size_t token_budget = 0;
    std::vector<std::string> dropped;  // ids dropped to fit the budget
};

/// Assemble the prompt, dropping whole snippets lowest-score-first until the
/// chars/4 estimate fits the budget. Throws Error("budget-too-small") when
/// even the snippet-free prompt exceeds it.
AssembledInput format_input(const std::string& query, const std::vector<ScoredSnippet>& snippets,
                            std::size_t token_budget,
                            std::string_view instruction = kKnowledgeTaskInstruction);

/// Send the assembled prompt; decode parameters pass through unchanged.
std::string generate(const AssembledInput& input, LLMClient& client,
                     const GenerationConfig& config);

struct Answer {
    std::string raw_text;
    std::optional<std::string> selected_option;  // multiple choice only
    std::vector<std::string> retrieved;          // snippet ids used
    Mode mode = Mode::llm_only;
};

struct McqOption {
    std::string label;
    std::string text;
};

struct PipelineDeps {
    const KnowledgeGraph* graph = nullptr;
    const VectorIndex* index = nullptr;
    const Encoder* encoder = nullptr;
    LLMClient* client = nullptr;
};

/// First standalone letter token matching an option label wins
/// (case-insensitive); otherwise the option whose text prefixes the reply;
/// otherwise no selection. Never throws on model text.
std::optional<std::string> parse_mcq_choice(const std::string& reply,
                                            const std::vector<McqOption>& options);

/// The exact prompt answer_mcq sends: retrieval on the bare question per
/// mode, options appended to the question block. Exposed so replay
/// fixtures can be authored against the real prompt bytes.
AssembledInput build_mcq_input(const std::string& question,
                               const std::vector<McqOption>& options,
                               const GenerationConfig& config, const PipelineDeps& deps);

/// Retrieval per mode (llm_only none, rag document snippets, kg_rag the
/// union with linearized neighborhoods), then one chat call.
Answer answer_mcq(const std::string& question, const std::vector<McqOption>& options,
                  const GenerationConfig& config, const PipelineDeps& deps);

/// llm_only puts the document itself in the question block. rag/kg_rag
/// chunk the document into candidate snippets (kg_rag adds neighborhoods of
/// entities the document mentions), rank them against the document text and
/// prompt with the summarization instruction as the question.
Answer summarize(const Document& doc, const GenerationConfig& config, const PipelineDeps& deps);

namespace detail {
/// Mode-dispatched retrieval that yields zero snippets (rather than
/// erroring) when there is nothing to retrieve from.
std::vector<ScoredSnippet> retrieve_for_mode(const std::string& retrieval_query,
                                             const GenerationConfig& config,
                                             const PipelineDeps& deps);
}

}  // namespace kgrag
