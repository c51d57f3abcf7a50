#include "kgrag/generation.hpp"

#include <algorithm>

#include "kgrag/errors.hpp"
#include "kgrag/text.hpp"

namespace kgrag {

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::llm_only:
            return "llm_only";
        case Mode::rag:
            return "rag";
        case Mode::kg_rag:
            return "kg_rag";
    }
    return "llm_only";
}

Mode mode_from_name(std::string_view name) {
    if (name == "llm_only") return Mode::llm_only;
    if (name == "rag") return Mode::rag;
    if (name == "kg_rag") return Mode::kg_rag;
    raise("invalid-argument", "unknown mode: " + std::string(name) +
                                  " (expected llm_only, rag or kg_rag)");
}

namespace {

std::string render(std::string_view instruction,
                   const std::vector<const ScoredSnippet*>& kept, const std::string& query) {
    std::string out(instruction);
    out += "\n";
    for (std::size_t i = 0; i < kept.size(); ++i) {
        out += "\n### Knowledge [" + std::to_string(i + 1) + "] (" +
               snippet_source_name(kept[i]->snippet.source) + ")\n";
        out += kept[i]->snippet.text;
        out += "\n";
    }
    out += "\n### Question\n";
    out += query;
    out += "\n";
    return out;
}

}  // namespace

AssembledInput format_input(const std::string& query, const std::vector<ScoredSnippet>& snippets,
                            std::size_t token_budget, std::string_view instruction) {
    if (query.empty()) raise("empty-text", "query is empty");
    if (token_budget == 0) raise("invalid-argument", "token budget must be positive");

    std::vector<const ScoredSnippet*> kept;
    kept.reserve(snippets.size());
    for (const auto& s : snippets) kept.push_back(&s);
    std::sort(kept.begin(), kept.end(), [](const ScoredSnippet* a, const ScoredSnippet* b) {
        if (a->score != b->score) return a->score > b->score;
        return a->snippet.id < b->snippet.id;
    });

    AssembledInput input;
    input.query = query;
    input.token_budget = token_budget;
    for (;;) {
        input.rendered = render(instruction, kept, query);
        if (text::approx_token_count(input.rendered) <= token_budget) break;
        if (kept.empty()) {
            raise("budget-too-small",
                  "prompt exceeds budget of " + std::to_string(token_budget) +
                      " tokens even without snippets");
        }
        input.dropped.push_back(kept.back()->snippet.id);
        kept.pop_back();
    }
    for (const auto* s : kept) input.snippets.emplace_back(s->snippet.id, s->snippet.text);
    return input;
}

std::string generate(const AssembledInput& input, LLMClient& client,
                     const GenerationConfig& config) {
    ChatOptions options;
    options.temperature = config.temperature;
    options.max_tokens = config.max_output_tokens;
    return client.chat(std::string(kSystemPrompt), input.rendered, options).text;
}

std::optional<std::string> parse_mcq_choice(const std::string& reply,
                                            const std::vector<McqOption>& options) {
    // Pass 1: first standalone single-letter token naming an option.
    for (const auto& token : text::tokenize(reply)) {
        if (token.size() != 1) continue;
        for (const auto& option : options) {
            if (option.label.size() == 1 && text::to_lower(option.label)[0] == token[0]) {
                return option.label;
            }
        }
    }
    // Pass 2: option text as a prefix of the reply.
    std::string folded = text::to_lower(text::collapse_whitespace(reply));
    for (const auto& option : options) {
        std::string body = text::to_lower(text::collapse_whitespace(option.text));
        if (!body.empty() && folded.rfind(body, 0) == 0) return option.label;
    }
    return std::nullopt;
}

namespace detail {

std::vector<ScoredSnippet> retrieve_for_mode(const std::string& retrieval_query,
                                             const GenerationConfig& config,
                                             const PipelineDeps& deps) {
    switch (config.mode) {
        case Mode::llm_only:
            return {};
        case Mode::rag: {
            if (!deps.index || deps.index->empty() || !deps.encoder) return {};
            return retrieve_top_k(retrieval_query, *deps.index, *deps.encoder, nullptr,
                                  config.top_k, config.weights);
        }
        case Mode::kg_rag: {
            if (!deps.encoder) return {};
            const VectorIndex* index = deps.index;
            static const VectorIndex empty_index;
            if (!index) index = &empty_index;
            if (!deps.graph) {
                if (index->empty()) return {};
                return retrieve_top_k(retrieval_query, *index, *deps.encoder, nullptr,
                                      config.top_k, config.weights);
            }
            if (index->empty() &&
                detail::kg_snippets_for_query(retrieval_query, *deps.graph, config.hops).empty()) {
                return {};
            }
            return retrieve_for_query(retrieval_query, *deps.graph, *index, *deps.encoder,
                                      config.top_k, config.weights, config.hops);
        }
    }
    return {};
}

}  // namespace detail

namespace {

void require_client(const PipelineDeps& deps) {
    if (!deps.client) raise("invalid-argument", "no LLM client configured");
}

std::vector<std::string> snippet_ids(const std::vector<std::pair<std::string, std::string>>& s) {
    std::vector<std::string> ids;
    ids.reserve(s.size());
    for (const auto& [id, body] : s) {
        (void)body;
        ids.push_back(id);
    }
    return ids;
}

}  // namespace

AssembledInput build_mcq_input(const std::string& question,
                               const std::vector<McqOption>& options,
                               const GenerationConfig& config, const PipelineDeps& deps) {
    if (options.size() < 2) raise("invalid-argument", "multiple choice needs at least 2 options");
    {
        std::set<std::string> labels;
        for (const auto& o : options) {
            if (o.label.empty() || !labels.insert(o.label).second) {
                raise("invalid-argument", "option labels must be distinct and non-empty");
            }
        }
    }

    // Retrieval sees the bare question; the prompt shows the options too.
    auto retrieved = detail::retrieve_for_mode(question, config, deps);

    std::string query = question;
    for (const auto& option : options) {
        query += "\n" + option.label + ") " + option.text;
    }
    return format_input(query, retrieved, config.input_token_budget, kQaInstruction);
}

Answer answer_mcq(const std::string& question, const std::vector<McqOption>& options,
                  const GenerationConfig& config, const PipelineDeps& deps) {
    require_client(deps);
    AssembledInput input = build_mcq_input(question, options, config, deps);
    std::string reply = generate(input, *deps.client, config);

    Answer answer;
    answer.raw_text = reply;
    answer.selected_option = parse_mcq_choice(reply, options);
    answer.retrieved = snippet_ids(input.snippets);
    answer.mode = config.mode;
    return answer;
}

Answer summarize(const Document& doc, const GenerationConfig& config, const PipelineDeps& deps) {
    require_client(deps);

    AssembledInput input;
    if (config.mode == Mode::llm_only) {
        input = format_input(doc.text, {}, config.input_token_budget, kSummarizeInstruction);
    } else {
        // The document's own chunks are the candidate snippets; kg_rag adds
        // the neighborhoods of entities the document mentions. Candidates
        // are ranked against the document text so budget pressure keeps the
        // most representative ones.
        std::vector<KnowledgeSnippet> candidates;
        for (const auto& chunk : chunk_document(doc, config.chunking)) {
            KnowledgeSnippet s;
            s.id = "doc:" + doc.id + ":" + std::to_string(chunk.index);
            s.text = chunk.text;
            s.source = SnippetSource::document_chunk;
            if (config.mode == Mode::kg_rag && deps.graph) {
                s.linked_entities = deps.graph->match_entities(chunk.text);
            }
            candidates.push_back(std::move(s));
        }
        if (config.mode == Mode::kg_rag && deps.graph) {
            for (auto& s : detail::kg_snippets_for_query(doc.text, *deps.graph, config.hops)) {
                candidates.push_back(std::move(s));
            }
        }

        if (!deps.encoder) raise("invalid-argument", "no encoder configured");
        VectorIndex local = build_index(candidates, *deps.encoder);
        const KnowledgeGraph* graph = config.mode == Mode::kg_rag ? deps.graph : nullptr;
        auto scored = retrieve_top_k(doc.text, local, *deps.encoder, graph, config.top_k,
                                     config.weights);
        input = format_input(std::string(kSummarizeInstruction), scored,
                             config.input_token_budget, kKnowledgeTaskInstruction);
    }

    std::string reply = generate(input, *deps.client, config);

    Answer answer;
    answer.raw_text = reply;
    answer.retrieved = snippet_ids(input.snippets);
    answer.mode = config.mode;
    return answer;
}

}  // namespace kgrag
