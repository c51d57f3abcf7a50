// kgrag — build, query and evaluate the KG-RAG pipeline.
//
// Build commands:  ingest -> build-kg -> train-embeddings -> build-index
// Query commands:  query, answer, summarize, evaluate, report

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kgrag/embedding.hpp"
#include "kgrag/errors.hpp"
#include "kgrag/evaluation.hpp"
#include "kgrag/extract.hpp"
#include "kgrag/generation.hpp"
#include "kgrag/io.hpp"
#include "kgrag/kg.hpp"
#include "kgrag/llm_client.hpp"
#include "kgrag/parallel.hpp"
#include "kgrag/retrieval.hpp"
#include "kgrag/text.hpp"

namespace {

using namespace kgrag;

ScoringWeights parse_weights(const std::string& spec) {
    ScoringWeights w;
    double a = 0, b = 0, c = 0;
    char extra = 0;
    if (std::sscanf(spec.c_str(), "%lf,%lf,%lf%c", &a, &b, &c, &extra) != 3) {
        raise("invalid-argument", "--weights expects three comma-separated numbers, got: " + spec);
    }
    w.sim = a;
    w.tfidf = b;
    w.em = c;
    return w;
}

// Options shared by the commands that talk to an LLM or retrieve.
struct CommonOpts {
    std::string config_path;
    std::string mode = "kg_rag";
    std::size_t k = 0;
    std::size_t hops = 0;
    std::string weights;
    std::string mock_dir;
    std::string endpoint;
    std::string model;
    std::size_t budget = 0;
    std::size_t parallelism = 0;
    std::uint64_t seed = 0;

    CLI::Option* mode_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* hops_opt = nullptr;
    CLI::Option* weights_opt = nullptr;
    CLI::Option* budget_opt = nullptr;
    CLI::Option* parallelism_opt = nullptr;
    CLI::Option* seed_opt = nullptr;

    void attach(CLI::App* cmd, bool with_llm = true) {
        cmd->add_option("--config", config_path, "Run-config JSON file");
        mode_opt = cmd->add_option("--mode", mode, "llm_only, rag or kg_rag");
        k_opt = cmd->add_option("--k", k, "Snippets to retrieve");
        hops_opt = cmd->add_option("--hops", hops, "Subgraph expansion radius");
        weights_opt = cmd->add_option("--weights", weights, "sim,tfidf,em scoring weights");
        seed_opt = cmd->add_option("--seed", seed, "Deterministic seed");
        if (with_llm) {
            cmd->add_option("--mock", mock_dir, "Strict fixture-replay directory (no network)");
            cmd->add_option("--endpoint", endpoint, "OpenAI-compatible base URL");
            cmd->add_option("--model", model, "Model name");
            budget_opt = cmd->add_option("--budget", budget, "Prompt budget in approx tokens");
            parallelism_opt = cmd->add_option("--parallelism", parallelism, "Concurrent LLM calls");
        }
    }

    RunConfig resolve() const {
        RunConfig rc;
        if (!config_path.empty()) rc = load_run_config(config_path);
        if (mode_opt && mode_opt->count()) rc.generation.mode = mode_from_name(mode);
        if (k_opt && k_opt->count()) rc.generation.top_k = k;
        if (hops_opt && hops_opt->count()) rc.generation.hops = hops;
        if (weights_opt && weights_opt->count()) rc.generation.weights = parse_weights(weights);
        if (budget_opt && budget_opt->count()) rc.generation.input_token_budget = budget;
        if (parallelism_opt && parallelism_opt->count()) rc.generation.parallelism = parallelism;
        if (seed_opt && seed_opt->count()) rc.train.seed = seed;
        if (!endpoint.empty()) rc.client.base_url = endpoint;
        if (!model.empty()) rc.client.model = model;
        return rc;
    }

    std::unique_ptr<LLMClient> make_client(const RunConfig& rc) const {
        if (!mock_dir.empty()) return std::make_unique<MockLLMClient>(mock_dir, /*strict=*/true);
        return std::make_unique<HttpLLMClient>(rc.client);
    }
};

HashedEncoder encoder_for_index(const VectorIndex& index) {
    HashedEncoder encoder(index.dim());
    if (encoder.id() != index.encoder_id()) {
        raise("version-mismatch", "index was built with encoder '" + index.encoder_id() +
                                      "', this binary provides '" + encoder.id() + "'");
    }
    return encoder;
}

std::vector<KnowledgeSnippet> snippets_from_chunks(const std::vector<Chunk>& chunks,
                                                   const KnowledgeGraph* graph) {
    std::vector<KnowledgeSnippet> snippets;
    snippets.reserve(chunks.size());
    for (const Chunk& c : chunks) {
        KnowledgeSnippet s;
        s.id = "doc:" + c.doc_id + ":" + std::to_string(c.index);
        s.text = c.text;
        s.source = SnippetSource::document_chunk;
        if (graph) s.linked_entities = graph->match_entities(c.text);
        snippets.push_back(std::move(s));
    }
    return snippets;
}

nlohmann::json answer_to_json(const Answer& answer) {
    nlohmann::json j{{"mode", mode_name(answer.mode)},
                     {"text", answer.raw_text},
                     {"retrieved", answer.retrieved}};
    if (answer.selected_option) j["selected_option"] = *answer.selected_option;
    return j;
}

void emit(const std::string& body, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << body;
        if (!body.empty() && body.back() != '\n') std::cout << "\n";
    } else {
        std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
        if (!out) raise("unreadable-file", "cannot write " + out_path);
        out << body;
    }
}

int run(int argc, char** argv) {
    CLI::App app{"Knowledge-graph-augmented retrieval and evaluation pipeline"};
    app.require_subcommand(1);

    // ---- ingest ----------------------------------------------------------
    auto* ingest = app.add_subcommand("ingest", "Chunk a corpus into a chunk store");
    std::string ingest_manifest, ingest_out;
    std::size_t ingest_max_chars = 0, ingest_overlap = 0;
    bool ingest_dry = false;
    CommonOpts ingest_opts;
    ingest->add_option("--manifest", ingest_manifest, "Corpus manifest JSON")->required();
    ingest->add_option("--out", ingest_out, "Chunk store output path");
    auto* ingest_mc = ingest->add_option("--max-chars", ingest_max_chars, "Chunk size");
    auto* ingest_ov = ingest->add_option("--overlap", ingest_overlap, "Chunk overlap");
    ingest->add_flag("--dry-run", ingest_dry, "Validate without writing");
    ingest->add_option("--config", ingest_opts.config_path, "Run-config JSON file");
    ingest->callback([&] {
        RunConfig rc;
        if (!ingest_opts.config_path.empty()) rc = load_run_config(ingest_opts.config_path);
        if (ingest_mc->count()) rc.chunking.max_chars = ingest_max_chars;
        if (ingest_ov->count()) rc.chunking.overlap = ingest_overlap;
        auto docs = load_corpus(load_manifest(ingest_manifest));
        std::vector<Chunk> chunks;
        for (const auto& doc : docs) {
            auto doc_chunks = chunk_document(doc, rc.chunking);
            chunks.insert(chunks.end(), doc_chunks.begin(), doc_chunks.end());
        }
        std::cerr << "ingested " << docs.size() << " documents into " << chunks.size()
                  << " chunks\n";
        if (ingest_dry) {
            std::cout << "dry-run ok\n";
            return;
        }
        if (ingest_out.empty()) raise("invalid-argument", "--out is required unless --dry-run");
        save_chunks(chunks, ingest_out);
    });

    // ---- build-kg --------------------------------------------------------
    auto* build_kg = app.add_subcommand("build-kg", "Extract entities/relations into a KG");
    std::string bk_chunks, bk_gazetteer, bk_patterns, bk_out, bk_extractor = "rule";
    bool bk_dry = false;
    CommonOpts bk_opts;
    build_kg->add_option("--chunks", bk_chunks, "Chunk store")->required();
    build_kg->add_option("--extractor", bk_extractor, "rule or llm");
    build_kg->add_option("--gazetteer", bk_gazetteer, "surface<TAB>type file (rule extractor)");
    build_kg->add_option("--patterns", bk_patterns, "label<TAB>regex file (rule extractor)");
    build_kg->add_option("--out", bk_out, "KG snapshot output path");
    build_kg->add_flag("--dry-run", bk_dry, "Validate without writing");
    bk_opts.attach(build_kg);
    build_kg->callback([&] {
        RunConfig rc = bk_opts.resolve();
        auto chunks = load_chunks(bk_chunks);

        std::unique_ptr<LLMClient> client;
        std::unique_ptr<Extractor> extractor;
        if (bk_extractor == "rule") {
            if (bk_gazetteer.empty() || bk_patterns.empty()) {
                raise("invalid-argument", "rule extractor needs --gazetteer and --patterns");
            }
            extractor = std::make_unique<RuleBasedExtractor>(
                RuleBasedExtractor::from_files(bk_gazetteer, bk_patterns));
        } else if (bk_extractor == "llm") {
            client = bk_opts.make_client(rc);
            extractor = std::make_unique<LlmExtractor>(*client);
        } else {
            raise("invalid-argument", "unknown extractor: " + bk_extractor);
        }

        // Chunk extractions are independent; bound the request fan-out.
        std::vector<Extraction> extractions =
            parallel_map(chunks, rc.generation.parallelism,
                         [&](const Chunk& chunk) { return extractor->extract(chunk); });

        KnowledgeGraph graph;
        MergeReport report = merge_into_graph(graph, extractions);
        nlohmann::json rj{{"entities_added", report.entities_added},
                          {"entities_merged", report.entities_merged},
                          {"triples_added", report.triples_added},
                          {"triples_duplicate", report.triples_duplicate}};
        std::cout << rj.dump() << "\n";
        if (bk_dry) {
            std::cout << "dry-run ok\n";
            return;
        }
        if (bk_out.empty()) raise("invalid-argument", "--out is required unless --dry-run");
        save_kg(graph, bk_out);
    });

    // ---- train-embeddings ------------------------------------------------
    auto* train_cmd = app.add_subcommand("train-embeddings", "Train translational embeddings");
    std::string tr_kg, tr_out, tr_corruption;
    std::size_t tr_dim = 0, tr_epochs = 0, tr_batch = 0, tr_negatives = 0;
    double tr_margin = 0, tr_lr = 0;
    bool tr_dry = false;
    CommonOpts tr_opts;
    train_cmd->add_option("--kg", tr_kg, "KG snapshot")->required();
    train_cmd->add_option("--out", tr_out, "Embedding snapshot output path");
    auto* tr_dim_o = train_cmd->add_option("--dim", tr_dim, "Embedding dimension");
    auto* tr_margin_o = train_cmd->add_option("--margin", tr_margin, "Ranking margin");
    auto* tr_lr_o = train_cmd->add_option("--lr", tr_lr, "Learning rate");
    auto* tr_epochs_o = train_cmd->add_option("--epochs", tr_epochs, "Training epochs");
    auto* tr_batch_o = train_cmd->add_option("--batch-size", tr_batch, "Mini-batch size");
    auto* tr_neg_o = train_cmd->add_option("--negatives", tr_negatives, "Negatives per positive");
    auto* tr_corr_o =
        train_cmd->add_option("--corruption", tr_corruption, "tail_only or head_or_tail");
    train_cmd->add_flag("--dry-run", tr_dry, "Validate without writing");
    tr_opts.attach(train_cmd, /*with_llm=*/false);
    train_cmd->callback([&] {
        RunConfig rc = tr_opts.resolve();
        if (tr_dim_o->count()) rc.train.dim = tr_dim;
        if (tr_margin_o->count()) rc.train.margin = tr_margin;
        if (tr_lr_o->count()) rc.train.learning_rate = tr_lr;
        if (tr_epochs_o->count()) rc.train.epochs = tr_epochs;
        if (tr_batch_o->count()) rc.train.batch_size = tr_batch;
        if (tr_neg_o->count()) rc.train.negatives_per_positive = tr_negatives;
        if (tr_corr_o->count()) {
            if (tr_corruption == "tail_only") {
                rc.train.corruption = Corruption::tail_only;
            } else if (tr_corruption == "head_or_tail") {
                rc.train.corruption = Corruption::head_or_tail;
            } else {
                raise("invalid-argument", "unknown corruption mode: " + tr_corruption);
            }
        }

        KnowledgeGraph graph = load_kg(tr_kg);
        auto [table, stats] = train(graph, rc.train);
        nlohmann::json sj{{"epochs", stats.epoch_mean_loss.size()},
                          {"final_loss", stats.final_loss},
                          {"elapsed_ms", stats.elapsed.count()},
                          {"epoch_mean_loss", stats.epoch_mean_loss}};
        std::cout << sj.dump() << "\n";
        if (tr_dry) {
            std::cout << "dry-run ok\n";
            return;
        }
        if (tr_out.empty()) raise("invalid-argument", "--out is required unless --dry-run");
        save_embeddings(table, tr_out);
    });

    // ---- build-index -----------------------------------------------------
    auto* build_index_cmd = app.add_subcommand("build-index", "Encode chunks into a vector index");
    std::string bi_chunks, bi_kg, bi_out;
    std::size_t bi_dim = 0;
    bool bi_dry = false;
    std::string bi_config;
    build_index_cmd->add_option("--chunks", bi_chunks, "Chunk store")->required();
    build_index_cmd->add_option("--kg", bi_kg, "KG snapshot for entity linking (optional)");
    build_index_cmd->add_option("--out", bi_out, "Index snapshot output path");
    auto* bi_dim_o = build_index_cmd->add_option("--encoder-dim", bi_dim, "Encoder dimension");
    build_index_cmd->add_flag("--dry-run", bi_dry, "Validate without writing");
    build_index_cmd->add_option("--config", bi_config, "Run-config JSON file");
    build_index_cmd->callback([&] {
        RunConfig rc;
        if (!bi_config.empty()) rc = load_run_config(bi_config);
        if (bi_dim_o->count()) rc.encoder_dim = bi_dim;

        auto chunks = load_chunks(bi_chunks);
        std::optional<KnowledgeGraph> graph;
        if (!bi_kg.empty()) graph = load_kg(bi_kg);
        HashedEncoder encoder(rc.encoder_dim);
        VectorIndex index =
            build_index(snippets_from_chunks(chunks, graph ? &*graph : nullptr), encoder);
        std::cerr << "indexed " << index.size() << " snippets (" << encoder.id() << ")\n";
        if (bi_dry) {
            std::cout << "dry-run ok\n";
            return;
        }
        if (bi_out.empty()) raise("invalid-argument", "--out is required unless --dry-run");
        save_index(index, bi_out);
    });

    // ---- query -----------------------------------------------------------
    auto* query_cmd = app.add_subcommand("query", "Rank snippets for a query (no LLM)");
    std::string q_index, q_kg, q_text;
    CommonOpts q_opts;
    query_cmd->add_option("query", q_text, "Query text")->required();
    query_cmd->add_option("--index", q_index, "Index snapshot")->required();
    query_cmd->add_option("--kg", q_kg, "KG snapshot (enables kg snippets and EM)");
    q_opts.attach(query_cmd, /*with_llm=*/false);
    query_cmd->callback([&] {
        RunConfig rc = q_opts.resolve();
        VectorIndex index = load_index(q_index);
        HashedEncoder encoder = encoder_for_index(index);
        std::vector<ScoredSnippet> hits;
        std::optional<KnowledgeGraph> graph;
        if (!q_kg.empty()) {
            graph = load_kg(q_kg);
            hits = retrieve_for_query(q_text, *graph, index, encoder, rc.generation.top_k,
                                      rc.generation.weights, rc.generation.hops);
        } else {
            hits = retrieve_top_k(q_text, index, encoder, nullptr, rc.generation.top_k,
                                  rc.generation.weights);
        }
        std::size_t rank = 1;
        for (const auto& hit : hits) {
            nlohmann::json line{{"rank", rank++},
                                {"id", hit.snippet.id},
                                {"score", hit.score},
                                {"sim", hit.parts.sim},
                                {"tfidf", hit.parts.tfidf},
                                {"em", hit.parts.em},
                                {"text", hit.snippet.text}};
            std::cout << line.dump() << "\n";
        }
    });

    // ---- answer ----------------------------------------------------------
    auto* answer_cmd = app.add_subcommand("answer", "Answer one multiple-choice question");
    std::string an_index, an_kg, an_question, an_out;
    std::vector<std::string> an_options;
    CommonOpts an_opts;
    answer_cmd->add_option("--question", an_question, "Question text")->required();
    answer_cmd
        ->add_option("--option", an_options, "Option as LABEL:text (repeat per option)")
        ->required();
    answer_cmd->add_option("--index", an_index, "Index snapshot");
    answer_cmd->add_option("--kg", an_kg, "KG snapshot");
    answer_cmd->add_option("--out", an_out, "Write the answer JSON here instead of stdout");
    an_opts.attach(answer_cmd);
    answer_cmd->callback([&] {
        RunConfig rc = an_opts.resolve();
        std::vector<McqOption> options;
        for (const auto& spec : an_options) {
            auto colon = spec.find(':');
            if (colon == std::string::npos || colon == 0) {
                raise("invalid-argument", "--option expects LABEL:text, got: " + spec);
            }
            options.push_back({spec.substr(0, colon), spec.substr(colon + 1)});
        }
        std::optional<KnowledgeGraph> graph;
        std::optional<VectorIndex> index;
        std::optional<HashedEncoder> encoder;
        if (!an_kg.empty()) graph = load_kg(an_kg);
        if (!an_index.empty()) {
            index = load_index(an_index);
            encoder = encoder_for_index(*index);
        } else {
            encoder = HashedEncoder(rc.encoder_dim);
        }
        auto client = an_opts.make_client(rc);
        PipelineDeps deps{graph ? &*graph : nullptr, index ? &*index : nullptr, &*encoder,
                          client.get()};
        Answer answer = answer_mcq(an_question, options, rc.generation, deps);
        emit(answer_to_json(answer).dump(2), an_out);
    });

    // ---- summarize -------------------------------------------------------
    auto* summ_cmd = app.add_subcommand("summarize", "Summarize one document");
    std::string sm_doc, sm_text, sm_kg, sm_index, sm_out;
    CommonOpts sm_opts;
    summ_cmd->add_option("--doc", sm_doc, "Document file");
    summ_cmd->add_option("--text", sm_text, "Inline document text");
    summ_cmd->add_option("--kg", sm_kg, "KG snapshot");
    summ_cmd->add_option("--index", sm_index, "Index snapshot");
    summ_cmd->add_option("--out", sm_out, "Write the summary JSON here instead of stdout");
    sm_opts.attach(summ_cmd);
    summ_cmd->callback([&] {
        RunConfig rc = sm_opts.resolve();
        if (sm_doc.empty() == sm_text.empty()) {
            raise("invalid-argument", "need exactly one of --doc or --text");
        }
        Document doc = sm_doc.empty()
                           ? Document("inline", sm_text)
                           : Document(sm_doc, [&] {
                                 std::ifstream in(sm_doc, std::ios::binary);
                                 if (!in) raise("unreadable-file", "cannot open " + sm_doc);
                                 std::ostringstream buf;
                                 buf << in.rdbuf();
                                 return buf.str();
                             }());
        std::optional<KnowledgeGraph> graph;
        std::optional<VectorIndex> index;
        std::optional<HashedEncoder> encoder;
        if (!sm_kg.empty()) graph = load_kg(sm_kg);
        if (!sm_index.empty()) {
            index = load_index(sm_index);
            encoder = encoder_for_index(*index);
        } else {
            encoder = HashedEncoder(rc.encoder_dim);
        }
        auto client = sm_opts.make_client(rc);
        PipelineDeps deps{graph ? &*graph : nullptr, index ? &*index : nullptr, &*encoder,
                          client.get()};
        Answer answer = summarize(doc, rc.generation, deps);
        emit(answer_to_json(answer).dump(2), sm_out);
    });

    // ---- evaluate ----------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a dataset under one mode");
    std::string ev_task, ev_dataset, ev_index, ev_kg, ev_out, ev_label;
    CommonOpts ev_opts;
    eval_cmd->add_option("--task", ev_task, "qa or summarization")->required();
    eval_cmd->add_option("--dataset", ev_dataset, "Dataset JSONL")->required();
    eval_cmd->add_option("--index", ev_index, "Index snapshot");
    eval_cmd->add_option("--kg", ev_kg, "KG snapshot");
    eval_cmd->add_option("--out", ev_out, "Report JSON output path (default stdout)");
    eval_cmd->add_option("--label", ev_label, "Dataset label for tables (default: dataset path)");
    ev_opts.attach(eval_cmd);
    eval_cmd->callback([&] {
        RunConfig rc = ev_opts.resolve();
        std::optional<KnowledgeGraph> graph;
        std::optional<VectorIndex> index;
        std::optional<HashedEncoder> encoder;
        if (!ev_kg.empty()) graph = load_kg(ev_kg);
        if (!ev_index.empty()) {
            index = load_index(ev_index);
            encoder = encoder_for_index(*index);
        } else {
            encoder = HashedEncoder(rc.encoder_dim);
        }
        auto client = ev_opts.make_client(rc);
        PipelineDeps deps{graph ? &*graph : nullptr, index ? &*index : nullptr, &*encoder,
                          client.get()};
        std::string label = ev_label.empty() ? ev_dataset : ev_label;

        EvalReport report;
        if (ev_task == "qa") {
            report = evaluate_qa(load_mcq(ev_dataset), rc.generation, deps, label);
        } else if (ev_task == "summarization") {
            report = evaluate_summarization(load_summarization(ev_dataset), rc.generation, deps,
                                            label);
        } else {
            raise("invalid-argument", "unknown task: " + ev_task);
        }

        if (ev_out.empty()) {
            // Keep stdout valid JSON; the rendered table goes to stderr.
            std::cout << report_to_json(report).dump(2) << "\n";
            std::cerr << render_reports({report});
        } else {
            save_report(report, ev_out);
            std::cout << render_reports({report});
        }
        ChatUsage usage = llm_usage_totals();
        std::cerr << "llm usage: prompt_tokens=" << usage.prompt_tokens
                  << " completion_tokens=" << usage.completion_tokens << "\n";
    });

    // ---- report ------------------------------------------------------------
    auto* report_cmd = app.add_subcommand("report", "Compare evaluation reports side by side");
    std::vector<std::string> rp_paths;
    report_cmd->add_option("reports", rp_paths, "EvalReport JSON files")->required();
    report_cmd->callback([&] {
        std::vector<EvalReport> reports;
        reports.reserve(rp_paths.size());
        for (const auto& p : rp_paths) reports.push_back(load_report(p));
        std::cout << render_reports(reports);
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const kgrag::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
}
