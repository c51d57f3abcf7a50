#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgrag/extract.hpp"
#include "kgrag/generation.hpp"

namespace kgrag {

enum class RougeVariant { rouge1, rouge2, rougeL };

/// Recall-oriented overlap against the reference: clipped n-gram counts
/// over reference n-gram totals for rouge1/rouge2, LCS length over
/// reference token count for rougeL. Tokens are lowercase alphanumeric
/// runs.
double rouge(const std::string& candidate, const std::string& reference, RougeVariant variant);

/// Fraction of positions where the prediction is present and equals gold;
/// absent predictions count as incorrect.
double accuracy(const std::vector<std::optional<std::string>>& predictions,
                const std::vector<std::string>& gold);

enum class Difficulty { easy, intermediate, hard, unspecified };

const char* difficulty_name(Difficulty d);
/// Accepts the alias "medium" for intermediate; anything else unknown
/// throws.
Difficulty difficulty_from_name(std::string_view name);

struct MCQItem {
    std::string id;
    std::string question;
    std::vector<McqOption> options;
    std::string gold;  // an option label
    Difficulty difficulty = Difficulty::unspecified;
};

struct SummarizationExample {
    std::string id;
    Document document;
    std::string reference;
};

struct MetricStat {
    double mean = 0.0;
    double stddev = 0.0;  // sample (n-1); 0 when n == 1
    std::size_t n = 0;
};

struct PerItem {
    std::string id;
    std::string prediction;
    std::string expected;
    std::map<std::string, double> scores;
    bool failed = false;
    std::string error;
};

struct EvalReport {
    std::string task;     // "qa" | "summarization"
    std::string mode;     // "llm_only" | "rag" | "kg_rag"
    std::string dataset;  // label for table rendering
    std::map<std::string, MetricStat> metrics;
    std::map<std::string, double> difficulty_breakdown;  // qa only
    std::vector<PerItem> per_item;
    std::size_t failures = 0;
    nlohmann::json config;  // snapshot of the generation config
};

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

nlohmann::json generation_config_to_json(const GenerationConfig& config);

/// Run summarize per example and report ROUGE-1/2/L mean and sample
/// standard deviation. Failed generations are excluded from n and counted
/// in `failures`.
EvalReport evaluate_summarization(const std::vector<SummarizationExample>& dataset,
                                  const GenerationConfig& config, const PipelineDeps& deps,
                                  const std::string& dataset_label = "dataset");

/// Run answer_mcq per item: overall accuracy plus per-difficulty accuracy.
/// Items with unspecified difficulty appear only in the overall number.
EvalReport evaluate_qa(const std::vector<MCQItem>& dataset, const GenerationConfig& config,
                       const PipelineDeps& deps, const std::string& dataset_label = "dataset");

/// Plain-text tables: modes as rows. QA reports render one dataset column
/// each; summarization reports render ROUGE columns as mean±std.
std::string render_qa_table(const std::vector<EvalReport>& reports);
std::string render_summarization_table(const std::vector<EvalReport>& reports);
std::string render_reports(const std::vector<EvalReport>& reports);

}  // namespace kgrag
