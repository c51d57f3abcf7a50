#include "kgrag/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>

#include "kgrag/errors.hpp"
#include "kgrag/parallel.hpp"
#include "kgrag/text.hpp"

namespace kgrag {

namespace {

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

using Bigram = std::pair<std::string, std::string>;

template <typename Key>
double clipped_overlap_recall(const std::vector<Key>& cand, const std::vector<Key>& ref) {
    std::map<Key, std::size_t> ref_counts;
    for (const auto& g : ref) ++ref_counts[g];
    std::map<Key, std::size_t> cand_counts;
    for (const auto& g : cand) ++cand_counts[g];
    std::size_t overlap = 0;
    for (const auto& [g, rc] : ref_counts) {
        auto it = cand_counts.find(g);
        if (it != cand_counts.end()) overlap += std::min(rc, it->second);
    }
    return static_cast<double>(overlap) / static_cast<double>(ref.size());
}

std::vector<Bigram> bigrams(const std::vector<std::string>& tokens) {
    std::vector<Bigram> out;
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) out.push_back({tokens[i], tokens[i + 1]});
    return out;
}

}  // namespace

double rouge(const std::string& candidate, const std::string& reference, RougeVariant variant) {
    auto cand = text::tokenize(candidate);
    auto ref = text::tokenize(reference);
    if (ref.empty()) raise("empty-reference", "reference has no tokens");

    switch (variant) {
        case RougeVariant::rouge1:
            return clipped_overlap_recall(cand, ref);
        case RougeVariant::rouge2: {
            if (ref.size() < 2) {
                raise("reference-too-short", "rouge2 needs at least 2 reference tokens");
            }
            return clipped_overlap_recall(bigrams(cand), bigrams(ref));
        }
        case RougeVariant::rougeL:
            return static_cast<double>(lcs_length(cand, ref)) / static_cast<double>(ref.size());
    }
    return 0.0;
}

double accuracy(const std::vector<std::optional<std::string>>& predictions,
                const std::vector<std::string>& gold) {
    if (predictions.size() != gold.size()) {
        raise("length-mismatch", "predictions and gold differ in length");
    }
    if (gold.empty()) raise("length-mismatch", "accuracy over empty inputs");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (predictions[i].has_value() && *predictions[i] == gold[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(gold.size());
}

const char* difficulty_name(Difficulty d) {
    switch (d) {
        case Difficulty::easy:
            return "easy";
        case Difficulty::intermediate:
            return "intermediate";
        case Difficulty::hard:
            return "hard";
        case Difficulty::unspecified:
            return "unspecified";
    }
    return "unspecified";
}

Difficulty difficulty_from_name(std::string_view name) {
    if (name == "easy") return Difficulty::easy;
    if (name == "intermediate" || name == "medium") return Difficulty::intermediate;
    if (name == "hard") return Difficulty::hard;
    if (name == "unspecified" || name.empty()) return Difficulty::unspecified;
    raise("invariant-violation", "unknown difficulty: " + std::string(name));
}

namespace {

// Per-item wall clock goes to stderr only; timings in the report itself
// would break byte-identical reruns.
void log_item_elapsed(const std::string& id,
                      std::chrono::steady_clock::time_point started) {
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - started)
                  .count();
    std::string line = "[kgrag] item " + id + " took " + std::to_string(ms) + "ms\n";
    std::cerr << line;
}

MetricStat stat_of(const std::vector<double>& xs) {
    MetricStat s;
    s.n = xs.size();
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double sq = 0.0;
        for (double x : xs) sq += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(sq / static_cast<double>(xs.size() - 1));
    }
    return s;
}

nlohmann::json per_item_to_json(const PerItem& item) {
    nlohmann::json j{{"id", item.id},
                     {"prediction", item.prediction},
                     {"expected", item.expected},
                     {"scores", item.scores}};
    if (item.failed) {
        j["failed"] = true;
        j["error"] = item.error;
    }
    return j;
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [name, stat] : report.metrics) {
        metrics[name] = {{"mean", stat.mean}, {"std", stat.stddev}, {"n", stat.n}};
    }
    nlohmann::json per_item = nlohmann::json::array();
    for (const auto& item : report.per_item) per_item.push_back(per_item_to_json(item));
    nlohmann::json j{{"task", report.task},       {"mode", report.mode},
                     {"dataset", report.dataset}, {"metrics", metrics},
                     {"per_item", per_item},      {"failures", report.failures},
                     {"config", report.config}};
    if (!report.difficulty_breakdown.empty()) j["breakdown"] = report.difficulty_breakdown;
    return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport report;
    try {
        report.task = j.at("task").get<std::string>();
        report.mode = j.at("mode").get<std::string>();
        report.dataset = j.at("dataset").get<std::string>();
        for (const auto& [name, stat] : j.at("metrics").items()) {
            report.metrics[name] = MetricStat{stat.at("mean").get<double>(),
                                              stat.at("std").get<double>(),
                                              stat.at("n").get<std::size_t>()};
        }
        if (j.contains("breakdown")) {
            for (const auto& [name, v] : j.at("breakdown").items()) {
                report.difficulty_breakdown[name] = v.get<double>();
            }
        }
        for (const auto& item : j.at("per_item")) {
            PerItem p;
            p.id = item.at("id").get<std::string>();
            p.prediction = item.at("prediction").get<std::string>();
            p.expected = item.at("expected").get<std::string>();
            for (const auto& [name, v] : item.at("scores").items()) {
                p.scores[name] = v.get<double>();
            }
            p.failed = item.value("failed", false);
            p.error = item.value("error", std::string{});
            report.per_item.push_back(std::move(p));
        }
        report.failures = j.at("failures").get<std::size_t>();
        report.config = j.value("config", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        raise("parse-error", std::string("malformed report: ") + e.what());
    }
    return report;
}

nlohmann::json generation_config_to_json(const GenerationConfig& config) {
    return {{"mode", mode_name(config.mode)},
            {"top_k", config.top_k},
            {"hops", config.hops},
            {"temperature", config.temperature},
            {"max_output_tokens", config.max_output_tokens},
            {"weights",
             {{"sim", config.weights.sim}, {"tfidf", config.weights.tfidf},
              {"em", config.weights.em}}},
            {"input_token_budget", config.input_token_budget},
            {"chunking",
             {{"max_chars", config.chunking.max_chars}, {"overlap", config.chunking.overlap}}},
            {"parallelism", config.parallelism}};
}

EvalReport evaluate_summarization(const std::vector<SummarizationExample>& dataset,
                                  const GenerationConfig& config, const PipelineDeps& deps,
                                  const std::string& dataset_label) {
    if (dataset.empty()) raise("invalid-argument", "empty summarization dataset");

    auto items = parallel_map(dataset, config.parallelism, [&](const SummarizationExample& ex) {
        PerItem item;
        item.id = ex.id;
        item.expected = ex.reference;
        auto started = std::chrono::steady_clock::now();
        try {
            Answer answer = summarize(ex.document, config, deps);
            item.prediction = answer.raw_text;
            item.scores["rouge1"] = rouge(answer.raw_text, ex.reference, RougeVariant::rouge1);
            item.scores["rouge2"] = rouge(answer.raw_text, ex.reference, RougeVariant::rouge2);
            item.scores["rougeL"] = rouge(answer.raw_text, ex.reference, RougeVariant::rougeL);
        } catch (const Error& e) {
            item.failed = true;
            item.error = e.what();
        }
        log_item_elapsed(ex.id, started);
        return item;
    });

    EvalReport report;
    report.task = "summarization";
    report.mode = mode_name(config.mode);
    report.dataset = dataset_label;
    report.config = generation_config_to_json(config);
    std::map<std::string, std::vector<double>> columns;
    for (const auto& item : items) {
        if (item.failed) {
            ++report.failures;
        } else {
            for (const auto& [name, score] : item.scores) columns[name].push_back(score);
        }
        report.per_item.push_back(item);
    }
    for (const auto& [name, xs] : columns) report.metrics[name] = stat_of(xs);
    return report;
}

EvalReport evaluate_qa(const std::vector<MCQItem>& dataset, const GenerationConfig& config,
                       const PipelineDeps& deps, const std::string& dataset_label) {
    if (dataset.empty()) raise("invalid-argument", "empty qa dataset");

    struct QaResult {
        PerItem item;
        Difficulty difficulty = Difficulty::unspecified;
        bool correct = false;
    };
    auto results = parallel_map(dataset, config.parallelism, [&](const MCQItem& mcq) {
        QaResult r;
        r.item.id = mcq.id;
        r.item.expected = mcq.gold;
        r.difficulty = mcq.difficulty;
        auto started = std::chrono::steady_clock::now();
        try {
            Answer answer = answer_mcq(mcq.question, mcq.options, config, deps);
            r.item.prediction = answer.selected_option.value_or("");
            r.correct = answer.selected_option.has_value() && *answer.selected_option == mcq.gold;
            r.item.scores["correct"] = r.correct ? 1.0 : 0.0;
        } catch (const Error& e) {
            r.item.failed = true;
            r.item.error = e.what();
        }
        log_item_elapsed(mcq.id, started);
        return r;
    });

    EvalReport report;
    report.task = "qa";
    report.mode = mode_name(config.mode);
    report.dataset = dataset_label;
    report.config = generation_config_to_json(config);

    std::vector<double> indicator;
    std::map<Difficulty, std::pair<std::size_t, std::size_t>> buckets;  // correct, total
    for (const auto& r : results) {
        if (r.item.failed) {
            ++report.failures;
        } else {
            indicator.push_back(r.correct ? 1.0 : 0.0);
            if (r.difficulty != Difficulty::unspecified) {
                auto& [correct, total] = buckets[r.difficulty];
                if (r.correct) ++correct;
                ++total;
            }
        }
        report.per_item.push_back(r.item);
    }
    if (!indicator.empty()) report.metrics["accuracy"] = stat_of(indicator);
    for (const auto& [difficulty, bucket] : buckets) {
        report.difficulty_breakdown[difficulty_name(difficulty)] =
            static_cast<double>(bucket.first) / static_cast<double>(bucket.second);
    }
    return report;
}

namespace {

std::string display_mode(const std::string& mode) {
    if (mode == "llm_only") return "LLM-only";
    if (mode == "rag") return "RAG";
    if (mode == "kg_rag") return "KG-RAG";
    return mode;
}

std::string fmt2(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", x);
    return buf;
}

// Display width in code points (the ± in mean±std is two bytes wide).
std::size_t display_width(const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s) {
        if ((c & 0xC0) != 0x80) ++w;
    }
    return w;
}

std::string pad(const std::string& s, std::size_t width) {
    std::string out = s;
    std::size_t w = display_width(s);
    while (w++ < width) out.push_back(' ');
    return out;
}

std::string render_grid(const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) widths[c] = display_width(header[c]);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            widths[c] = std::max(widths[c], display_width(row[c]));
        }
    }
    std::string out;
    auto emit_row = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c > 0) out += " | ";
            out += pad(row[c], widths[c]);
        }
        out += "\n";
    };
    emit_row(header);
    std::string rule;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c > 0) rule += "-+-";
        rule += std::string(widths[c], '-');
    }
    out += rule + "\n";
    for (const auto& row : rows) emit_row(row);
    return out;
}

const std::vector<std::string> kModeOrder = {"llm_only", "rag", "kg_rag"};

}  // namespace

std::string render_qa_table(const std::vector<EvalReport>& reports) {
    // One column per dataset in first-appearance order, one row per mode.
    std::vector<std::string> datasets;
    for (const auto& r : reports) {
        if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end()) {
            datasets.push_back(r.dataset);
        }
    }
    std::map<std::pair<std::string, std::string>, double> cell;
    std::set<std::string> modes_present;
    for (const auto& r : reports) {
        auto it = r.metrics.find("accuracy");
        if (it == r.metrics.end()) continue;
        cell[{r.mode, r.dataset}] = it->second.mean;
        modes_present.insert(r.mode);
    }

    std::vector<std::string> header{"Model"};
    header.insert(header.end(), datasets.begin(), datasets.end());
    std::vector<std::vector<std::string>> rows;
    for (const auto& mode : kModeOrder) {
        if (!modes_present.count(mode)) continue;
        std::vector<std::string> row{display_mode(mode)};
        for (const auto& dataset : datasets) {
            auto it = cell.find({mode, dataset});
            row.push_back(it == cell.end() ? "-" : fmt2(it->second));
        }
        rows.push_back(std::move(row));
    }
    std::string out = render_grid(header, rows);

    // Accuracy by question difficulty, one table per dataset that has it.
    static const std::vector<std::string> kDifficultyOrder = {"easy", "intermediate", "hard"};
    for (const auto& dataset : datasets) {
        bool any = false;
        for (const auto& r : reports) {
            any |= r.dataset == dataset && !r.difficulty_breakdown.empty();
        }
        if (!any) continue;
        std::vector<std::string> dheader{"Model (" + dataset + ")"};
        dheader.insert(dheader.end(), kDifficultyOrder.begin(), kDifficultyOrder.end());
        std::vector<std::vector<std::string>> drows;
        for (const auto& mode : kModeOrder) {
            for (const auto& r : reports) {
                if (r.mode != mode || r.dataset != dataset || r.difficulty_breakdown.empty()) {
                    continue;
                }
                std::vector<std::string> row{display_mode(mode)};
                for (const auto& difficulty : kDifficultyOrder) {
                    auto it = r.difficulty_breakdown.find(difficulty);
                    row.push_back(it == r.difficulty_breakdown.end() ? "-" : fmt2(it->second));
                }
                drows.push_back(std::move(row));
            }
        }
        out += "\n" + render_grid(dheader, drows);
    }
    return out;
}

std::string render_summarization_table(const std::vector<EvalReport>& reports) {
    bool multiple_datasets = false;
    {
        std::set<std::string> names;
        for (const auto& r : reports) names.insert(r.dataset);
        multiple_datasets = names.size() > 1;
    }
    std::vector<std::string> header{"Model", "ROUGE-1", "ROUGE-2", "ROUGE-L"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& mode : kModeOrder) {
        for (const auto& r : reports) {
            if (r.mode != mode) continue;
            std::string label = display_mode(r.mode);
            if (multiple_datasets) label += " @ " + r.dataset;
            std::vector<std::string> row{label};
            for (const char* metric : {"rouge1", "rouge2", "rougeL"}) {
                auto it = r.metrics.find(metric);
                row.push_back(it == r.metrics.end()
                                  ? "-"
                                  : fmt2(it->second.mean) + "±" + fmt2(it->second.stddev));
            }
            rows.push_back(std::move(row));
        }
    }
    return render_grid(header, rows);
}

std::string render_reports(const std::vector<EvalReport>& reports) {
    std::vector<EvalReport> qa, summ;
    for (const auto& r : reports) (r.task == "qa" ? qa : summ).push_back(r);
    std::string out;
    if (!summ.empty()) out += render_summarization_table(summ);
    if (!qa.empty()) {
        if (!out.empty()) out += "\n";
        out += render_qa_table(qa);
    }
    return out;
}

}  // namespace kgrag
