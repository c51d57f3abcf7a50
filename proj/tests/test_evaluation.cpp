#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "kgrag/errors.hpp"
#include "kgrag/evaluation.hpp"
#include "kgrag/generation.hpp"
#include "kgrag/rng.hpp"
#include "kgrag/text.hpp"

using namespace kgrag;

namespace {

// Independent ROUGE oracle: multiset-intersection counts for n-grams, plus
// a naive recursive LCS (exponential, fine for short sequences). Shares
// only the tokenizer with the implementation.
double oracle_ngram_recall(const std::string& cand, const std::string& ref, std::size_t n) {
    auto grams = [n](const std::vector<std::string>& tokens) {
        std::vector<std::string> out;
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            std::string g;
            for (std::size_t j = 0; j < n; ++j) g += tokens[i + j] + "\x1f";
            out.push_back(g);
        }
        return out;
    };
    auto cand_grams = grams(text::tokenize(cand));
    auto ref_grams = grams(text::tokenize(ref));
    std::size_t overlap = 0;
    std::vector<bool> used(cand_grams.size(), false);
    for (const auto& g : ref_grams) {
        for (std::size_t i = 0; i < cand_grams.size(); ++i) {
            if (!used[i] && cand_grams[i] == g) {
                used[i] = true;
                ++overlap;
                break;
            }
        }
    }
    return static_cast<double>(overlap) / static_cast<double>(ref_grams.size());
}

std::size_t oracle_lcs(const std::vector<std::string>& a, const std::vector<std::string>& b,
                       std::size_t i, std::size_t j) {
    if (i == a.size() || j == b.size()) return 0;
    if (a[i] == b[j]) return 1 + oracle_lcs(a, b, i + 1, j + 1);
    return std::max(oracle_lcs(a, b, i + 1, j), oracle_lcs(a, b, i, j + 1));
}

double oracle_rouge_l(const std::string& cand, const std::string& ref) {
    auto a = text::tokenize(cand);
    auto b = text::tokenize(ref);
    return static_cast<double>(oracle_lcs(a, b, 0, 0)) / static_cast<double>(b.size());
}

class CannedClient : public LLMClient {
public:
    // Reply keyed by the first fragment found in the user prompt.
    std::map<std::string, std::string> by_fragment;
    std::string fallback = "Z";
    ChatResult chat(const std::string&, const std::string& user, const ChatOptions&) override {
        for (const auto& [fragment, reply] : by_fragment) {
            if (user.find(fragment) != std::string::npos) return {reply, {}};
        }
        return {fallback, {}};
    }
    std::string name() const override { return "canned"; }
};

MCQItem mcq(std::string id, std::string question, std::string gold, Difficulty difficulty) {
    MCQItem item;
    item.id = std::move(id);
    item.question = std::move(question);
    item.options = {{"A", "alpha"}, {"B", "beta"}, {"C", "gamma"}, {"D", "delta"}};
    item.gold = std::move(gold);
    item.difficulty = difficulty;
    return item;
}

}  // namespace

TEST_CASE("rouge identity and disjoint extremes") {
    std::string x = "the quick brown fox jumps";
    for (auto variant : {RougeVariant::rouge1, RougeVariant::rouge2, RougeVariant::rougeL}) {
        CHECK(rouge(x, x, variant) == 1.0);
        CHECK(rouge("completely different words here", x, variant) == 0.0);
    }
}

TEST_CASE("rouge worked example: clipped counts and LCS") {
    std::string cand = "the cat sat";
    std::string ref = "the cat sat on the mat";
    CHECK(rouge(cand, ref, RougeVariant::rouge1) == doctest::Approx(3.0 / 6.0).epsilon(1e-12));
    CHECK(rouge(cand, ref, RougeVariant::rouge2) == doctest::Approx(2.0 / 5.0).epsilon(1e-12));
    CHECK(rouge(cand, ref, RougeVariant::rougeL) == doctest::Approx(3.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("rouge error contracts") {
    CHECK_THROWS_WITH_AS(rouge("x", "", RougeVariant::rouge1),
                         doctest::Contains("empty-reference"), Error);
    CHECK_THROWS_WITH_AS(rouge("x", "...", RougeVariant::rouge1),
                         doctest::Contains("empty-reference"), Error);
    CHECK_THROWS_WITH_AS(rouge("x y", "single", RougeVariant::rouge2),
                         doctest::Contains("reference-too-short"), Error);
    // Empty candidate is fine: score 0.
    CHECK(rouge("", "some reference text", RougeVariant::rouge1) == 0.0);
}

TEST_CASE("rouge tracks the independent oracle on random token strings") {
    Rng rng(55);
    static const char* pool[] = {"a", "b", "c", "d", "e"};
    auto random_sentence = [&](std::size_t max_len) {
        std::size_t len = 1 + rng.uniform_int(max_len);
        std::string s;
        for (std::size_t i = 0; i < len; ++i) {
            if (i) s += " ";
            s += pool[rng.uniform_int(5)];
        }
        return s;
    };
    for (int round = 0; round < 100; ++round) {
        std::string cand = random_sentence(10);
        std::string ref = random_sentence(10);
        double r1 = rouge(cand, ref, RougeVariant::rouge1);
        CHECK(r1 == doctest::Approx(oracle_ngram_recall(cand, ref, 1)).epsilon(1e-12));
        CHECK(r1 >= 0.0);
        CHECK(r1 <= 1.0);
        if (text::tokenize(ref).size() >= 2) {
            double r2 = rouge(cand, ref, RougeVariant::rouge2);
            CHECK(r2 == doctest::Approx(oracle_ngram_recall(cand, ref, 2)).epsilon(1e-12));
            CHECK(r2 >= 0.0);
            CHECK(r2 <= 1.0);
        }
        double rl = rouge(cand, ref, RougeVariant::rougeL);
        CHECK(rl == doctest::Approx(oracle_rouge_l(cand, ref)).epsilon(1e-12));
        CHECK(rl >= 0.0);
        CHECK(rl <= 1.0);
    }
}

TEST_CASE("accuracy counts absent predictions as incorrect") {
    using Opt = std::optional<std::string>;
    CHECK(accuracy({Opt{"A"}, Opt{"B"}}, {"A", "B"}) == 1.0);
    CHECK(accuracy({Opt{}, Opt{}}, {"A", "B"}) == 0.0);
    CHECK(accuracy({Opt{"A"}, Opt{"B"}, Opt{"C"}, Opt{}}, {"A", "B", "X", "D"}) == 0.5);
    CHECK(accuracy({Opt{"A"}, Opt{"B"}, Opt{"C"}, Opt{"D"}}, {"A", "B", "C", "X"}) == 0.75);
    CHECK_THROWS_WITH_AS(accuracy({Opt{"A"}}, {"A", "B"}),
                         doctest::Contains("length-mismatch"), Error);
    CHECK_THROWS_WITH_AS(accuracy({}, {}), doctest::Contains("length-mismatch"), Error);

    SUBCASE("cross-check identity: accuracy = 1 - (errors + absences)/n") {
        Rng rng(66);
        for (int round = 0; round < 30; ++round) {
            std::size_t n = 1 + rng.uniform_int(20);
            std::vector<Opt> preds;
            std::vector<std::string> gold;
            std::size_t wrong = 0;
            for (std::size_t i = 0; i < n; ++i) {
                gold.push_back("G");
                switch (rng.uniform_int(3)) {
                    case 0:
                        preds.push_back(Opt{"G"});
                        break;
                    case 1:
                        preds.push_back(Opt{"X"});
                        ++wrong;
                        break;
                    default:
                        preds.push_back(Opt{});
                        ++wrong;
                        break;
                }
            }
            CHECK(accuracy(preds, gold) ==
                  doctest::Approx(1.0 - static_cast<double>(wrong) / n).epsilon(1e-12));
        }
    }
}

TEST_CASE("difficulty parsing accepts the medium alias") {
    CHECK(difficulty_from_name("easy") == Difficulty::easy);
    CHECK(difficulty_from_name("medium") == Difficulty::intermediate);
    CHECK(difficulty_from_name("intermediate") == Difficulty::intermediate);
    CHECK(difficulty_from_name("hard") == Difficulty::hard);
    CHECK(difficulty_from_name("") == Difficulty::unspecified);
    CHECK_THROWS_WITH_AS(difficulty_from_name("impossible"),
                         doctest::Contains("invariant-violation"), Error);
}

TEST_CASE("evaluate_summarization aggregates rouge with sample std") {
    CannedClient client;
    client.fallback = "echo";
    GenerationConfig config;
    config.mode = Mode::llm_only;
    config.parallelism = 1;
    PipelineDeps deps{nullptr, nullptr, nullptr, &client};

    SUBCASE("single item with candidate == reference scores 1.0 everywhere, std 0") {
        client.by_fragment["doc one body"] = "doc one body";
        std::vector<SummarizationExample> dataset{
            {"s1", Document("s1", "doc one body"), "doc one body"}};
        EvalReport report = evaluate_summarization(dataset, config, deps, "unit");
        CHECK(report.metrics.at("rouge1").mean == 1.0);
        CHECK(report.metrics.at("rouge2").mean == 1.0);
        CHECK(report.metrics.at("rougeL").mean == 1.0);
        CHECK(report.metrics.at("rouge1").stddev == 0.0);
        CHECK(report.metrics.at("rouge1").n == 1);
        CHECK(report.failures == 0);
    }
    SUBCASE("two items with rouge1 of 0.5 and 1.0 average to 0.75 +- 0.3536") {
        client.by_fragment["first document"] = "alpha beta";   // ref "alpha beta gamma delta"
        client.by_fragment["second document"] = "mu nu";       // ref "mu nu"
        std::vector<SummarizationExample> dataset{
            {"s1", Document("s1", "first document"), "alpha beta gamma delta"},
            {"s2", Document("s2", "second document"), "mu nu"}};
        EvalReport report = evaluate_summarization(dataset, config, deps, "unit");
        CHECK(report.metrics.at("rouge1").mean == doctest::Approx(0.75).epsilon(1e-12));
        CHECK(report.metrics.at("rouge1").stddev ==
              doctest::Approx(std::sqrt(0.125)).epsilon(1e-6));  // ~0.353553
        CHECK(report.metrics.at("rouge1").n == 2);
    }
    SUBCASE("per-item generation failures are excluded from n and counted") {
        // Budget so small the prompt cannot fit: every item fails.
        GenerationConfig tiny = config;
        tiny.input_token_budget = 1;
        std::vector<SummarizationExample> dataset{
            {"s1", Document("s1", "first document"), "alpha beta"}};
        EvalReport report = evaluate_summarization(dataset, tiny, deps, "unit");
        CHECK(report.failures == 1);
        CHECK(report.metrics.count("rouge1") == 0);
        REQUIRE(report.per_item.size() == 1);
        CHECK(report.per_item[0].failed);
        CHECK(report.per_item[0].error.find("budget-too-small") != std::string::npos);
    }
    SUBCASE("empty dataset is rejected") {
        CHECK_THROWS_WITH_AS(evaluate_summarization({}, config, deps, "unit"),
                             doctest::Contains("invalid-argument"), Error);
    }
}

TEST_CASE("evaluate_qa breaks accuracy down by difficulty") {
    CannedClient client;
    GenerationConfig config;
    config.mode = Mode::llm_only;
    config.parallelism = 2;
    PipelineDeps deps{nullptr, nullptr, nullptr, &client};

    SUBCASE("perfect answers give 1.0 overall and per difficulty") {
        client.fallback = "A";
        std::vector<MCQItem> dataset{mcq("q1", "first?", "A", Difficulty::easy),
                                     mcq("q2", "second?", "A", Difficulty::hard)};
        EvalReport report = evaluate_qa(dataset, config, deps, "unit");
        CHECK(report.metrics.at("accuracy").mean == 1.0);
        CHECK(report.difficulty_breakdown.at("easy") == 1.0);
        CHECK(report.difficulty_breakdown.at("hard") == 1.0);
    }
    SUBCASE("4 easy (3 right) + 2 hard (1 right): overall 4/6, easy 0.75, hard 0.5") {
        std::vector<MCQItem> dataset;
        for (int i = 0; i < 4; ++i) {
            dataset.push_back(
                mcq("e" + std::to_string(i), "easy " + std::to_string(i), "A", Difficulty::easy));
        }
        for (int i = 0; i < 2; ++i) {
            dataset.push_back(
                mcq("h" + std::to_string(i), "hard " + std::to_string(i), "B", Difficulty::hard));
        }
        client.fallback = "A";                  // right for easy, wrong for hard
        client.by_fragment["easy 3"] = "C";     // one easy wrong
        client.by_fragment["hard 0"] = "B";     // one hard right
        EvalReport report = evaluate_qa(dataset, config, deps, "unit");
        CHECK(report.metrics.at("accuracy").mean == doctest::Approx(4.0 / 6.0).epsilon(1e-12));
        CHECK(report.difficulty_breakdown.at("easy") == doctest::Approx(0.75));
        CHECK(report.difficulty_breakdown.at("hard") == doctest::Approx(0.5));
        CHECK(report.difficulty_breakdown.count("intermediate") == 0);
    }
    SUBCASE("unspecified difficulty only counts toward the overall number") {
        client.fallback = "A";
        std::vector<MCQItem> dataset{mcq("q1", "x?", "A", Difficulty::unspecified),
                                     mcq("q2", "y?", "A", Difficulty::easy)};
        EvalReport report = evaluate_qa(dataset, config, deps, "unit");
        CHECK(report.metrics.at("accuracy").n == 2);
        CHECK(report.difficulty_breakdown.size() == 1);
        CHECK(report.difficulty_breakdown.count("easy") == 1);
    }
    SUBCASE("overall accuracy equals the item-weighted mean of the buckets") {
        Rng rng(77);
        std::vector<MCQItem> dataset;
        for (int i = 0; i < 12; ++i) {
            Difficulty d = i % 3 == 0   ? Difficulty::easy
                           : i % 3 == 1 ? Difficulty::intermediate
                                        : Difficulty::hard;
            dataset.push_back(mcq("q" + std::to_string(i), "q " + std::to_string(i),
                                  rng.coin() ? "A" : "B", d));
        }
        client.fallback = "A";
        EvalReport report = evaluate_qa(dataset, config, deps, "unit");
        std::map<std::string, std::size_t> counts;
        for (const auto& item : dataset) ++counts[difficulty_name(item.difficulty)];
        double weighted = 0;
        for (const auto& [name, acc] : report.difficulty_breakdown) {
            weighted += acc * static_cast<double>(counts.at(name));
        }
        weighted /= static_cast<double>(dataset.size());
        CHECK(report.metrics.at("accuracy").mean == doctest::Approx(weighted).epsilon(1e-12));
    }
}

TEST_CASE("report json round-trip is lossless") {
    CannedClient client;
    client.fallback = "B";
    GenerationConfig config;
    config.mode = Mode::llm_only;
    PipelineDeps deps{nullptr, nullptr, nullptr, &client};
    std::vector<MCQItem> dataset{mcq("q1", "one?", "B", Difficulty::easy),
                                 mcq("q2", "two?", "A", Difficulty::intermediate)};
    EvalReport report = evaluate_qa(dataset, config, deps, "unit-ds");

    nlohmann::json j = report_to_json(report);
    EvalReport back = report_from_json(j);
    CHECK(report_to_json(back) == j);
    CHECK(back.task == report.task);
    CHECK(back.mode == report.mode);
    CHECK(back.per_item.size() == report.per_item.size());
    CHECK(back.metrics.at("accuracy").mean == report.metrics.at("accuracy").mean);
    CHECK(back.difficulty_breakdown == report.difficulty_breakdown);
}

TEST_CASE("table renderers mirror the published layouts") {
    // Reference values from the summary tables; layout check only.
    auto make_qa = [](const std::string& mode, const std::string& dataset, double acc) {
        EvalReport r;
        r.task = "qa";
        r.mode = mode;
        r.dataset = dataset;
        r.metrics["accuracy"] = {acc, 0.0, 100};
        return r;
    };
    std::vector<EvalReport> qa{
        make_qa("llm_only", "Tspec-LLM", 0.48), make_qa("rag", "Tspec-LLM", 0.82),
        make_qa("kg_rag", "Tspec-LLM", 0.88),   make_qa("llm_only", "TeleQnA", 0.72),
        make_qa("rag", "TeleQnA", 0.74),        make_qa("kg_rag", "TeleQnA", 0.75)};
    std::string table = render_qa_table(qa);
    CHECK(table.find("Model") != std::string::npos);
    CHECK(table.find("Tspec-LLM") != std::string::npos);
    CHECK(table.find("TeleQnA") != std::string::npos);
    CHECK(table.find("LLM-only") < table.find("RAG"));
    CHECK(table.find("RAG") < table.find("KG-RAG"));
    CHECK(table.find("0.88") != std::string::npos);

    auto make_summ = [](const std::string& mode, double r1, double r2, double rl) {
        EvalReport r;
        r.task = "summarization";
        r.mode = mode;
        r.dataset = "SPEC5G";
        r.metrics["rouge1"] = {r1, 0.02, 10};
        r.metrics["rouge2"] = {r2, 0.02, 10};
        r.metrics["rougeL"] = {rl, 0.03, 10};
        return r;
    };
    std::vector<EvalReport> summ{make_summ("llm_only", 0.53, 0.31, 0.44),
                                 make_summ("rag", 0.55, 0.34, 0.45),
                                 make_summ("kg_rag", 0.58, 0.38, 0.46)};
    std::string stable = render_summarization_table(summ);
    CHECK(stable.find("ROUGE-1") != std::string::npos);
    CHECK(stable.find("0.58±0.02") != std::string::npos);

    std::string both = render_reports({qa[0], summ[0]});
    CHECK(both.find("ROUGE-1") != std::string::npos);
    CHECK(both.find("Tspec-LLM") != std::string::npos);
}
