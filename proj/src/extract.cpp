#include "kgrag/extract.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>
#include <set>

#include <json.hpp>

#include "kgrag/errors.hpp"
#include "kgrag/text.hpp"

namespace kgrag {

Document::Document(std::string id_, std::string text_, std::string source_,
                   std::vector<std::string> tags_)
    : id(std::move(id_)), text(std::move(text_)), source(std::move(source_)),
      tags(std::move(tags_)) {
    if (id.empty()) raise("empty-document", "document id is empty");
    if (text.empty()) raise("empty-document", "document text is empty: " + id);
}

namespace {

bool is_sentence_end(char c) { return c == '.' || c == '!' || c == '?'; }

// Best cut position in (window_start, hard_end], or 0 when none qualifies.
std::size_t snap_cut(const std::string& s, std::size_t window_start, std::size_t hard_end) {
    // Paragraph break: cut right after the last "\n\n".
    for (std::size_t p = hard_end; p > window_start + 1; --p) {
        if (s[p - 1] == '\n' && s[p - 2] == '\n') return p;
    }
    // Sentence end followed by whitespace.
    for (std::size_t p = hard_end; p > window_start + 1; --p) {
        if (is_sentence_end(s[p - 2]) && std::isspace(static_cast<unsigned char>(s[p - 1]))) {
            return p;
        }
    }
    return 0;
}

}  // namespace

std::vector<Chunk> chunk_document(const Document& doc, std::size_t max_chars,
                                  std::size_t overlap) {
    if (max_chars < 64) raise("invalid-argument", "max_chars must be at least 64");
    if (overlap >= max_chars) raise("invalid-argument", "overlap must be smaller than max_chars");

    const std::string& s = doc.text;
    std::vector<Chunk> chunks;
    std::size_t tolerance = max_chars / 8;
    std::size_t pos = 0;
    std::size_t index = 0;
    for (;;) {
        std::size_t hard_end = std::min(pos + max_chars, s.size());
        std::size_t end = hard_end;
        if (hard_end < s.size()) {
            std::size_t cut = snap_cut(s, hard_end - tolerance, hard_end);
            // Only snap when the next chunk still makes progress.
            if (cut > pos + overlap) end = cut;
        }
        chunks.push_back(Chunk{doc.id, index++, s.substr(pos, end - pos), pos, end});
        if (end == s.size()) break;
        pos = end - overlap;
    }
    return chunks;
}

namespace {

std::string sentence_around(const std::string& s, std::size_t pos) {
    std::size_t begin = pos;
    while (begin > 0 && s[begin - 1] != '\n' && !is_sentence_end(s[begin - 1])) --begin;
    std::size_t end = pos;
    while (end < s.size() && s[end] != '\n' && !is_sentence_end(s[end])) ++end;
    if (end < s.size() && is_sentence_end(s[end])) ++end;
    return text::collapse_whitespace(s.substr(begin, end - begin));
}

bool word_boundary(const std::string& s, std::size_t pos, std::size_t len) {
    bool left_ok = pos == 0 || !text::is_word_byte(static_cast<unsigned char>(s[pos - 1]));
    bool right_ok =
        pos + len >= s.size() || !text::is_word_byte(static_cast<unsigned char>(s[pos + len]));
    return left_ok && right_ok;
}

}  // namespace

RuleBasedExtractor::RuleBasedExtractor(std::vector<GazetteerEntry> gazetteer,
                                       std::vector<RelationPattern> patterns)
    : gazetteer_(std::move(gazetteer)), patterns_(std::move(patterns)) {}

RuleBasedExtractor RuleBasedExtractor::from_files(const std::filesystem::path& gazetteer_file,
                                                  const std::filesystem::path& patterns_file) {
    auto read_tsv = [](const std::filesystem::path& p, auto&& take) {
        std::ifstream in(p);
        if (!in) raise("unreadable-file", "cannot open " + p.string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line[0] == '#') continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos) {
                raise("parse-error",
                      p.string() + ":" + std::to_string(line_no) + ": expected <field>\\t<field>");
            }
            take(line.substr(0, tab), line.substr(tab + 1));
        }
    };
    std::vector<GazetteerEntry> gaz;
    read_tsv(gazetteer_file,
             [&](std::string a, std::string b) { gaz.push_back({std::move(a), std::move(b)}); });
    std::vector<RelationPattern> pats;
    read_tsv(patterns_file,
             [&](std::string a, std::string b) { pats.push_back({std::move(a), std::move(b)}); });
    return RuleBasedExtractor(std::move(gaz), std::move(pats));
}

Extraction RuleBasedExtractor::extract(const Chunk& chunk) {
    Extraction out;
    const std::string& body = chunk.text;
    std::string lower_body = text::to_lower(body);

    // Gazetteer pass: first occurrence of each (surface, type), position order.
    struct Hit {
        std::size_t pos;
        std::size_t len;
        std::string type;
    };
    std::vector<Hit> hits;
    std::set<std::pair<std::string, std::string>> seen;  // (lower surface, type)
    for (const auto& entry : gazetteer_) {
        std::string needle = text::to_lower(entry.surface);
        if (needle.empty()) continue;
        if (seen.count({needle, entry.type})) continue;
        std::size_t p = 0;
        while ((p = lower_body.find(needle, p)) != std::string::npos) {
            if (word_boundary(body, p, needle.size())) {
                hits.push_back({p, needle.size(), entry.type});
                seen.insert({needle, entry.type});
                break;
            }
            ++p;
        }
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
        return std::tie(a.pos, a.type) < std::tie(b.pos, b.type);
    });

    std::map<std::string, std::string> surface_by_lower;  // lower -> verbatim surface
    for (const Hit& h : hits) {
        std::string surface = body.substr(h.pos, h.len);
        out.entities.push_back(ExtractedEntity{surface, h.type, sentence_around(body, h.pos),
                                               chunk.doc_id, chunk.index, false});
        surface_by_lower.emplace(text::to_lower(surface), surface);
    }

    // Relation pass: each pattern's two captures must both be known entities.
    std::set<std::tuple<std::string, std::string, std::string>> rel_seen;
    for (const auto& pattern : patterns_) {
        std::regex re;
        try {
            re.assign(pattern.regex, std::regex::ECMAScript | std::regex::icase);
        } catch (const std::regex_error& e) {
            raise("parse-error", "bad relation pattern '" + pattern.label + "': " + e.what());
        }
        for (auto it = std::sregex_iterator(body.begin(), body.end(), re);
             it != std::sregex_iterator(); ++it) {
            const std::smatch& m = *it;
            if (m.size() < 3) continue;
            auto head = surface_by_lower.find(text::to_lower(m[1].str()));
            auto tail = surface_by_lower.find(text::to_lower(m[2].str()));
            if (head == surface_by_lower.end() || tail == surface_by_lower.end()) continue;
            if (head->second == tail->second) continue;
            if (!rel_seen.insert({head->second, pattern.label, tail->second}).second) continue;
            out.relations.push_back(ExtractedRelation{head->second, tail->second, pattern.label,
                                                      chunk.doc_id, chunk.index});
        }
    }
    return out;
}

LlmExtractor::LlmExtractor(LLMClient& client, LlmExtractorConfig config)
    : client_(client), config_(std::move(config)) {}

namespace {

// Strip markdown code fences and anything around the outermost JSON object.
std::string repair_json_text(const std::string& s) {
    auto first = s.find('{');
    auto last = s.rfind('}');
    if (first == std::string::npos || last == std::string::npos || last < first) return s;
    return s.substr(first, last - first + 1);
}

}  // namespace

Extraction LlmExtractor::extract(const Chunk& chunk) {
    if (chunk.text.empty()) raise("empty-document", "chunk text is empty");
    std::string user = config_.prompt + chunk.text;
    ChatOptions options;
    options.max_tokens = config_.max_tokens;

    nlohmann::json parsed;
    bool ok = false;
    for (int attempt = 0; attempt < 2 && !ok; ++attempt) {
        ChatResult reply = client_.chat(config_.system_prompt, user, options);
        try {
            parsed = nlohmann::json::parse(reply.text);
            ok = true;
        } catch (const nlohmann::json::exception&) {
            try {
                parsed = nlohmann::json::parse(repair_json_text(reply.text));
                ok = true;
            } catch (const nlohmann::json::exception&) {
                if (attempt == 0) {
                    text::warn("malformed extraction reply for chunk " + chunk.doc_id + "#" +
                               std::to_string(chunk.index) + "; re-requesting once");
                }
            }
        }
    }
    Extraction out;
    if (!ok || !parsed.is_object()) {
        text::warn("dropping unparseable extraction for chunk " + chunk.doc_id + "#" +
                   std::to_string(chunk.index));
        return out;
    }

    std::set<std::string> surfaces;
    if (parsed.contains("entities") && parsed["entities"].is_array()) {
        for (const auto& item : parsed["entities"]) {
            if (!item.is_object() || !item.contains("surface") || !item["surface"].is_string()) {
                text::warn("dropping malformed entity item in chunk " + chunk.doc_id + "#" +
                           std::to_string(chunk.index));
                continue;
            }
            ExtractedEntity e;
            e.surface = item["surface"].get<std::string>();
            if (e.surface.empty()) continue;
            e.entity_type = item.value("type", "unknown");
            e.doc_id = chunk.doc_id;
            e.chunk_index = chunk.index;
            e.unverified = chunk.text.find(e.surface) == std::string::npos;
            e.context = e.unverified ? std::string{}
                                     : sentence_around(chunk.text, chunk.text.find(e.surface));
            surfaces.insert(e.surface);
            out.entities.push_back(std::move(e));
        }
    }
    if (parsed.contains("relations") && parsed["relations"].is_array()) {
        for (const auto& item : parsed["relations"]) {
            if (!item.is_object() || !item.contains("head") || !item.contains("tail") ||
                !item.contains("label") || !item["head"].is_string() ||
                !item["tail"].is_string() || !item["label"].is_string()) {
                text::warn("dropping malformed relation item in chunk " + chunk.doc_id + "#" +
                           std::to_string(chunk.index));
                continue;
            }
            ExtractedRelation r;
            r.head_surface = item["head"].get<std::string>();
            r.tail_surface = item["tail"].get<std::string>();
            r.label = item["label"].get<std::string>();
            r.doc_id = chunk.doc_id;
            r.chunk_index = chunk.index;
            if (r.head_surface == r.tail_surface || r.label.empty()) continue;
            if (!surfaces.count(r.head_surface) || !surfaces.count(r.tail_surface)) {
                text::warn("dropping relation with unknown endpoint in chunk " + chunk.doc_id +
                           "#" + std::to_string(chunk.index));
                continue;
            }
            out.relations.push_back(std::move(r));
        }
    }
    return out;
}

MergeReport merge_into_graph(KnowledgeGraph& graph, const std::vector<Extraction>& extractions) {
    MergeReport report;
    for (const auto& extraction : extractions) {
        std::map<std::string, std::string> id_by_lower_surface;
        for (const auto& e : extraction.entities) {
            std::map<std::string, std::string> metadata;
            if (!e.context.empty()) metadata["context"] = e.context;
            if (!e.doc_id.empty()) metadata["source_doc"] = e.doc_id;
            if (e.unverified) metadata["unverified"] = "true";
            auto res = graph.add_entity(e.surface, e.entity_type, metadata);
            res.inserted ? ++report.entities_added : ++report.entities_merged;
            id_by_lower_surface.emplace(text::to_lower(e.surface), res.id);
        }
        for (const auto& r : extraction.relations) {
            auto head = id_by_lower_surface.find(text::to_lower(r.head_surface));
            auto tail = id_by_lower_surface.find(text::to_lower(r.tail_surface));
            if (head == id_by_lower_surface.end() || tail == id_by_lower_surface.end()) {
                text::warn("skipping relation with unresolved endpoint: " + r.head_surface + " " +
                           r.label + " " + r.tail_surface);
                continue;
            }
            std::string rel = graph.add_relation(r.label);
            bool inserted = graph.add_triple(head->second, rel, Tail::entity(tail->second));
            inserted ? ++report.triples_added : ++report.triples_duplicate;
        }
    }
    return report;
}

}  // namespace kgrag
