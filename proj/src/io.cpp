#include "kgrag/io.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "kgrag/errors.hpp"
#include "kgrag/text.hpp"

namespace kgrag {

namespace {

constexpr int kSnapshotVersion = 1;

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise("unreadable-file", "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (!in.good() && !in.eof()) raise("unreadable-file", "read failed for " + path.string());
    return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& body) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) raise("unreadable-file", "cannot write " + tmp.string());
        out << body;
        out.flush();
        if (!out.good()) raise("unreadable-file", "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) raise("unreadable-file", "rename failed for " + path.string() + ": " + ec.message());
}

std::vector<std::string> split_lines(const std::string& body) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= body.size()) {
        std::size_t nl = body.find('\n', start);
        if (nl == std::string::npos) {
            if (start < body.size()) lines.push_back(body.substr(start));
            break;
        }
        lines.push_back(body.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

// Snapshot writer/reader for the line-delimited record format shared by
// every snapshot kind.
class SnapshotWriter {
public:
    explicit SnapshotWriter(std::string format) {
        nlohmann::ordered_json header{{"kind", "header"}, {"format", std::move(format)},
                                      {"version", kSnapshotVersion}};
        add(header);
    }

    // ordered_json keeps the written field order, so the leading "kind"
    // field really leads on every line.
    void add(const nlohmann::ordered_json& record) {
        body_ += record.dump();
        body_ += "\n";
        ++records_;
    }

    void finish(const std::filesystem::path& path) {
        nlohmann::json footer{{"kind", "footer"}, {"records", records_}};
        body_ += footer.dump();
        body_ += "\n";
        write_file_atomic(path, body_);
    }

private:
    std::string body_;
    std::size_t records_ = 0;
};

class SnapshotReader {
public:
    SnapshotReader(const std::filesystem::path& path, const std::string& expected_format)
        : path_(path.string()) {
        std::vector<std::string> lines = split_lines(read_file(path));
        if (lines.empty()) raise("corrupt-file", path_ + ":1: empty snapshot");
        std::size_t content_records = 0;
        bool saw_footer = false;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (lines[i].empty()) continue;
            nlohmann::json record = parse_line(lines[i], i + 1);
            std::string kind = record.value("kind", "");
            if (i == 0) {
                if (kind != "header") raise("corrupt-file", path_ + ":1: missing header record");
                if (record.value("format", "") != expected_format) {
                    raise("corrupt-file", path_ + ":1: snapshot format is '" +
                                              record.value("format", "") + "', expected '" +
                                              expected_format + "'");
                }
                int version = record.value("version", -1);
                if (version != kSnapshotVersion) {
                    raise("version-mismatch", path_ + ": snapshot version " +
                                                  std::to_string(version) + ", expected " +
                                                  std::to_string(kSnapshotVersion));
                }
                header_ = std::move(record);
                ++content_records;
                continue;
            }
            if (kind == "footer") {
                if (i + 1 != lines.size() && !(i + 2 == lines.size() && lines[i + 1].empty())) {
                    raise("corrupt-file",
                          path_ + ":" + std::to_string(i + 1) + ": footer before end of file");
                }
                std::size_t expected = record.value("records", std::size_t{0});
                if (expected != content_records) {
                    raise("corrupt-file", path_ + ":" + std::to_string(i + 1) +
                                              ": footer record count mismatch (file truncated?)");
                }
                saw_footer = true;
                break;
            }
            records_.emplace_back(std::move(record), i + 1);
            ++content_records;
        }
        if (!saw_footer) {
            raise("corrupt-file",
                  path_ + ":" + std::to_string(lines.size()) + ": missing footer (file truncated?)");
        }
    }

    const nlohmann::json& header() const { return header_; }
    const std::vector<std::pair<nlohmann::json, std::size_t>>& records() const { return records_; }

    [[noreturn]] void fail(std::size_t line, const std::string& message) const {
        raise("corrupt-file", path_ + ":" + std::to_string(line) + ": " + message);
    }

private:
    nlohmann::json parse_line(const std::string& line, std::size_t line_no) const {
        try {
            return nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            raise("corrupt-file", path_ + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }

    std::string path_;
    nlohmann::json header_;
    std::vector<std::pair<nlohmann::json, std::size_t>> records_;
};

nlohmann::ordered_json tail_to_json(const Tail& tail) {
    if (tail.is_entity()) return {{"kind", "entity"}, {"id", tail.entity_id}};
    return {{"kind", "literal"},
            {"value", tail.literal.value},
            {"datatype", literal_type_name(tail.literal.datatype)}};
}

Tail tail_from_json(const nlohmann::json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "entity") return Tail::entity(j.at("id").get<std::string>());
    if (kind == "literal") {
        return Tail::of(Literal{j.at("value").get<std::string>(),
                                literal_type_from_name(j.at("datatype").get<std::string>())});
    }
    raise("parse-error", "unknown tail kind: " + kind);
}

}  // namespace

CorpusManifest manifest_from_json(const nlohmann::json& j,
                                  const std::filesystem::path& base_dir) {
    CorpusManifest m;
    try {
        std::filesystem::path root = j.at("root").get<std::string>();
        m.root = root.is_absolute() ? root : base_dir / root;
        m.include = j.at("include").get<std::vector<std::string>>();
        std::string format = j.value("format", "plain_text");
        if (format == "plain_text") {
            m.format = CorpusManifest::Format::plain_text;
        } else if (format == "markdown") {
            m.format = CorpusManifest::Format::markdown;
        } else {
            raise("parse-error", "unknown corpus format: " + format);
        }
        if (j.contains("tags")) {
            for (const auto& [glob, tags] : j.at("tags").items()) {
                m.tags[glob] = tags.get<std::vector<std::string>>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        raise("parse-error", std::string("malformed manifest: ") + e.what());
    }
    if (m.include.empty()) raise("invalid-argument", "manifest needs at least one include glob");
    return m;
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        raise("parse-error", path.string() + ": " + e.what());
    }
    return manifest_from_json(j, path.has_parent_path() ? path.parent_path() : ".");
}

bool glob_match(const std::string& pattern, const std::string& path) {
    std::string re;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        char c = pattern[i];
        if (c == '*') {
            if (i + 1 < pattern.size() && pattern[i + 1] == '*') {
                re += ".*";
                ++i;
            } else {
                re += "[^/]*";
            }
        } else if (c == '?') {
            re += "[^/]";
        } else if (std::string("\\^$.|+()[]{}").find(c) != std::string::npos) {
            re += '\\';
            re += c;
        } else {
            re += c;
        }
    }
    return std::regex_match(path, std::regex(re));
}

std::string markdown_to_text(const std::string& markdown) {
    std::vector<std::string> out;
    bool in_fence = false;
    for (const std::string& line : split_lines(markdown)) {
        if (line.rfind("```", 0) == 0) {
            in_fence = !in_fence;
            out.push_back(line);
            continue;
        }
        if (in_fence) {
            out.push_back(line);
            continue;
        }
        std::size_t hashes = 0;
        while (hashes < line.size() && line[hashes] == '#') ++hashes;
        if (hashes > 0 && hashes < line.size() && line[hashes] == ' ') {
            out.push_back(line.substr(hashes + 1));
            continue;
        }
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;  // blank
        out.push_back(line);
    }
    std::string joined;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (i > 0) joined += "\n";
        joined += out[i];
    }
    return joined;
}

std::vector<Document> load_corpus(const CorpusManifest& manifest) {
    if (!std::filesystem::exists(manifest.root)) {
        raise("unreadable-file", "corpus root does not exist: " + manifest.root.string());
    }
    std::vector<std::string> matched;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(manifest.root)) {
        if (!entry.is_regular_file()) continue;
        std::string rel = entry.path().lexically_relative(manifest.root).generic_string();
        for (const auto& glob : manifest.include) {
            if (glob_match(glob, rel)) {
                matched.push_back(rel);
                break;
            }
        }
    }
    std::sort(matched.begin(), matched.end());
    if (matched.empty()) text::warn("corpus manifest matched no files");

    std::vector<Document> docs;
    for (const auto& rel : matched) {
        std::filesystem::path full = manifest.root / rel;
        std::string body = read_file(full);
        if (manifest.format == CorpusManifest::Format::markdown) {
            body = markdown_to_text(body);
        }
        if (body.empty()) {
            text::warn("skipping empty document: " + rel);
            continue;
        }
        std::vector<std::string> tags;
        for (const auto& [glob, glob_tags] : manifest.tags) {
            if (glob_match(glob, rel)) tags.insert(tags.end(), glob_tags.begin(), glob_tags.end());
        }
        docs.emplace_back(rel, std::move(body), full.string(), std::move(tags));
    }
    return docs;
}

void save_kg(const KnowledgeGraph& graph, const std::filesystem::path& path) {
    SnapshotWriter w("kg");
    for (const auto& id : graph.entity_ids()) {
        const Entity& e = graph.entity(id);
        w.add({{"kind", "entity"},
               {"id", e.id},
               {"name", e.name},
               {"entity_type", e.entity_type},
               {"metadata", e.metadata}});
    }
    for (const auto& id : graph.relation_ids()) {
        const RelationType& r = graph.relation(id);
        w.add({{"kind", "relation"}, {"id", r.id}, {"label", r.label}});
    }
    for (const Triple& t : graph.triples()) {
        w.add({{"kind", "triple"},
               {"head", t.head},
               {"relation", t.relation},
               {"tail", tail_to_json(t.tail)}});
    }
    w.finish(path);
}

KnowledgeGraph load_kg(const std::filesystem::path& path) {
    SnapshotReader reader(path, "kg");
    KnowledgeGraph graph;
    for (const auto& [record, line] : reader.records()) {
        try {
            std::string kind = record.at("kind").get<std::string>();
            if (kind == "entity") {
                Entity e;
                e.id = record.at("id").get<std::string>();
                e.name = record.at("name").get<std::string>();
                e.entity_type = record.at("entity_type").get<std::string>();
                for (const auto& [k, v] : record.at("metadata").items()) {
                    e.metadata[k] = v.get<std::string>();
                }
                graph.restore_entity(std::move(e));
            } else if (kind == "relation") {
                graph.restore_relation(
                    {record.at("id").get<std::string>(), record.at("label").get<std::string>()});
            } else if (kind == "triple") {
                graph.restore_triple({record.at("head").get<std::string>(),
                                      record.at("relation").get<std::string>(),
                                      tail_from_json(record.at("tail"))});
            } else {
                reader.fail(line, "unknown record kind: " + kind);
            }
        } catch (const nlohmann::json::exception& e) {
            reader.fail(line, e.what());
        }
    }
    graph.freeze();
    return graph;
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
    SnapshotWriter w("embeddings");
    w.add({{"kind", "meta"},
           {"dim", table.dim()},
           {"entity_count", table.entity_ids().size()},
           {"relation_count", table.relation_ids().size()},
           {"seed", table.seed()},
           {"epochs", table.epochs_trained()}});
    auto dump_vec = [](std::span<const double> v) {
        return std::vector<double>(v.begin(), v.end());
    };
    for (const auto& id : table.entity_ids()) {
        w.add({{"kind", "entity_vec"}, {"id", id}, {"values", dump_vec(table.entity_vec(id))}});
    }
    for (const auto& id : table.relation_ids()) {
        w.add({{"kind", "relation_vec"}, {"id", id}, {"values", dump_vec(table.relation_vec(id))}});
    }
    w.finish(path);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    SnapshotReader reader(path, "embeddings");
    const auto& records = reader.records();
    if (records.empty() || records[0].first.value("kind", "") != "meta") {
        raise("corrupt-file", path.string() + ":2: missing embeddings meta record");
    }
    const nlohmann::json& meta = records[0].first;
    std::size_t dim = 0, entity_count = 0, relation_count = 0;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    try {
        dim = meta.at("dim").get<std::size_t>();
        entity_count = meta.at("entity_count").get<std::size_t>();
        relation_count = meta.at("relation_count").get<std::size_t>();
        seed = meta.at("seed").get<std::uint64_t>();
        epochs = meta.at("epochs").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        reader.fail(records[0].second, e.what());
    }

    std::vector<std::string> entity_ids, relation_ids;
    std::map<std::string, std::vector<double>> entity_vecs, relation_vecs;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& [record, line] = records[i];
        try {
            std::string kind = record.at("kind").get<std::string>();
            std::string id = record.at("id").get<std::string>();
            auto values = record.at("values").get<std::vector<double>>();
            if (values.size() != dim) reader.fail(line, "vector has wrong dimension");
            if (kind == "entity_vec") {
                entity_ids.push_back(id);
                entity_vecs[id] = std::move(values);
            } else if (kind == "relation_vec") {
                relation_ids.push_back(id);
                relation_vecs[id] = std::move(values);
            } else {
                reader.fail(line, "unknown record kind: " + kind);
            }
        } catch (const nlohmann::json::exception& e) {
            reader.fail(line, e.what());
        }
    }
    if (entity_ids.size() != entity_count || relation_ids.size() != relation_count) {
        raise("corrupt-file", path.string() + ": vector record counts disagree with meta record");
    }
    std::sort(entity_ids.begin(), entity_ids.end());
    std::sort(relation_ids.begin(), relation_ids.end());
    EmbeddingTable table(dim, entity_ids, relation_ids);
    for (const auto& id : entity_ids) {
        auto v = table.mutable_entity_vec(id);
        std::copy(entity_vecs[id].begin(), entity_vecs[id].end(), v.begin());
    }
    for (const auto& id : relation_ids) {
        auto v = table.mutable_relation_vec(id);
        std::copy(relation_vecs[id].begin(), relation_vecs[id].end(), v.begin());
    }
    table.set_provenance(seed, epochs);
    return table;
}

void save_index(const VectorIndex& index, const std::filesystem::path& path) {
    SnapshotWriter w("index");
    w.add({{"kind", "meta"},
           {"encoder_id", index.encoder_id()},
           {"dim", index.dim()},
           {"snippet_count", index.size()}});
    for (const auto& snippet : index.snippets()) {
        nlohmann::ordered_json triples = nlohmann::ordered_json::array();
        for (const Triple& t : snippet.source_triples) {
            triples.push_back({{"head", t.head}, {"relation", t.relation},
                               {"tail", tail_to_json(t.tail)}});
        }
        auto vec = index.vector_of(snippet.id);
        w.add({{"kind", "snippet"},
               {"id", snippet.id},
               {"text", snippet.text},
               {"source", snippet_source_name(snippet.source)},
               {"linked_entities", snippet.linked_entities},
               {"source_triples", triples},
               {"vector", std::vector<double>(vec.begin(), vec.end())}});
    }
    w.add({{"kind", "stats"},
           {"snippet_count", index.stats().snippet_count},
           {"df", index.stats().df}});
    w.finish(path);
}

VectorIndex load_index(const std::filesystem::path& path) {
    SnapshotReader reader(path, "index");
    const auto& records = reader.records();
    if (records.empty() || records[0].first.value("kind", "") != "meta") {
        raise("corrupt-file", path.string() + ":2: missing index meta record");
    }
    VectorIndex index;
    try {
        index = VectorIndex(records[0].first.at("encoder_id").get<std::string>(),
                            records[0].first.at("dim").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
        reader.fail(records[0].second, e.what());
    }
    std::size_t declared = records[0].first.value("snippet_count", std::size_t{0});
    bool saw_stats = false;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& [record, line] = records[i];
        try {
            std::string kind = record.at("kind").get<std::string>();
            if (kind == "snippet") {
                KnowledgeSnippet s;
                s.id = record.at("id").get<std::string>();
                s.text = record.at("text").get<std::string>();
                s.source = snippet_source_from_name(record.at("source").get<std::string>());
                s.linked_entities = record.at("linked_entities").get<std::vector<std::string>>();
                for (const auto& t : record.at("source_triples")) {
                    s.source_triples.push_back({t.at("head").get<std::string>(),
                                                t.at("relation").get<std::string>(),
                                                tail_from_json(t.at("tail"))});
                }
                index.add(std::move(s), record.at("vector").get<std::vector<double>>());
            } else if (kind == "stats") {
                CorpusStats stats;
                stats.snippet_count = record.at("snippet_count").get<std::size_t>();
                for (const auto& [term, df] : record.at("df").items()) {
                    stats.df[term] = df.get<std::size_t>();
                }
                index.set_stats(std::move(stats));
                saw_stats = true;
            } else {
                reader.fail(line, "unknown record kind: " + kind);
            }
        } catch (const nlohmann::json::exception& e) {
            reader.fail(line, e.what());
        }
    }
    if (!saw_stats) raise("corrupt-file", path.string() + ": missing stats record");
    if (index.size() != declared || index.stats().snippet_count != declared) {
        raise("corrupt-file", path.string() + ": snippet counts disagree with meta record");
    }
    return index;
}

void save_chunks(const std::vector<Chunk>& chunks, const std::filesystem::path& path) {
    SnapshotWriter w("chunks");
    for (const Chunk& c : chunks) {
        w.add({{"kind", "chunk"},
               {"doc_id", c.doc_id},
               {"index", c.index},
               {"text", c.text},
               {"start", c.start},
               {"end", c.end}});
    }
    w.finish(path);
}

std::vector<Chunk> load_chunks(const std::filesystem::path& path) {
    SnapshotReader reader(path, "chunks");
    std::vector<Chunk> chunks;
    for (const auto& [record, line] : reader.records()) {
        try {
            if (record.at("kind").get<std::string>() != "chunk") {
                reader.fail(line, "unknown record kind");
            }
            Chunk c;
            c.doc_id = record.at("doc_id").get<std::string>();
            c.index = record.at("index").get<std::size_t>();
            c.text = record.at("text").get<std::string>();
            c.start = record.at("start").get<std::size_t>();
            c.end = record.at("end").get<std::size_t>();
            chunks.push_back(std::move(c));
        } catch (const nlohmann::json::exception& e) {
            reader.fail(line, e.what());
        }
    }
    return chunks;
}

namespace {

[[noreturn]] void dataset_fail(const std::filesystem::path& path, std::size_t line,
                               const std::string& message) {
    raise("parse-error", path.string() + ":" + std::to_string(line) + ": " + message);
}

}  // namespace

std::vector<MCQItem> load_mcq(const std::filesystem::path& path) {
    std::vector<MCQItem> items;
    std::vector<std::string> lines = split_lines(read_file(path));
    std::set<std::string> ids;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::size_t line_no = i + 1;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(lines[i]);
        } catch (const nlohmann::json::exception& e) {
            dataset_fail(path, line_no, e.what());
        }
        MCQItem item;
        try {
            item.id = j.at("id").get<std::string>();
            item.question = j.at("question").get<std::string>();
            for (const auto& option : j.at("options")) {
                item.options.push_back({option.at("label").get<std::string>(),
                                        option.at("text").get<std::string>()});
            }
            item.gold = j.at("answer").get<std::string>();
            if (j.contains("difficulty")) {
                item.difficulty = difficulty_from_name(j.at("difficulty").get<std::string>());
            }
        } catch (const nlohmann::json::exception& e) {
            dataset_fail(path, line_no, e.what());
        } catch (const Error& e) {
            dataset_fail(path, line_no, e.what());
        }
        if (item.id.empty() || !ids.insert(item.id).second) {
            raise("invariant-violation",
                  path.string() + ":" + std::to_string(line_no) + ": missing or duplicate id");
        }
        if (item.options.size() < 2) {
            raise("invariant-violation", path.string() + ":" + std::to_string(line_no) +
                                             ": fewer than 2 options");
        }
        std::set<std::string> labels;
        for (const auto& option : item.options) {
            if (option.label.empty() || !labels.insert(option.label).second) {
                raise("invariant-violation", path.string() + ":" + std::to_string(line_no) +
                                                 ": option labels must be distinct");
            }
        }
        if (!labels.count(item.gold)) {
            raise("invariant-violation", path.string() + ":" + std::to_string(line_no) +
                                             ": answer is not an option label");
        }
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<SummarizationExample> load_summarization(const std::filesystem::path& path) {
    std::vector<SummarizationExample> items;
    std::vector<std::string> lines = split_lines(read_file(path));
    std::filesystem::path base = path.has_parent_path() ? path.parent_path() : ".";
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        std::size_t line_no = i + 1;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(lines[i]);
        } catch (const nlohmann::json::exception& e) {
            dataset_fail(path, line_no, e.what());
        }
        try {
            std::string id = j.at("id").get<std::string>();
            std::string reference = j.at("reference").get<std::string>();
            if (reference.empty()) {
                raise("invariant-violation", path.string() + ":" + std::to_string(line_no) +
                                                 ": empty reference");
            }
            std::string body;
            if (j.contains("text")) {
                body = j.at("text").get<std::string>();
            } else if (j.contains("document_path")) {
                body = read_file(base / j.at("document_path").get<std::string>());
            } else {
                dataset_fail(path, line_no, "need either 'text' or 'document_path'");
            }
            items.push_back({id, Document(id, std::move(body)), std::move(reference)});
        } catch (const nlohmann::json::exception& e) {
            dataset_fail(path, line_no, e.what());
        }
    }
    return items;
}

nlohmann::json run_config_to_json(const RunConfig& config) {
    return {{"chunking",
             {{"max_chars", config.chunking.max_chars}, {"overlap", config.chunking.overlap}}},
            {"encoder_dim", config.encoder_dim},
            {"train",
             {{"dim", config.train.dim},
              {"margin", config.train.margin},
              {"learning_rate", config.train.learning_rate},
              {"epochs", config.train.epochs},
              {"batch_size", config.train.batch_size},
              {"negatives_per_positive", config.train.negatives_per_positive},
              {"corruption",
               config.train.corruption == Corruption::tail_only ? "tail_only" : "head_or_tail"},
              {"seed", config.train.seed}}},
            {"generation", generation_config_to_json(config.generation)},
            {"client",
             {{"base_url", config.client.base_url},
              {"path", config.client.path},
              {"model", config.client.model},
              {"api_key_env", config.client.api_key_env},
              {"max_attempts", config.client.max_attempts},
              {"initial_backoff_ms", config.client.initial_backoff_ms},
              {"timeout_s", config.client.timeout_s}}}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig config;
    try {
        if (j.contains("chunking")) {
            config.chunking.max_chars = j["chunking"].value("max_chars", config.chunking.max_chars);
            config.chunking.overlap = j["chunking"].value("overlap", config.chunking.overlap);
        }
        config.encoder_dim = j.value("encoder_dim", config.encoder_dim);
        if (j.contains("train")) {
            const auto& t = j["train"];
            config.train.dim = t.value("dim", config.train.dim);
            config.train.margin = t.value("margin", config.train.margin);
            config.train.learning_rate = t.value("learning_rate", config.train.learning_rate);
            config.train.epochs = t.value("epochs", config.train.epochs);
            config.train.batch_size = t.value("batch_size", config.train.batch_size);
            config.train.negatives_per_positive =
                t.value("negatives_per_positive", config.train.negatives_per_positive);
            std::string corruption = t.value("corruption", "head_or_tail");
            if (corruption == "tail_only") {
                config.train.corruption = Corruption::tail_only;
            } else if (corruption == "head_or_tail") {
                config.train.corruption = Corruption::head_or_tail;
            } else {
                raise("parse-error", "unknown corruption mode: " + corruption);
            }
            config.train.seed = t.value("seed", config.train.seed);
        }
        if (j.contains("generation")) {
            const auto& g = j["generation"];
            config.generation.mode = mode_from_name(g.value("mode", "kg_rag"));
            config.generation.top_k = g.value("top_k", config.generation.top_k);
            config.generation.hops = g.value("hops", config.generation.hops);
            config.generation.temperature = g.value("temperature", config.generation.temperature);
            config.generation.max_output_tokens =
                g.value("max_output_tokens", config.generation.max_output_tokens);
            if (g.contains("weights")) {
                config.generation.weights.sim =
                    g["weights"].value("sim", config.generation.weights.sim);
                config.generation.weights.tfidf =
                    g["weights"].value("tfidf", config.generation.weights.tfidf);
                config.generation.weights.em =
                    g["weights"].value("em", config.generation.weights.em);
            }
            config.generation.input_token_budget =
                g.value("input_token_budget", config.generation.input_token_budget);
            if (g.contains("chunking")) {
                config.generation.chunking.max_chars =
                    g["chunking"].value("max_chars", config.generation.chunking.max_chars);
                config.generation.chunking.overlap =
                    g["chunking"].value("overlap", config.generation.chunking.overlap);
            }
            config.generation.parallelism = g.value("parallelism", config.generation.parallelism);
        }
        if (j.contains("client")) {
            const auto& c = j["client"];
            config.client.base_url = c.value("base_url", config.client.base_url);
            config.client.path = c.value("path", config.client.path);
            config.client.model = c.value("model", config.client.model);
            config.client.api_key_env = c.value("api_key_env", config.client.api_key_env);
            config.client.max_attempts = c.value("max_attempts", config.client.max_attempts);
            config.client.initial_backoff_ms =
                c.value("initial_backoff_ms", config.client.initial_backoff_ms);
            config.client.timeout_s = c.value("timeout_s", config.client.timeout_s);
        }
    } catch (const nlohmann::json::exception& e) {
        raise("parse-error", std::string("malformed run config: ") + e.what());
    }
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        raise("parse-error", path.string() + ": " + e.what());
    }
    return run_config_from_json(j);
}

void save_report(const EvalReport& report, const std::filesystem::path& path) {
    write_file_atomic(path, report_to_json(report).dump(2) + "\n");
}

EvalReport load_report(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        raise("parse-error", path.string() + ": " + e.what());
    }
    return report_from_json(j);
}

}  // namespace kgrag
