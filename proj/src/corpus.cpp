#include "kdist/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "kdist/error.hpp"
#include "kdist/hash.hpp"
#include "kdist/text.hpp"

namespace kdist {

// ---- file helpers -----------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw DataError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const Json&, std::size_t)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw DataError(path.string() + ": line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        if (!j.is_object()) {
            throw DataError(path.string() + ": line " + std::to_string(line_no) + ": expected a JSON object");
        }
        try {
            fn(j, line_no);
        } catch (const DataError& e) {
            throw DataError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Json::exception& e) {
            throw DataError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

std::string dump_line(const Json& j) { return j.dump(-1, ' ', false, Json::error_handler_t::replace); }

std::string dump_pretty(const Json& j) { return j.dump(2, ' ', false, Json::error_handler_t::replace) + "\n"; }

// ---- Event ----------------------------------------------------------------

Event::Event(std::string_view text) : text_(normalize_text(text)) {
    if (text_.empty()) throw DataError("event is empty");
    if (text_.find("PersonX") == std::string::npos) {
        throw DataError("event lacks PersonX marker: \"" + text_ + "\"");
    }
}

std::optional<Event> Event::try_make(std::string_view text) {
    try {
        return Event(text);
    } catch (const DataError&) {
        return std::nullopt;
    }
}

// ---- KnowledgeTriple --------------------------------------------------------

std::string triple_id(std::string_view event, Relation relation, std::string_view tail) {
    std::string key = to_lower(normalize_text(event));
    key += '\t';
    key += to_string(relation);
    key += '\t';
    key += to_lower(normalize_text(tail));
    return sha256_hex(key).substr(0, 16);
}

KnowledgeTriple KnowledgeTriple::make(Event event, Relation relation, std::string_view tail,
                                      Provenance provenance) {
    std::string normalized = normalize_text(tail);
    std::string id = triple_id(event.text(), relation, normalized);
    return KnowledgeTriple{std::move(id), std::move(event), relation, std::move(normalized),
                           std::move(provenance), std::nullopt};
}

Json to_json(const KnowledgeTriple& t) {
    Json j;
    j["id"] = t.id;
    j["event"] = t.event.text();
    j["relation"] = std::string(to_string(t.relation));
    j["tail"] = t.tail;
    j["source_model"] = t.provenance.source_model;
    j["generation_config_hash"] = t.provenance.generation_config_hash;
    j["created_at"] = t.provenance.created_at;
    if (t.critic_score) j["critic_score"] = *t.critic_score;
    return j;
}

namespace {

std::string required_string(const Json& j, const char* field) {
    const auto it = j.find(field);
    if (it == j.end() || !it->is_string()) throw DataError(std::string("missing string field \"") + field + "\"");
    return it->get<std::string>();
}

std::string optional_string(const Json& j, const char* field) {
    const auto it = j.find(field);
    if (it == j.end() || it->is_null()) return {};
    if (!it->is_string()) throw DataError(std::string("field \"") + field + "\" must be a string");
    return it->get<std::string>();
}

}  // namespace

KnowledgeTriple triple_from_json(const Json& j) {
    const std::string rel_name = required_string(j, "relation");
    const auto relation = parse_relation(rel_name);
    if (!relation) throw DataError("unknown relation \"" + rel_name + "\"");
    Provenance prov{optional_string(j, "source_model"), optional_string(j, "generation_config_hash"),
                    optional_string(j, "created_at")};
    KnowledgeTriple t = KnowledgeTriple::make(Event(required_string(j, "event")), *relation,
                                              required_string(j, "tail"), std::move(prov));
    if (const auto it = j.find("id"); it != j.end() && !it->is_null()) {
        if (!it->is_string() || it->get<std::string>() != t.id) {
            throw DataError("id does not match content hash (expected " + t.id + ")");
        }
    }
    if (const auto it = j.find("critic_score"); it != j.end() && !it->is_null()) {
        if (!it->is_number()) throw DataError("critic_score must be a number");
        const double s = it->get<double>();
        if (!(s >= 0.0 && s <= 1.0)) throw DataError("critic_score outside [0,1]");
        t.critic_score = s;
    }
    return t;
}

std::string render_triple_text(const KnowledgeTriple& t) {
    std::string out = t.event.text();
    out += ' ';
    out += verbal_gloss(t.relation);
    out += ' ';
    out += t.tail;
    return out;
}

std::string export_line(const KnowledgeTriple& t) {
    std::string out = t.event.text();
    out += ' ';
    out += verbal_gloss(t.relation);
    out += ' ';
    out += kGenDelimiter;
    out += ' ';
    out += t.tail;
    return out;
}

// ---- Corpus -------------------------------------------------------------------

Corpus dedup(const Corpus& corpus) {
    Corpus out;
    out.source_path = corpus.source_path;
    std::unordered_set<std::string> seen;
    seen.reserve(corpus.entries.size());
    for (const auto& t : corpus.entries) {
        if (seen.insert(t.id).second) out.entries.push_back(t);
    }
    return out;
}

Corpus load_corpus(const std::filesystem::path& path) {
    Corpus corpus;
    corpus.source_path = path;
    for_each_jsonl(path, [&](const Json& j, std::size_t) { corpus.entries.push_back(triple_from_json(j)); });
    return corpus;
}

std::string serialize_corpus(const Corpus& corpus) {
    std::string out;
    for (const auto& t : corpus.entries) {
        out += dump_line(to_json(t));
        out += '\n';
    }
    return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_corpus(corpus));
}

}  // namespace kdist
