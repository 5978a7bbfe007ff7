#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kdist/jsonl.hpp"
#include "kdist/relation.hpp"

namespace kdist {

/// A generic situation involving PersonX (and optionally PersonY).
/// The stored text is normalized; construction rejects invalid events.
class Event {
public:
    explicit Event(std::string_view text);

    /// Returns nullopt instead of throwing.
    static std::optional<Event> try_make(std::string_view text);

    const std::string& text() const noexcept { return text_; }

    friend bool operator==(const Event&, const Event&) = default;

private:
    std::string text_;
};

struct Provenance {
    std::string source_model;
    std::string generation_config_hash;
    std::string created_at;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Stable content id of an (event, relation, tail) key: hash over the
/// normalized lowercase "event\trelation\ttail".
std::string triple_id(std::string_view event, Relation relation, std::string_view tail);

struct KnowledgeTriple {
    std::string id;
    Event event;
    Relation relation;
    std::string tail;
    Provenance provenance;
    std::optional<double> critic_score;

    static KnowledgeTriple make(Event event, Relation relation, std::string_view tail,
                                Provenance provenance = {});

    friend bool operator==(const KnowledgeTriple&, const KnowledgeTriple&) = default;
};

Json to_json(const KnowledgeTriple& t);
KnowledgeTriple triple_from_json(const Json& j);

/// Sentence form "event gloss tail" used wherever a model scores a triple.
std::string render_triple_text(const KnowledgeTriple& t);

/// One training line for the student model: "{event} {gloss} [GEN] {tail}".
std::string export_line(const KnowledgeTriple& t);

inline constexpr std::string_view kGenDelimiter = "[GEN]";

struct Corpus {
    std::vector<KnowledgeTriple> entries;
    std::optional<std::filesystem::path> source_path;

    std::size_t size() const noexcept { return entries.size(); }
    bool empty() const noexcept { return entries.empty(); }
};

/// Keeps the first occurrence of each triple key, preserving order.
Corpus dedup(const Corpus& corpus);

Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string serialize_corpus(const Corpus& corpus);

}  // namespace kdist
