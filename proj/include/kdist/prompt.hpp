#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kdist/corpus.hpp"
#include "kdist/relation.hpp"

namespace kdist {

/// Names standing in for PersonX / PersonY while prompting.
struct NameAssignment {
    std::string x;
    std::string y;

    /// Throws DataError unless x != y, both nonempty, and neither contains the other.
    void validate() const;

    friend bool operator==(const NameAssignment&, const NameAssignment&) = default;
};

struct NamePool {
    std::vector<std::string> names;
    // Fixed pair for few-shot slot i.
    std::vector<NameAssignment> slots;

    /// Deterministic draw of two distinct, non-overlapping pool names.
    NameAssignment draw(std::uint64_t key) const;
};

NamePool parse_name_pool(std::string_view text);

struct FewShotExample {
    std::string event;  // generic-marker form
    std::string tail;
};

/// One completion-style few-shot prompt. Patterns may use the placeholders
/// {index}, {event}, {tail}, {nameX}, {nameY}.
struct PromptTemplate {
    std::optional<Relation> relation;  // absent for event generation
    std::string task_prompt;
    std::string header_separator = "\n\n\n";
    std::string input_pattern;
    std::string joiner;
    std::string output_pattern;
    // Output text left open for the model to complete.
    std::string open_pattern;
    // Leading word the model is expected to emit before the stored tail ("to").
    std::string connective;
    std::string block_separator = "\n\n";
    std::size_t n_examples = 0;
    std::vector<FewShotExample> examples;
};

/// Parses the "key: value" template format. Quoted values are JSON strings.
PromptTemplate parse_template(std::string_view text);
PromptTemplate load_template(const std::filesystem::path& path);

/// Event template, one template per relation, and the name pool.
class TemplateSet {
public:
    static TemplateSet load(const std::filesystem::path& dir);

    const PromptTemplate& events() const { return events_; }
    const PromptTemplate& for_relation(Relation r) const;
    const NamePool& names() const { return names_; }

private:
    PromptTemplate events_;
    std::map<Relation, PromptTemplate> relations_;
    NamePool names_;
};

/// Curated events used as few-shot examples for event generation.
struct SeedPool {
    std::vector<Event> events;

    /// One event per line; blank lines and '#' comments are skipped.
    /// Invalid or duplicate events are a DataError.
    static SeedPool load(const std::filesystem::path& path);
};

/// k distinct events drawn uniformly without replacement, in random order.
std::vector<Event> sample_seed_events(const SeedPool& pool, std::size_t k, std::uint64_t rng_seed);

std::string substitute_names(std::string_view text, const NameAssignment& names);
std::string restore_markers(std::string_view text, const NameAssignment& names);

std::string render_event_prompt(const PromptTemplate& tmpl, std::span<const Event> seed_events);

std::string render_inference_prompt(const PromptTemplate& tmpl, const Event& target,
                                    std::span<const FewShotExample> few_shot, const NameAssignment& names,
                                    std::span<const NameAssignment> slot_names);

/// Uses the template's own examples and the set's slot names.
std::string render_inference_prompt(const TemplateSet& set, Relation relation, const Event& target,
                                    const NameAssignment& names);

/// Events found in a continuation of an event prompt, in order.
std::vector<std::string> parse_event_completion(std::string_view raw);

/// The tail carried by a continuation of an open output slot, or nullopt for
/// an empty completion. Names are not restored here.
std::optional<std::string> parse_inference_completion(const PromptTemplate& tmpl, std::string_view raw);

}  // namespace kdist
