#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kdist/corpus.hpp"
#include "kdist/llm_client.hpp"
#include "kdist/prompt.hpp"

namespace kdist {

struct GenerationPlan {
    std::size_t target_event_count = 0;
    std::vector<Relation> relations{kAllRelations.begin(), kAllRelations.end()};
    int inferences_per_input = 10;
    GenerationConfig event_config;
    GenerationConfig inference_config;
    std::uint64_t rng_seed = 0;
    // Event prompts issued between dedup passes.
    std::size_t prompts_per_batch = 5;
    std::size_t max_batches = 1000;
    // Shuffle the order of few-shot inference examples per input.
    bool resample_few_shot = false;

    void validate() const;
    Json to_json() const;
    static GenerationPlan from_json(const Json& j);
};

struct GeneratedEvent {
    Event event;
    Provenance provenance;
};

Json to_json(const GeneratedEvent& e);
std::vector<GeneratedEvent> load_events(const std::filesystem::path& path);
void save_events(std::span<const GeneratedEvent> events, const std::filesystem::path& path);

/// Stable id of an event text.
std::string event_id(const Event& e);

/// Per-stage accounting. For every relation and for the event stage:
/// generated = kept + duplicate_dropped + degenerate_dropped + parse_failed + surplus_dropped.
/// A completion yielding no event counts as one generated, parse-failed item.
struct StageCounts {
    std::uint64_t generated = 0;
    std::uint64_t kept = 0;
    std::uint64_t duplicate_dropped = 0;
    std::uint64_t degenerate_dropped = 0;
    std::uint64_t parse_failed = 0;
    std::uint64_t surplus_dropped = 0;  // events beyond the target
    std::uint64_t failed_inputs = 0;
    std::uint64_t api_calls = 0;

    StageCounts& operator+=(const StageCounts& o);
    Json to_json() const;
};

struct RunReport {
    std::string stage;
    StageCounts events;
    std::map<Relation, StageCounts> per_relation;
    std::vector<std::string> warnings;
    std::vector<std::string> failures;
    std::uint64_t output_size = 0;
    double wall_clock_seconds = 0.0;

    StageCounts totals() const;
    Json to_json() const;
};

struct EventRun {
    std::vector<GeneratedEvent> events;
    RunReport report;
};

struct InferenceRun {
    Corpus corpus;
    RunReport report;
};

/// Collects plan.target_event_count unique events, re-sampling the few-shot
/// seeds for every prompt. Stops early at plan.max_batches with a warning.
EventRun generate_events(const GenerationPlan& plan, const SeedPool& pool, const TemplateSet& templates,
                         CompletionSource& client, const std::string& created_at);

/// Generates plan.inferences_per_input tails for each (event, relation) and
/// assembles a deduplicated, degeneracy-filtered corpus in (event id,
/// relation, sample) order. Failed inputs are skipped and reported.
InferenceRun generate_inferences(std::span<const Event> events, const GenerationPlan& plan,
                                 const TemplateSet& templates, CompletionSource& client,
                                 const std::string& created_at);

}  // namespace kdist
