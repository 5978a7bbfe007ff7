#include "kdist/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <unordered_set>

#include "kdist/error.hpp"
#include "kdist/hash.hpp"
#include "kdist/text.hpp"

namespace kdist {
namespace {

constexpr std::size_t kInputsPerChunk = 256;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

// ---- plan -------------------------------------------------------------------------

void GenerationPlan::validate() const {
    if (inferences_per_input < 1) throw UsageError("inferences_per_input must be >= 1");
    if (relations.empty()) throw UsageError("plan needs at least one relation");
    if (prompts_per_batch < 1) throw UsageError("prompts_per_batch must be >= 1");
    event_config.validate();
    inference_config.validate();
}

Json GenerationPlan::to_json() const {
    Json j;
    j["target_event_count"] = target_event_count;
    j["relations"] = Json::array();
    for (Relation r : relations) j["relations"].push_back(std::string(to_string(r)));
    j["inferences_per_input"] = inferences_per_input;
    j["event_config"] = event_config.to_json();
    j["inference_config"] = inference_config.to_json();
    j["rng_seed"] = rng_seed;
    j["prompts_per_batch"] = prompts_per_batch;
    j["max_batches"] = max_batches;
    j["resample_few_shot"] = resample_few_shot;
    return j;
}

GenerationPlan GenerationPlan::from_json(const Json& j) {
    GenerationPlan p;
    try {
        p.target_event_count = j.value("target_event_count", p.target_event_count);
        if (const auto it = j.find("relations"); it != j.end()) {
            p.relations.clear();
            for (const auto& name : *it) {
                const auto r = parse_relation(name.get<std::string>());
                if (!r) throw UsageError("unknown relation \"" + name.get<std::string>() + "\"");
                if (std::find(p.relations.begin(), p.relations.end(), *r) == p.relations.end()) p.relations.push_back(*r);
            }
            std::sort(p.relations.begin(), p.relations.end());
        }
        p.inferences_per_input = j.value("inferences_per_input", p.inferences_per_input);
        if (j.contains("event_config")) p.event_config = GenerationConfig::from_json(j["event_config"]);
        if (j.contains("inference_config")) p.inference_config = GenerationConfig::from_json(j["inference_config"]);
        p.rng_seed = j.value("rng_seed", p.rng_seed);
        p.prompts_per_batch = j.value("prompts_per_batch", p.prompts_per_batch);
        p.max_batches = j.value("max_batches", p.max_batches);
        p.resample_few_shot = j.value("resample_few_shot", p.resample_few_shot);
    } catch (const Json::exception& e) {
        throw UsageError(std::string("bad generation plan: ") + e.what());
    }
    p.validate();
    return p;
}

// ---- events I/O ---------------------------------------------------------------------

std::string event_id(const Event& e) { return sha256_hex(to_lower(e.text())).substr(0, 16); }

Json to_json(const GeneratedEvent& e) {
    Json j;
    j["id"] = event_id(e.event);
    j["event"] = e.event.text();
    j["source_model"] = e.provenance.source_model;
    j["generation_config_hash"] = e.provenance.generation_config_hash;
    j["created_at"] = e.provenance.created_at;
    return j;
}

std::vector<GeneratedEvent> load_events(const std::filesystem::path& path) {
    std::vector<GeneratedEvent> out;
    for_each_jsonl(path, [&](const Json& j, std::size_t) {
        if (!j.contains("event") || !j["event"].is_string()) throw DataError("missing string field \"event\"");
        out.push_back({Event(j["event"].get<std::string>()),
                       {j.value("source_model", ""), j.value("generation_config_hash", ""), j.value("created_at", "")}});
    });
    return out;
}

void save_events(std::span<const GeneratedEvent> events, const std::filesystem::path& path) {
    std::string out;
    for (const auto& e : events) {
        out += dump_line(to_json(e));
        out += '\n';
    }
    write_file_atomic(path, out);
}

// ---- report ---------------------------------------------------------------------------

StageCounts& StageCounts::operator+=(const StageCounts& o) {
    generated += o.generated;
    kept += o.kept;
    duplicate_dropped += o.duplicate_dropped;
    degenerate_dropped += o.degenerate_dropped;
    parse_failed += o.parse_failed;
    surplus_dropped += o.surplus_dropped;
    failed_inputs += o.failed_inputs;
    api_calls += o.api_calls;
    return *this;
}

Json StageCounts::to_json() const {
    Json j;
    j["generated"] = generated;
    j["kept"] = kept;
    j["duplicate_dropped"] = duplicate_dropped;
    j["degenerate_dropped"] = degenerate_dropped;
    j["parse_failed"] = parse_failed;
    j["surplus_dropped"] = surplus_dropped;
    j["failed_inputs"] = failed_inputs;
    j["api_calls"] = api_calls;
    return j;
}

StageCounts RunReport::totals() const {
    StageCounts t = events;
    for (const auto& [_, c] : per_relation) t += c;
    return t;
}

Json RunReport::to_json() const {
    Json j;
    j["stage"] = stage;
    if (stage == "events") j["events"] = events.to_json();
    Json rel = Json::object();
    for (const auto& [r, c] : per_relation) rel[std::string(to_string(r))] = c.to_json();
    if (stage != "events") j["relations"] = rel;
    j["totals"] = totals().to_json();
    j["output_size"] = output_size;
    j["warnings"] = warnings;
    j["failures"] = failures;
    j["wall_clock_seconds"] = wall_clock_seconds;
    return j;
}

// ---- event generation ----------------------------------------------------------------

EventRun generate_events(const GenerationPlan& plan, const SeedPool& pool, const TemplateSet& templates,
                         CompletionSource& client, const std::string& created_at) {
    plan.validate();
    const auto start = Clock::now();
    EventRun run;
    run.report.stage = "events";
    if (plan.target_event_count == 0) return run;

    const PromptTemplate& tmpl = templates.events();
    const Provenance provenance{plan.event_config.model, plan.event_config.hash(), created_at};
    std::unordered_set<std::string> seen;
    StageCounts& counts = run.report.events;
    std::uint64_t prompt_counter = 0;

    for (std::size_t batch = 0; batch < plan.max_batches && run.events.size() < plan.target_event_count; ++batch) {
        std::vector<std::string> prompts;
        prompts.reserve(plan.prompts_per_batch);
        for (std::size_t p = 0; p < plan.prompts_per_batch; ++p) {
            const auto seed = derive_seed(plan.rng_seed, "events/" + std::to_string(prompt_counter++));
            const auto seeds = sample_seed_events(pool, tmpl.n_examples, seed);
            prompts.push_back(render_event_prompt(tmpl, seeds));
        }
        const auto items = client.complete_batch(prompts, plan.event_config);
        counts.api_calls += prompts.size();
        for (const auto& item : items) {
            if (!item.ok()) throw Error(item.error_kind, "event generation failed: " + *item.error);
            for (const auto& result : item.results) {
                const auto parsed = parse_event_completion(result.text);
                if (parsed.empty()) {
                    ++counts.generated;
                    ++counts.parse_failed;
                }
                for (const auto& text : parsed) {
                    ++counts.generated;
                    if (!seen.insert(to_lower(text)).second) {
                        ++counts.duplicate_dropped;
                    } else if (run.events.size() >= plan.target_event_count) {
                        ++counts.surplus_dropped;
                    } else {
                        ++counts.kept;
                        run.events.push_back({Event(text), provenance});
                    }
                }
            }
        }
    }
    if (run.events.size() < plan.target_event_count) {
        run.report.warnings.push_back("batch cap of " + std::to_string(plan.max_batches) + " reached with " +
                                      std::to_string(run.events.size()) + " of " +
                                      std::to_string(plan.target_event_count) + " unique events");
    }
    run.report.output_size = run.events.size();
    run.report.wall_clock_seconds = seconds_since(start);
    return run;
}

// ---- inference generation --------------------------------------------------------------

InferenceRun generate_inferences(std::span<const Event> events, const GenerationPlan& plan,
                                 const TemplateSet& templates, CompletionSource& client,
                                 const std::string& created_at) {
    plan.validate();
    const auto start = Clock::now();
    InferenceRun run;
    run.report.stage = "inferences";
    for (Relation r : plan.relations) run.report.per_relation[r];

    // Distinct events in id order.
    std::vector<std::pair<std::string, const Event*>> ordered;
    {
        std::unordered_set<std::string> ids;
        for (const auto& e : events) {
            std::string id = event_id(e);
            if (ids.insert(id).second) ordered.emplace_back(std::move(id), &e);
        }
        std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    }

    std::vector<Relation> relations = plan.relations;
    std::sort(relations.begin(), relations.end());

    struct Input {
        const Event* event;
        Relation relation;
        NameAssignment names;
        std::string prompt;
    };
    std::vector<Input> inputs;
    inputs.reserve(ordered.size() * relations.size());
    for (const auto& [id, event] : ordered) {
        NameAssignment names = templates.names().draw(derive_seed(plan.rng_seed, "names/" + id));
        for (Relation r : relations) {
            const PromptTemplate& tmpl = templates.for_relation(r);
            std::string prompt;
            if (plan.resample_few_shot) {
                std::vector<FewShotExample> shots = tmpl.examples;
                DeterministicRng rng(derive_seed(plan.rng_seed, "fewshot/" + id + "/" + std::string(to_string(r))));
                deterministic_shuffle(shots, rng);
                prompt = render_inference_prompt(tmpl, *event, shots, names, templates.names().slots);
            } else {
                prompt = render_inference_prompt(templates, r, *event, names);
            }
            inputs.push_back({event, r, names, std::move(prompt)});
        }
    }

    GenerationConfig config = plan.inference_config;
    config.n = plan.inferences_per_input;
    const Provenance provenance{config.model, config.hash(), created_at};
    std::unordered_set<std::string> seen;

    for (std::size_t chunk = 0; chunk < inputs.size(); chunk += kInputsPerChunk) {
        const std::size_t end = std::min(inputs.size(), chunk + kInputsPerChunk);
        std::vector<std::string> prompts;
        prompts.reserve(end - chunk);
        for (std::size_t i = chunk; i < end; ++i) prompts.push_back(inputs[i].prompt);
        const auto items = client.complete_batch(prompts, config);

        for (std::size_t i = chunk; i < end; ++i) {
            const Input& input = inputs[i];
            const BatchItem& item = items[i - chunk];
            StageCounts& counts = run.report.per_relation[input.relation];
            ++counts.api_calls;
            if (!item.ok()) {
                ++counts.failed_inputs;
                run.report.failures.push_back(std::string(display_name(input.relation)) + " / \"" +
                                              input.event->text() + "\": " + *item.error);
                continue;
            }
            const PromptTemplate& tmpl = templates.for_relation(input.relation);
            for (const auto& result : item.results) {
                ++counts.generated;
                const auto parsed = parse_inference_completion(tmpl, result.text);
                if (!parsed) {
                    ++counts.parse_failed;
                    continue;
                }
                const std::string tail = normalize_text(restore_markers(*parsed, input.names));
                if (is_degenerate(tail)) {
                    ++counts.degenerate_dropped;
                    continue;
                }
                KnowledgeTriple t = KnowledgeTriple::make(*input.event, input.relation, tail, provenance);
                if (!seen.insert(t.id).second) {
                    ++counts.duplicate_dropped;
                    continue;
                }
                ++counts.kept;
                run.corpus.entries.push_back(std::move(t));
            }
        }
    }
    run.report.output_size = run.corpus.size();
    run.report.wall_clock_seconds = seconds_since(start);
    return run;
}

}  // namespace kdist
