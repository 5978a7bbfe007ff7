#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kdist/corpus.hpp"

namespace kdist {

/// Annotator answer options.
enum class RawOption { always_often, sometimes_likely, farfetched_never, invalid, too_unfamiliar };
enum class Verdict { accept, reject, no_judgement };

inline constexpr std::array<RawOption, 5> kAllRawOptions = {
    RawOption::always_often, RawOption::sometimes_likely, RawOption::farfetched_never,
    RawOption::invalid, RawOption::too_unfamiliar,
};

std::string_view to_string(RawOption o);
std::string_view to_string(Verdict v);
std::optional<RawOption> parse_raw_option(std::string_view s);
std::optional<Verdict> parse_verdict(std::string_view s);

/// The first two options accept, the next two reject, the last abstains.
constexpr Verdict map_option(RawOption o) {
    switch (o) {
        case RawOption::always_often:
        case RawOption::sometimes_likely: return Verdict::accept;
        case RawOption::farfetched_never:
        case RawOption::invalid: return Verdict::reject;
        case RawOption::too_unfamiliar: break;
    }
    return Verdict::no_judgement;
}

struct HumanLabel {
    std::string triple_id;
    std::string annotator_id;
    RawOption raw_option;

    Verdict verdict() const { return map_option(raw_option); }
};

/// Combines one triple's annotations: any no-judgement wins, otherwise a
/// strict majority of accepts, with ties resolving to reject.
Verdict aggregate_labels(std::span<const HumanLabel> labels);

struct LabeledTriple {
    KnowledgeTriple triple;
    Verdict verdict;
    int n_annotators;
};

Json to_json(const LabeledTriple& l);
LabeledTriple labeled_from_json(const Json& j);

std::vector<HumanLabel> load_labels(const std::filesystem::path& path);

/// Groups raw labels by triple id (first-seen order) and joins each group with
/// its triple from `corpus`. Unknown ids are a DataError.
std::vector<LabeledTriple> aggregate_label_file(std::span<const HumanLabel> labels, const Corpus& corpus);

std::vector<LabeledTriple> load_labeled(const std::filesystem::path& path);
void save_labeled(std::span<const LabeledTriple> labeled, const std::filesystem::path& path);

struct LabelSplit {
    std::vector<LabeledTriple> train;
    std::vector<LabeledTriple> dev;
    std::vector<LabeledTriple> test;
};

/// Seeded 80/10/10 split: sizes floor(0.8n), floor(0.1n) and the remainder.
LabelSplit split_labeled(std::vector<LabeledTriple> labeled, std::uint64_t seed);

}  // namespace kdist
