#include "kdist/labels.hpp"

#include <unordered_map>

#include "kdist/error.hpp"
#include "kdist/hash.hpp"

namespace kdist {
namespace {

constexpr std::array<std::string_view, 5> kOptionNames = {
    "always_often", "sometimes_likely", "farfetched_never", "invalid", "too_unfamiliar"};
constexpr std::array<std::string_view, 3> kVerdictNames = {"accept", "reject", "no_judgement"};

}  // namespace

std::string_view to_string(RawOption o) { return kOptionNames[static_cast<std::size_t>(o)]; }
std::string_view to_string(Verdict v) { return kVerdictNames[static_cast<std::size_t>(v)]; }

std::optional<RawOption> parse_raw_option(std::string_view s) {
    for (std::size_t i = 0; i < kOptionNames.size(); ++i) {
        if (kOptionNames[i] == s) return static_cast<RawOption>(i);
    }
    return std::nullopt;
}

std::optional<Verdict> parse_verdict(std::string_view s) {
    for (std::size_t i = 0; i < kVerdictNames.size(); ++i) {
        if (kVerdictNames[i] == s) return static_cast<Verdict>(i);
    }
    return std::nullopt;
}

Verdict aggregate_labels(std::span<const HumanLabel> labels) {
    if (labels.empty()) throw DataError("no labels");
    std::size_t accepts = 0;
    std::size_t rejects = 0;
    bool abstained = false;
    for (const auto& l : labels) {
        if (l.triple_id != labels.front().triple_id) throw DataError("inconsistent label group");
        switch (l.verdict()) {
            case Verdict::accept: ++accepts; break;
            case Verdict::reject: ++rejects; break;
            case Verdict::no_judgement: abstained = true; break;
        }
    }
    if (abstained) return Verdict::no_judgement;
    return accepts > rejects ? Verdict::accept : Verdict::reject;
}

Json to_json(const LabeledTriple& l) {
    Json j = to_json(l.triple);
    j["verdict"] = std::string(to_string(l.verdict));
    j["n_annotators"] = l.n_annotators;
    return j;
}

LabeledTriple labeled_from_json(const Json& j) {
    const auto v = j.find("verdict");
    if (v == j.end() || !v->is_string()) throw DataError("missing string field \"verdict\"");
    const auto verdict = parse_verdict(v->get<std::string>());
    if (!verdict) throw DataError("unknown verdict \"" + v->get<std::string>() + "\"");
    const auto n = j.find("n_annotators");
    if (n == j.end() || !n->is_number_integer() || n->get<int>() < 1) {
        throw DataError("n_annotators must be a positive integer");
    }
    return LabeledTriple{triple_from_json(j), *verdict, n->get<int>()};
}

std::vector<HumanLabel> load_labels(const std::filesystem::path& path) {
    std::vector<HumanLabel> out;
    for_each_jsonl(path, [&](const Json& j, std::size_t) {
        const auto id = j.find("triple_id");
        const auto annotator = j.find("annotator_id");
        const auto option = j.find("raw_option");
        if (id == j.end() || !id->is_string()) throw DataError("missing string field \"triple_id\"");
        if (annotator == j.end() || !annotator->is_string()) throw DataError("missing string field \"annotator_id\"");
        if (option == j.end() || !option->is_string()) throw DataError("missing string field \"raw_option\"");
        const auto parsed = parse_raw_option(option->get<std::string>());
        if (!parsed) throw DataError("unknown raw_option \"" + option->get<std::string>() + "\"");
        out.push_back({id->get<std::string>(), annotator->get<std::string>(), *parsed});
    });
    return out;
}

std::vector<LabeledTriple> aggregate_label_file(std::span<const HumanLabel> labels, const Corpus& corpus) {
    std::unordered_map<std::string, const KnowledgeTriple*> by_id;
    for (const auto& t : corpus.entries) by_id.emplace(t.id, &t);

    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<HumanLabel>> groups;
    for (const auto& l : labels) {
        auto [it, inserted] = groups.try_emplace(l.triple_id);
        if (inserted) order.push_back(l.triple_id);
        it->second.push_back(l);
    }

    std::vector<LabeledTriple> out;
    out.reserve(order.size());
    for (const auto& id : order) {
        const auto found = by_id.find(id);
        if (found == by_id.end()) throw DataError("label refers to unknown triple_id " + id);
        const auto& group = groups.at(id);
        out.push_back({*found->second, aggregate_labels(group), static_cast<int>(group.size())});
    }
    return out;
}

std::vector<LabeledTriple> load_labeled(const std::filesystem::path& path) {
    std::vector<LabeledTriple> out;
    for_each_jsonl(path, [&](const Json& j, std::size_t) { out.push_back(labeled_from_json(j)); });
    return out;
}

void save_labeled(std::span<const LabeledTriple> labeled, const std::filesystem::path& path) {
    std::string out;
    for (const auto& l : labeled) {
        out += dump_line(to_json(l));
        out += '\n';
    }
    write_file_atomic(path, out);
}

LabelSplit split_labeled(std::vector<LabeledTriple> labeled, std::uint64_t seed) {
    const std::size_t n = labeled.size();
    if (n < 10) throw DataError("too few labels to split");
    DeterministicRng rng(seed);
    deterministic_shuffle(labeled, rng);
    const std::size_t n_train = n * 8 / 10;
    const std::size_t n_dev = n / 10;
    LabelSplit split;
    auto first = std::make_move_iterator(labeled.begin());
    split.train.assign(first, first + static_cast<std::ptrdiff_t>(n_train));
    split.dev.assign(first + static_cast<std::ptrdiff_t>(n_train),
                     first + static_cast<std::ptrdiff_t>(n_train + n_dev));
    split.test.assign(first + static_cast<std::ptrdiff_t>(n_train + n_dev), std::make_move_iterator(labeled.end()));
    return split;
}

}  // namespace kdist
