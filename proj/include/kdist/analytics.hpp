#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kdist/corpus.hpp"
#include "kdist/llm_client.hpp"

namespace kdist {

struct TokenStats {
    double avg_length = 0.0;  // tokens per item
    std::size_t unique_tokens = 0;
    std::size_t unique_items = 0;
    std::size_t total_items = 0;

    Json to_json() const;
};

/// Per-relation tail statistics plus a row over the distinct events.
struct LexicalStats {
    std::map<Relation, TokenStats> relations;
    TokenStats events;

    Json to_json() const;
};

LexicalStats lexical_stats(const Corpus& corpus);

/// BLEU over 1- and 2-grams against a multi-reference set: geometric mean of
/// clipped precisions times the brevity penalty (closest reference length).
/// No smoothing; single-token candidates use unigram precision only.
/// DataError for an empty reference set.
double bleu2(std::string_view candidate, std::span<const std::string> references);

/// A tail is softly unique when its BLEU-2 against the other tails of the
/// same input is below this.
inline constexpr double kSoftUniqueThreshold = 0.5;

/// Greedy reduction: while some member scores >= threshold against the rest,
/// drop the highest-scoring one (lexicographically smallest on ties).
/// Survivors keep their input order.
std::vector<std::string> soft_unique_subset(std::span<const std::string> tails);

/// Sum of soft-unique subset sizes over (event, relation) groups.
std::size_t softly_unique_size(const Corpus& corpus);

/// Mean total NLL of the rendered triples, converted to bits per example.
double estimate_entropy(std::span<const KnowledgeTriple> sample, NllSource& scorer);

/// h_cross - h_self.
double kl_divergence(double h_self, double h_cross);

struct EntropyReport {
    double h_self = 0.0;
    double h_cross = 0.0;
    double kl = 0.0;
    std::size_t sample_size = 0;
    std::string self_scorer;
    std::string cross_scorer;
    std::vector<std::string> warnings;

    Json to_json() const;
};

/// Entropy under the model of the corpus itself and cross-entropy under a
/// model of another corpus, both on the same sample.
EntropyReport entropy_report(std::span<const KnowledgeTriple> sample, NllSource& self_scorer,
                             NllSource& cross_scorer);

/// Up to n triples drawn without replacement, in corpus order.
std::vector<KnowledgeTriple> sample_triples(const Corpus& corpus, std::size_t n, std::uint64_t seed);

/// Lexical statistics, soft-unique size and (optionally) the entropy block.
Json analytics_report(const Corpus& corpus, const std::optional<EntropyReport>& entropy);

}  // namespace kdist
