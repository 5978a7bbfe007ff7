#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kdist/corpus.hpp"
#include "kdist/labels.hpp"
#include "kdist/llm_client.hpp"
#include "kdist/metrics.hpp"

namespace kdist {

struct CriticScore {
    std::string triple_id;
    double score;  // in [0, 1], higher = more acceptable
};

enum class ScorerKind { remote_http, nll_threshold, token_mean_nll_threshold, constant };

struct ScorerBinding {
    ScorerKind kind = ScorerKind::constant;
    std::string url;
    double value = 1.0;
    std::size_t batch_size = 64;

    void validate() const;
    static ScorerBinding from_json(const Json& j);
};

/// Client for POST {url}/v1/score: {"triples": [{event, relation, tail}]}
/// answered by {"scores": [...]}.
class RemoteCritic {
public:
    RemoteCritic(std::string url, HttpOptions options = {}, std::size_t batch_size = 64);

    std::vector<CriticScore> score(const Corpus& corpus);

private:
    std::string url_;
    HttpOptions options_;
    std::size_t batch_size_;
};

/// 1 - rank/(n-1) with ascending NLL ranks (ties share their mean rank), so
/// the lowest NLL maps to 1 and the highest to 0. A single item maps to 1.
std::vector<double> nll_rank_scores(std::span<const double> nll);

/// Scores every triple by its (token-mean) NLL under `source`.
std::vector<CriticScore> score_by_nll(const Corpus& corpus, NllSource& source, bool token_mean);

/// Dispatches on the binding kind; one score per triple in corpus order.
std::vector<CriticScore> score_corpus(const Corpus& corpus, const ScorerBinding& binding,
                                      const HttpOptions& http = {});

void save_scores(std::span<const CriticScore> scores, const std::filesystem::path& path);
std::vector<CriticScore> load_scores(const std::filesystem::path& path);

using ScoreIndex = std::unordered_map<std::string, double>;

/// DataError on duplicate ids or out-of-range scores.
ScoreIndex index_scores(std::span<const CriticScore> scores);

/// Keeps triples with score >= t, in order, annotating critic_score.
Corpus filter_at_threshold(const Corpus& corpus, const ScoreIndex& scores, double threshold);

/// Threshold that keeps the top ceil(f n) of `scores`.
double cutoff_for_kept_fraction(std::span<const CriticScore> scores, double kept_fraction);

/// Pairs judged items with their scores; no-judgement items are skipped.
std::vector<ScoredLabel> join_labels(std::span<const LabeledTriple> labeled, const ScoreIndex& scores);

struct SweepRow {
    double cutoff;
    std::size_t size;
    double kept_fraction;
    std::size_t size_div;
    std::size_t holdout_kept;
    std::optional<double> holdout_precision;
};

struct SweepReport {
    std::size_t corpus_size = 0;
    std::size_t holdout_size = 0;
    std::vector<SweepRow> rows;

    Json to_json() const;
};

/// Corpus size, kept fraction, soft-unique size and holdout precision at each
/// cutoff. DataError "evaluation contamination" if any holdout id is in
/// training_ids.
SweepReport sweep_report(const Corpus& corpus, const ScoreIndex& scores, std::span<const LabeledTriple> holdout,
                         std::span<const double> cutoffs, const std::unordered_set<std::string>& training_ids = {});

/// AP, recall at the target precision and the precision curve.
Json evaluate_critic(std::span<const ScoredLabel> items, double target_precision, std::span<const double> grid);

}  // namespace kdist
