#include "kdist/critic.hpp"

#include <algorithm>
#include <numeric>

#include "kdist/analytics.hpp"
#include "kdist/error.hpp"
#include "kdist/metrics.hpp"

namespace kdist {

// ---- bindings ---------------------------------------------------------------------

void ScorerBinding::validate() const {
    switch (kind) {
        case ScorerKind::constant:
            if (!(value >= 0.0 && value <= 1.0)) throw UsageError("constant scorer value must be in [0, 1]");
            break;
        case ScorerKind::remote_http:
        case ScorerKind::nll_threshold:
        case ScorerKind::token_mean_nll_threshold:
            if (url.empty()) throw UsageError("scorer binding needs a url");
            break;
    }
    if (batch_size < 1) throw UsageError("scorer batch_size must be >= 1");
}

ScorerBinding ScorerBinding::from_json(const Json& j) {
    ScorerBinding b;
    const std::string kind = j.value("kind", std::string());
    if (kind == "constant") b.kind = ScorerKind::constant;
    else if (kind == "remote_http") b.kind = ScorerKind::remote_http;
    else if (kind == "nll_threshold") b.kind = ScorerKind::nll_threshold;
    else if (kind == "token_mean_nll_threshold") b.kind = ScorerKind::token_mean_nll_threshold;
    else throw UsageError("unknown scorer kind \"" + kind + "\"");
    try {
        b.url = j.value("url", b.url);
        b.value = j.value("value", b.value);
        b.batch_size = j.value("batch_size", b.batch_size);
    } catch (const Json::exception& e) {
        throw UsageError(std::string("bad scorer binding: ") + e.what());
    }
    b.validate();
    return b;
}

// ---- scoring ----------------------------------------------------------------------

RemoteCritic::RemoteCritic(std::string url, HttpOptions options, std::size_t batch_size)
    : url_(std::move(url)), options_(std::move(options)), batch_size_(std::max<std::size_t>(1, batch_size)) {}

std::vector<CriticScore> RemoteCritic::score(const Corpus& corpus) {
    std::vector<CriticScore> out;
    out.reserve(corpus.size());
    for (std::size_t start = 0; start < corpus.size(); start += batch_size_) {
        const std::size_t end = std::min(corpus.size(), start + batch_size_);
        Json body;
        body["triples"] = Json::array();
        for (std::size_t i = start; i < end; ++i) {
            const auto& t = corpus.entries[i];
            body["triples"].push_back({{"event", t.event.text()},
                                       {"relation", std::string(to_string(t.relation))},
                                       {"tail", t.tail}});
        }
        const Json reply = post_json(url_, "/v1/score", body, options_);
        const auto scores = reply.find("scores");
        if (!reply.is_object() || scores == reply.end() || !scores->is_array() || scores->size() != end - start) {
            throw RemoteError("malformed /v1/score response: " + excerpt(reply.dump()));
        }
        for (std::size_t i = start; i < end; ++i) {
            const Json& s = (*scores)[i - start];
            const std::string& id = corpus.entries[i].id;
            if (!s.is_number()) throw RemoteError("non-numeric score for triple " + id);
            const double v = s.get<double>();
            if (!(v >= 0.0 && v <= 1.0)) {
                throw RemoteError("score " + std::to_string(v) + " outside [0,1] for triple " + id);
            }
            out.push_back({id, v});
        }
    }
    return out;
}

std::vector<double> nll_rank_scores(std::span<const double> nll) {
    const std::size_t n = nll.size();
    std::vector<double> out(n, 1.0);
    if (n <= 1) return out;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return nll[a] < nll[b]; });
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && nll[order[j + 1]] == nll[order[i]]) ++j;
        const double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) out[order[k]] = 1.0 - mean_rank / static_cast<double>(n - 1);
        i = j + 1;
    }
    return out;
}

std::vector<CriticScore> score_by_nll(const Corpus& corpus, NllSource& source, bool token_mean) {
    std::vector<std::string> texts;
    texts.reserve(corpus.size());
    for (const auto& t : corpus.entries) texts.push_back(render_triple_text(t));
    const auto results = source.score(texts);
    if (results.size() != texts.size()) throw RemoteError("NLL scorer returned the wrong number of results");
    std::vector<double> values;
    values.reserve(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (token_mean) {
            if (results[i].n_tokens == 0) throw DataError("untokenizable text for triple " + corpus.entries[i].id);
            values.push_back(results[i].token_mean());
        } else {
            values.push_back(results[i].total_nll);
        }
    }
    const auto ranked = nll_rank_scores(values);
    std::vector<CriticScore> out;
    out.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) out.push_back({corpus.entries[i].id, ranked[i]});
    return out;
}

std::vector<CriticScore> score_corpus(const Corpus& corpus, const ScorerBinding& binding, const HttpOptions& http) {
    binding.validate();
    switch (binding.kind) {
        case ScorerKind::constant: {
            std::vector<CriticScore> out;
            out.reserve(corpus.size());
            for (const auto& t : corpus.entries) out.push_back({t.id, binding.value});
            return out;
        }
        case ScorerKind::remote_http:
            return RemoteCritic(binding.url, http, binding.batch_size).score(corpus);
        case ScorerKind::nll_threshold:
        case ScorerKind::token_mean_nll_threshold: {
            HttpNllScorer scorer(binding.url, http, binding.batch_size);
            return score_by_nll(corpus, scorer, binding.kind == ScorerKind::token_mean_nll_threshold);
        }
    }
    throw UsageError("unhandled scorer kind");
}

// ---- scores I/O -----------------------------------------------------------------------

void save_scores(std::span<const CriticScore> scores, const std::filesystem::path& path) {
    std::string out;
    for (const auto& s : scores) {
        Json j;
        j["triple_id"] = s.triple_id;
        j["score"] = s.score;
        out += dump_line(j);
        out += '\n';
    }
    write_file_atomic(path, out);
}

std::vector<CriticScore> load_scores(const std::filesystem::path& path) {
    std::vector<CriticScore> out;
    for_each_jsonl(path, [&](const Json& j, std::size_t) {
        if (!j.contains("triple_id") || !j["triple_id"].is_string()) throw DataError("missing string field \"triple_id\"");
        if (!j.contains("score") || !j["score"].is_number()) throw DataError("missing numeric field \"score\"");
        const double s = j["score"].get<double>();
        if (!(s >= 0.0 && s <= 1.0)) throw DataError("score outside [0,1]");
        out.push_back({j["triple_id"].get<std::string>(), s});
    });
    return out;
}

ScoreIndex index_scores(std::span<const CriticScore> scores) {
    ScoreIndex index;
    index.reserve(scores.size());
    for (const auto& s : scores) {
        if (!(s.score >= 0.0 && s.score <= 1.0)) throw DataError("score outside [0,1] for triple " + s.triple_id);
        if (!index.emplace(s.triple_id, s.score).second) throw DataError("duplicate score for triple " + s.triple_id);
    }
    return index;
}

// ---- gate -------------------------------------------------------------------------------

Corpus filter_at_threshold(const Corpus& corpus, const ScoreIndex& scores, double threshold) {
    Corpus out;
    out.source_path = corpus.source_path;
    for (const auto& t : corpus.entries) {
        const auto it = scores.find(t.id);
        if (it == scores.end()) throw DataError("no critic score for triple " + t.id);
        if (it->second >= threshold) {
            KnowledgeTriple kept = t;
            kept.critic_score = it->second;
            out.entries.push_back(std::move(kept));
        }
    }
    return out;
}

double cutoff_for_kept_fraction(std::span<const CriticScore> scores, double kept_fraction) {
    if (scores.empty()) throw DataError("cannot tune a cutoff on an empty score set");
    std::vector<double> values;
    values.reserve(scores.size());
    for (const auto& s : scores) values.push_back(s.score);
    std::sort(values.begin(), values.end(), std::greater<>());
    return values[kept_count_for_fraction(kept_fraction, values.size()) - 1];
}

std::vector<ScoredLabel> join_labels(std::span<const LabeledTriple> labeled, const ScoreIndex& scores) {
    std::vector<ScoredLabel> items;
    items.reserve(labeled.size());
    for (const auto& l : labeled) {
        if (l.verdict == Verdict::no_judgement) continue;
        const auto it = scores.find(l.triple.id);
        if (it == scores.end()) throw DataError("no critic score for labeled triple " + l.triple.id);
        items.push_back({l.triple.id, it->second, l.verdict == Verdict::accept});
    }
    return items;
}

Json SweepReport::to_json() const {
    Json j;
    j["corpus_size"] = corpus_size;
    j["holdout_size"] = holdout_size;
    j["rows"] = Json::array();
    for (const auto& r : rows) {
        Json row;
        row["cutoff"] = r.cutoff;
        row["size"] = r.size;
        row["kept_fraction"] = r.kept_fraction;
        row["size_div"] = r.size_div;
        row["holdout_kept"] = r.holdout_kept;
        row["accept_rate"] = r.holdout_precision ? Json(*r.holdout_precision) : Json(nullptr);
        j["rows"].push_back(row);
    }
    return j;
}

SweepReport sweep_report(const Corpus& corpus, const ScoreIndex& scores, std::span<const LabeledTriple> holdout,
                         std::span<const double> cutoffs, const std::unordered_set<std::string>& training_ids) {
    for (const auto& l : holdout) {
        if (training_ids.contains(l.triple.id)) {
            throw DataError("evaluation contamination: holdout triple " + l.triple.id + " is in the training ids");
        }
    }
    const auto judged = join_labels(holdout, scores);
    SweepReport report;
    report.corpus_size = corpus.size();
    report.holdout_size = judged.size();
    for (double cutoff : cutoffs) {
        const Corpus kept = filter_at_threshold(corpus, scores, cutoff);
        SweepRow row{cutoff, kept.size(),
                     corpus.empty() ? 0.0 : static_cast<double>(kept.size()) / static_cast<double>(corpus.size()),
                     softly_unique_size(kept), 0, std::nullopt};
        std::size_t accepted = 0;
        for (const auto& item : judged) {
            if (item.score < cutoff) continue;
            ++row.holdout_kept;
            accepted += item.positive ? 1 : 0;
        }
        if (row.holdout_kept > 0) {
            row.holdout_precision = static_cast<double>(accepted) / static_cast<double>(row.holdout_kept);
        }
        report.rows.push_back(row);
    }
    return report;
}

Json evaluate_critic(std::span<const ScoredLabel> items, double target_precision, std::span<const double> grid) {
    Json j;
    std::size_t positives = 0;
    for (const auto& it : items) positives += it.positive ? 1 : 0;
    j["n"] = items.size();
    j["positives"] = positives;
    j["average_precision"] = average_precision(items);
    j["target_precision"] = target_precision;
    j["recall_at_precision"] = recall_at_precision(items, target_precision);
    j["precision_curve"] = precision_curve(items, grid).to_json();
    return j;
}

}  // namespace kdist
