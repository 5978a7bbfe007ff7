#include "kdist/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "kdist/error.hpp"
#include "kdist/hash.hpp"
#include "kdist/text.hpp"

namespace kdist {
namespace {

using Tokens = std::vector<std::string>;
using NgramCounts = std::map<std::vector<std::string_view>, int>;

NgramCounts ngram_counts(const Tokens& tokens, std::size_t order) {
    NgramCounts counts;
    if (tokens.size() < order) return counts;
    for (std::size_t i = 0; i + order <= tokens.size(); ++i) {
        std::vector<std::string_view> key;
        key.reserve(order);
        for (std::size_t k = 0; k < order; ++k) key.emplace_back(tokens[i + k]);
        ++counts[key];
    }
    return counts;
}

double bleu2_tokens(const Tokens& candidate, std::span<const Tokens* const> references) {
    if (references.empty()) throw DataError("bleu2 needs at least one reference");
    const std::size_t c = candidate.size();
    if (c == 0) {
        for (const Tokens* r : references) {
            if (r->empty()) return 1.0;
        }
        return 0.0;
    }
    const std::size_t max_order = c < 2 ? 1 : 2;
    double log_sum = 0.0;
    for (std::size_t order = 1; order <= max_order; ++order) {
        const NgramCounts cand = ngram_counts(candidate, order);
        NgramCounts max_ref;
        for (const Tokens* r : references) {
            for (const auto& [gram, n] : ngram_counts(*r, order)) {
                int& slot = max_ref[gram];
                slot = std::max(slot, n);
            }
        }
        int matched = 0;
        int total = 0;
        for (const auto& [gram, n] : cand) {
            total += n;
            const auto it = max_ref.find(gram);
            if (it != max_ref.end()) matched += std::min(n, it->second);
        }
        if (matched == 0) return 0.0;
        log_sum += std::log(static_cast<double>(matched) / static_cast<double>(total));
    }
    // Closest reference length, shorter one on ties.
    std::size_t best_len = references.front()->size();
    for (const Tokens* r : references) {
        const auto d = [c](std::size_t len) { return len > c ? len - c : c - len; };
        if (d(r->size()) < d(best_len) || (d(r->size()) == d(best_len) && r->size() < best_len)) best_len = r->size();
    }
    const double bp = c > best_len ? 1.0 : std::exp(1.0 - static_cast<double>(best_len) / static_cast<double>(c));
    return bp * std::exp(log_sum / static_cast<double>(max_order));
}

TokenStats summarize(const std::vector<std::string>& items) {
    TokenStats s;
    s.total_items = items.size();
    if (items.empty()) return s;
    std::unordered_set<std::string> tokens;
    std::unordered_set<std::string> distinct;
    std::size_t length_sum = 0;
    for (const auto& item : items) {
        const auto t = tokenize(item);
        length_sum += t.size();
        tokens.insert(t.begin(), t.end());
        distinct.insert(item);
    }
    s.avg_length = static_cast<double>(length_sum) / static_cast<double>(items.size());
    s.unique_tokens = tokens.size();
    s.unique_items = distinct.size();
    return s;
}

}  // namespace

Json TokenStats::to_json() const {
    Json j;
    j["avg_length_tokens"] = avg_length;
    j["unique_tokens"] = unique_tokens;
    j["unique"] = unique_items;
    j["total"] = total_items;
    return j;
}

Json LexicalStats::to_json() const {
    Json j;
    Json rel = Json::object();
    for (const auto& [r, s] : relations) rel[std::string(display_name(r))] = s.to_json();
    j["relations"] = rel;
    j["events"] = events.to_json();
    return j;
}

LexicalStats lexical_stats(const Corpus& corpus) {
    std::map<Relation, std::vector<std::string>> tails;
    std::vector<std::string> events;
    std::unordered_set<std::string> seen_events;
    for (const auto& t : corpus.entries) {
        tails[t.relation].push_back(t.tail);
        if (seen_events.insert(t.event.text()).second) events.push_back(t.event.text());
    }
    LexicalStats stats;
    for (Relation r : kAllRelations) stats.relations[r] = summarize(tails[r]);
    stats.events = summarize(events);
    return stats;
}

double bleu2(std::string_view candidate, std::span<const std::string> references) {
    if (references.empty()) throw DataError("bleu2 needs at least one reference");
    const Tokens cand = tokenize(candidate);
    std::vector<Tokens> refs;
    refs.reserve(references.size());
    for (const auto& r : references) refs.push_back(tokenize(r));
    std::vector<const Tokens*> ptrs;
    for (const auto& r : refs) ptrs.push_back(&r);
    return bleu2_tokens(cand, ptrs);
}

std::vector<std::string> soft_unique_subset(std::span<const std::string> tails) {
    std::vector<Tokens> tokens;
    tokens.reserve(tails.size());
    for (const auto& t : tails) tokens.push_back(tokenize(t));
    std::vector<bool> alive(tails.size(), true);
    std::size_t n_alive = tails.size();

    while (n_alive > 1) {
        std::size_t worst = tails.size();
        double worst_score = -1.0;
        for (std::size_t i = 0; i < tails.size(); ++i) {
            if (!alive[i]) continue;
            std::vector<const Tokens*> others;
            others.reserve(n_alive - 1);
            for (std::size_t j = 0; j < tails.size(); ++j) {
                if (j != i && alive[j]) others.push_back(&tokens[j]);
            }
            const double s = bleu2_tokens(tokens[i], others);
            if (s > worst_score || (s == worst_score && tails[i] < tails[worst])) {
                worst = i;
                worst_score = s;
            }
        }
        if (worst_score < kSoftUniqueThreshold) break;
        alive[worst] = false;
        --n_alive;
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < tails.size(); ++i) {
        if (alive[i]) out.push_back(tails[i]);
    }
    return out;
}

std::size_t softly_unique_size(const Corpus& corpus) {
    std::unordered_map<std::string, std::size_t> group_of;
    std::vector<std::vector<std::string>> groups;
    for (const auto& t : corpus.entries) {
        const std::string key = t.event.text() + '\t' + std::string(to_string(t.relation));
        const auto [it, inserted] = group_of.try_emplace(key, groups.size());
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(t.tail);
    }
    std::size_t total = 0;
    for (const auto& g : groups) total += soft_unique_subset(g).size();
    return total;
}

double estimate_entropy(std::span<const KnowledgeTriple> sample, NllSource& scorer) {
    if (sample.empty()) throw DataError("entropy estimate needs a nonempty sample");
    std::vector<std::string> texts;
    texts.reserve(sample.size());
    for (const auto& t : sample) texts.push_back(render_triple_text(t));
    const auto results = scorer.score(texts);
    if (results.size() != texts.size()) throw RemoteError("scorer returned the wrong number of results");
    double sum = 0.0;
    for (const auto& r : results) sum += r.total_nll;
    return sum / static_cast<double>(results.size()) / std::numbers::ln2;
}

double kl_divergence(double h_self, double h_cross) { return h_cross - h_self; }

Json EntropyReport::to_json() const {
    Json j;
    j["unit"] = "bits/example";
    j["sample_size"] = sample_size;
    j["entropy"] = h_self;
    j["cross_entropy"] = h_cross;
    j["kl_divergence"] = kl;
    j["self_scorer"] = self_scorer;
    j["cross_scorer"] = cross_scorer;
    j["warnings"] = warnings;
    return j;
}

EntropyReport entropy_report(std::span<const KnowledgeTriple> sample, NllSource& self_scorer,
                             NllSource& cross_scorer) {
    EntropyReport r;
    r.sample_size = sample.size();
    r.h_self = estimate_entropy(sample, self_scorer);
    r.h_cross = estimate_entropy(sample, cross_scorer);
    r.kl = kl_divergence(r.h_self, r.h_cross);
    r.self_scorer = self_scorer.id();
    r.cross_scorer = cross_scorer.id();
    if (r.kl < 0.0) r.warnings.push_back("negative KL estimate (finite-sample effect)");
    return r;
}

std::vector<KnowledgeTriple> sample_triples(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
    if (n >= corpus.size()) return corpus.entries;
    std::vector<std::size_t> idx(corpus.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    DeterministicRng rng(seed);
    deterministic_shuffle(idx, rng);
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    std::vector<KnowledgeTriple> out;
    out.reserve(n);
    for (std::size_t i : idx) out.push_back(corpus.entries[i]);
    return out;
}

Json analytics_report(const Corpus& corpus, const std::optional<EntropyReport>& entropy) {
    Json j;
    j["size"] = corpus.size();
    j["size_div"] = softly_unique_size(corpus);
    j["lexical"] = lexical_stats(corpus).to_json();
    j["entropy"] = entropy ? entropy->to_json() : Json(nullptr);
    return j;
}

}  // namespace kdist
