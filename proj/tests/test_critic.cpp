#include <cmath>
#include <map>

#include "doctest.h"
#include "kdist/analytics.hpp"
#include "kdist/critic.hpp"
#include "kdist/error.hpp"
#include "kdist/metrics.hpp"
#include "support/fixtures.hpp"
#include "support/mock_server.hpp"
#include "support/oracles.hpp"

using namespace kdist;
using namespace kdist::testing;

namespace {

// NLL source answering from a fixed table of (total, tokens) per text.
class TableNll : public NllSource {
public:
    explicit TableNll(std::map<std::string, NllResult> table) : table_(std::move(table)) {}
    std::vector<NllResult> score(std::span<const std::string> texts) override {
        std::vector<NllResult> out;
        for (const auto& t : texts) out.push_back(table_.at(t));
        return out;
    }
    std::string id() const override { return "table"; }

private:
    std::map<std::string, NllResult> table_;
};

std::vector<ScoredLabel> four_point() {
    return {{"a", 0.9, true}, {"b", 0.8, false}, {"c", 0.7, true}, {"d", 0.6, false}};
}

Corpus three_corpus() {
    return Corpus{{triple("PersonX runs", Relation::xAttr, "fast"), triple("PersonX runs", Relation::xAttr, "slow"),
                   triple("PersonX eats", Relation::xReact, "full")},
                  {}};
}

}  // namespace

TEST_CASE("average precision") {
    const std::vector<ScoredLabel> perfect = {{"a", 0.9, true}, {"b", 0.8, true}, {"c", 0.1, false}};
    CHECK(average_precision(perfect) == 1.0);
    CHECK(average_precision(four_point()) == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-12));

    std::vector<oracle::Item> o;
    for (const auto& i : four_point()) o.push_back({i.id, i.score, i.positive});
    CHECK(average_precision(four_point()) == oracle::average_precision(o));

    auto transformed = four_point();
    for (auto& i : transformed) i.score = std::exp(5.0 * i.score) - 3.0;
    CHECK(average_precision(transformed) == average_precision(four_point()));

    const std::vector<ScoredLabel> all_positive = {{"a", 0.1, true}, {"b", 0.2, true}};
    CHECK_THROWS_AS(average_precision(all_positive), DataError);
}

TEST_CASE("recall at precision") {
    const std::vector<ScoredLabel> perfect = {{"a", 0.9, true}, {"b", 0.8, true}, {"c", 0.1, false}};
    CHECK(recall_at_precision(perfect, 1.0) == 1.0);
    CHECK(recall_at_precision(perfect, 0.8) == 1.0);
    const std::vector<ScoredLabel> flat = {{"a", 0.5, true}, {"b", 0.5, false}, {"c", 0.5, true}, {"d", 0.5, false}};
    CHECK(recall_at_precision(flat, 0.8) == 0.0);
    CHECK(recall_at_precision(four_point(), 0.8) == 0.5);
}

TEST_CASE("precision curve") {
    const std::vector<double> grid = {1.0, 0.5};
    const auto curve = precision_curve(four_point(), grid);
    REQUIRE(curve.points.size() == 2);
    CHECK(curve.points[0].precision == 0.5);
    CHECK(curve.points[1].precision == 0.5);
    CHECK(curve.points[1].kept_count == 2);
    CHECK(curve.points[1].threshold == 0.8);

    // Oracle scorer: any fraction up to the positive rate is all positives.
    const std::vector<ScoredLabel> oracle_scored = {{"a", 1, true}, {"b", 0, false}, {"c", 1, true}, {"d", 0, false},
                                                    {"e", 1, true}};
    const std::vector<double> low = {0.6, 0.4, 0.2};
    for (const auto& p : precision_curve(oracle_scored, low).points) CHECK(p.precision == 1.0);
    const std::vector<double> full = {1.0};
    CHECK(precision_curve(oracle_scored, full).points[0].precision == 0.6);

    CHECK(kept_count_for_fraction(0.3, 10) == 3);
    CHECK(kept_count_for_fraction(0.01, 10) == 1);
    CHECK_THROWS_AS(kept_count_for_fraction(0.0, 10), UsageError);
}

TEST_CASE("constant scorer") {
    Corpus c;
    for (int i = 0; i < 5; ++i) c.entries.push_back(triple("PersonX runs", Relation::xWant, "rest " + std::to_string(i)));
    ScorerBinding b;
    b.value = 0.7;
    const auto scores = score_corpus(c, b);
    REQUIRE(scores.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(scores[i].score == 0.7);
        CHECK(scores[i].triple_id == c.entries[i].id);
    }
}

TEST_CASE("NLL rank scores") {
    const std::vector<double> nll = {1.0, 2.0, 2.0, 3.0};
    CHECK(nll_rank_scores(nll) == std::vector<double>{1.0, 0.5, 0.5, 0.0});
    const std::vector<double> one = {4.0};
    CHECK(nll_rank_scores(one) == std::vector<double>{1.0});

    const Corpus c = three_corpus();
    std::map<std::string, NllResult> table;
    // Token-mean NLLs 3.0, 1.0, 2.0.
    table[render_triple_text(c.entries[0])] = {9.0, 3};
    table[render_triple_text(c.entries[1])] = {4.0, 4};
    table[render_triple_text(c.entries[2])] = {4.0, 2};
    TableNll source(table);
    const auto by_mean = score_by_nll(c, source, true);
    CHECK(by_mean[1].score > by_mean[2].score);
    CHECK(by_mean[2].score > by_mean[0].score);
    const auto by_total = score_by_nll(c, source, false);
    CHECK(by_total[0].score == 0.0);
    CHECK(by_total[1].score == 0.75);
}

TEST_CASE("remote critic replays served scores") {
    MockServer server([](httplib::Server& s) {
        s.Post("/v1/score", [](const httplib::Request& req, httplib::Response& res) {
            const Json body = Json::parse(req.body);
            Json scores = Json::array();
            for (const auto& t : body["triples"]) {
                scores.push_back(t["tail"] == "fast" ? 0.9 : t["relation"] == "xreact" ? 0.2 : 0.4);
            }
            res.set_content(Json{{"scores", scores}}.dump(), "application/json");
        });
        s.Post("/bad/v1/score", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"scores":[2.0]})", "application/json");
        });
    });
    ScorerBinding b;
    b.kind = ScorerKind::remote_http;
    b.url = server.url();
    b.batch_size = 2;
    const auto scores = score_corpus(three_corpus(), b);
    REQUIRE(scores.size() == 3);
    CHECK(scores[0].score == 0.9);
    CHECK(scores[1].score == 0.4);
    CHECK(scores[2].score == 0.2);
    b.url = server.url() + "/bad";
    CHECK_THROWS_AS(score_corpus(three_corpus(), b), RemoteError);
}

TEST_CASE("filter at threshold") {
    const Corpus c = three_corpus();
    const std::vector<CriticScore> raw = {{c.entries[0].id, 0.9}, {c.entries[1].id, 0.5}, {c.entries[2].id, 0.2}};
    const ScoreIndex idx = index_scores(raw);
    CHECK(filter_at_threshold(c, idx, 0.0).size() == 3);
    CHECK(filter_at_threshold(c, idx, std::nextafter(0.9, 1.0)).empty());
    const auto kept = filter_at_threshold(c, idx, 0.5);
    REQUIRE(kept.size() == 2);
    CHECK(kept.entries[1].critic_score == 0.5);

    ScoreIndex partial = idx;
    partial.erase(c.entries[2].id);
    try {
        filter_at_threshold(c, partial, 0.1);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find(c.entries[2].id) != std::string::npos);
    }
    const std::vector<CriticScore> dup = {{"x", 0.1}, {"x", 0.2}};
    CHECK_THROWS_AS(index_scores(dup), DataError);
    const std::vector<CriticScore> out_of_range = {{"x", 1.5}};
    CHECK_THROWS_AS(index_scores(out_of_range), DataError);

    CHECK(cutoff_for_kept_fraction(raw, 0.68) == 0.2);
    CHECK(cutoff_for_kept_fraction(raw, 0.34) == 0.5);
    CHECK(cutoff_for_kept_fraction(raw, 0.33) == 0.9);
}

TEST_CASE("scores file round trip") {
    const auto dir = scratch_dir("scores");
    const std::vector<CriticScore> s = {{"a", 0.25}, {"b", 1.0 / 3.0}};
    save_scores(s, dir / "s.jsonl");
    const auto back = load_scores(dir / "s.jsonl");
    REQUIRE(back.size() == 2);
    CHECK(back[1].score == s[1].score);
}

TEST_CASE("sweep report matches a brute-force recount") {
    DeterministicRng rng(99);
    const Corpus c = random_corpus(rng, 30);
    ScoreIndex scores;
    std::vector<LabeledTriple> holdout;
    for (std::size_t i = 0; i < c.size(); ++i) {
        scores[c.entries[i].id] = static_cast<double>(rng.below(21)) / 20.0;
        if (i % 2 == 0) {
            const Verdict v = i % 6 == 0 ? Verdict::no_judgement : (rng.below(3) ? Verdict::accept : Verdict::reject);
            holdout.push_back({c.entries[i], v, 3});
        }
    }
    const std::vector<double> cutoffs = {0.0, 0.3, 0.55, 0.8, 1.0};
    const auto report = sweep_report(c, scores, holdout, cutoffs);
    REQUIRE(report.rows.size() == cutoffs.size());
    for (std::size_t k = 0; k < cutoffs.size(); ++k) {
        std::size_t size = 0;
        Corpus kept;
        for (const auto& t : c.entries) {
            if (scores.at(t.id) >= cutoffs[k]) {
                ++size;
                kept.entries.push_back(t);
            }
        }
        std::size_t judged = 0;
        std::size_t accepted = 0;
        for (const auto& l : holdout) {
            if (l.verdict == Verdict::no_judgement || scores.at(l.triple.id) < cutoffs[k]) continue;
            ++judged;
            accepted += l.verdict == Verdict::accept ? 1 : 0;
        }
        const auto& row = report.rows[k];
        CHECK(row.size == size);
        CHECK(row.size_div == softly_unique_size(kept));
        CHECK(row.holdout_kept == judged);
        if (judged) CHECK(*row.holdout_precision == static_cast<double>(accepted) / static_cast<double>(judged));
        CHECK(row.kept_fraction == static_cast<double>(size) / 30.0);
    }
    std::unordered_set<std::string> train = {holdout[1].triple.id};
    CHECK_THROWS_WITH_AS(sweep_report(c, scores, holdout, cutoffs, train), doctest::Contains("contamination"),
                         DataError);
}

TEST_CASE("evaluate_critic skips no-judgement labels") {
    const Corpus c = three_corpus();
    ScoreIndex idx = {{c.entries[0].id, 0.9}, {c.entries[1].id, 0.3}, {c.entries[2].id, 0.5}};
    const std::vector<LabeledTriple> labeled = {{c.entries[0], Verdict::accept, 3},
                                                {c.entries[1], Verdict::reject, 3},
                                                {c.entries[2], Verdict::no_judgement, 3}};
    const auto items = join_labels(labeled, idx);
    REQUIRE(items.size() == 2);
    const std::vector<double> grid = {1.0, 0.5};
    const Json j = evaluate_critic(items, 0.8, grid);
    CHECK(j["n"] == 2);
    CHECK(j["average_precision"] == 1.0);
    CHECK(j["recall_at_precision"] == 1.0);
    CHECK(j["precision_curve"].size() == 2);
}

TEST_CASE("scorer bindings") {
    CHECK_THROWS_AS(ScorerBinding::from_json(Json{{"kind", "magic"}}), UsageError);
    CHECK_THROWS_AS(ScorerBinding::from_json(Json{{"kind", "remote_http"}}), UsageError);
    CHECK(ScorerBinding::from_json(Json{{"kind", "constant"}, {"value", 0.3}}).value == 0.3);
}
