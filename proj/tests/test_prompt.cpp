#include <set>

#include "doctest.h"
#include "kdist/error.hpp"
#include "kdist/prompt.hpp"
#include "kdist/text.hpp"
#include "support/fixtures.hpp"

using namespace kdist;
using namespace kdist::testing;

namespace {

const TemplateSet& templates() {
    static const TemplateSet set = TemplateSet::load(data_dir() / "templates");
    return set;
}

const SeedPool& seed_pool() {
    static const SeedPool pool = SeedPool::load(data_dir() / "templates" / "seed_events.txt");
    return pool;
}

}  // namespace

TEST_CASE("template files load") {
    CHECK(templates().events().n_examples == 10);
    for (Relation r : kAllRelations) {
        const auto& t = templates().for_relation(r);
        REQUIRE(t.relation.has_value());
        CHECK(*t.relation == r);
        CHECK(t.examples.size() == t.n_examples);
    }
    CHECK(templates().names().slots.size() >= 10);
    CHECK(seed_pool().events.size() == 100);
}

TEST_CASE("parse_template reads quoted and bare values") {
    const auto t = parse_template(
        "task_prompt: Say things.\n"
        "input: \"{index}. Event:\"\n"
        "joiner: \" \"\n"
        "output: \"{event}\"\n"
        "n_examples: 1\n");
    CHECK(t.task_prompt == "Say things.");
    CHECK(t.input_pattern == "{index}. Event:");
    CHECK(t.joiner == " ");
    CHECK(t.n_examples == 1);
    CHECK_THROWS_AS(parse_template("bogus_key: 1\n"), DataError);
}

TEST_CASE("event prompt numbering and determinism") {
    PromptTemplate one = templates().events();
    one.n_examples = 1;
    const std::vector<Event> seed = {Event("PersonX looks at flowers")};
    CHECK(render_event_prompt(one, seed) == "1. Event: PersonX looks at flowers\n\n2. Event:");

    const auto seeds = sample_seed_events(seed_pool(), 10, 123);
    const auto a = render_event_prompt(templates().events(), seeds);
    const auto b = render_event_prompt(templates().events(), sample_seed_events(seed_pool(), 10, 123));
    CHECK(a == b);
    CHECK(a.ends_with("11. Event:"));
    CHECK_THROWS_AS(render_event_prompt(templates().events(), seed), DataError);
}

TEST_CASE("seed sampling") {
    const auto ten = sample_seed_events(seed_pool(), 10, 1);
    std::set<std::string> distinct;
    for (const auto& e : ten) distinct.insert(e.text());
    CHECK(distinct.size() == 10);

    const auto all = sample_seed_events(seed_pool(), 100, 2);
    std::set<std::string> got;
    std::set<std::string> want;
    for (const auto& e : all) got.insert(e.text());
    for (const auto& e : seed_pool().events) want.insert(e.text());
    CHECK(got == want);

    std::set<std::vector<std::string>> draws;
    for (std::uint64_t s = 0; s < 20; ++s) {
        std::vector<std::string> d;
        for (const auto& e : sample_seed_events(seed_pool(), 10, s)) d.push_back(e.text());
        draws.insert(d);
    }
    CHECK(draws.size() >= 2);
    CHECK_THROWS_AS(sample_seed_events(seed_pool(), 101, 0), DataError);
}

TEST_CASE("seed pool rejects duplicates") {
    const auto dir = scratch_dir("seedpool");
    write_file_atomic(dir / "dup.txt", "PersonX runs\n# comment\n\nPersonX  runs\n");
    CHECK_THROWS_AS(SeedPool::load(dir / "dup.txt"), DataError);
    write_file_atomic(dir / "bad.txt", "someone runs\n");
    CHECK_THROWS_AS(SeedPool::load(dir / "bad.txt"), DataError);
}

TEST_CASE("name substitution") {
    const NameAssignment n{"Alex", "Chris"};
    CHECK(substitute_names("PersonX makes PersonY wait", n) == "Alex makes Chris wait");
    CHECK(substitute_names("it rains", n) == "it rains");
    CHECK(restore_markers("Alex feels tired", n) == "PersonX feels tired");
    CHECK(restore_markers("Alexandra feels tired", n) == "Alexandra feels tired");
    CHECK(restore_markers("Chris thanks Alex", n) == "PersonY thanks PersonX");
    CHECK_THROWS_AS((NameAssignment{"Al", "Alex"}.validate()), DataError);
}

TEST_CASE("substitute then restore is the identity when names are absent") {
    const auto& pool = templates().names();
    int checked = 0;
    for (std::uint64_t k = 0; k < 200; ++k) {
        const NameAssignment names = pool.draw(k);
        const std::string& text = seed_pool().events[k % seed_pool().events.size()].text();
        if (contains_whole_word(text, names.x) || contains_whole_word(text, names.y)) continue;
        CHECK(restore_markers(substitute_names(text, names), names) == text);
        ++checked;
    }
    CHECK(checked > 150);
}

TEST_CASE("name draws are distinct and deterministic") {
    const auto& pool = templates().names();
    for (std::uint64_t k = 0; k < 50; ++k) {
        const auto a = pool.draw(k);
        CHECK(a == pool.draw(k));
        CHECK(a.x != a.y);
    }
}

TEST_CASE("inference prompts end with the open slot") {
    const Event target("PersonX makes PersonY wait");
    const NameAssignment n{"Alex", "Chris"};
    CHECK(render_inference_prompt(templates(), Relation::xNeed, target, n).ends_with("11. Before Alex makes Chris wait, Alex has"));
    CHECK(render_inference_prompt(templates(), Relation::xReact, target, n).ends_with("Alex feels"));
    CHECK(render_inference_prompt(templates(), Relation::HinderedBy, target, n).ends_with("This is hindered if"));
    for (Relation r : kAllRelations) {
        const auto golden = slurp(test_dir() / "golden" / (std::string(to_string(r)) + ".txt"));
        CHECK(render_inference_prompt(templates(), r, target, n) == golden);
    }
}

TEST_CASE("parse_event_completion") {
    CHECK(parse_event_completion(" X buys a boat\n12. Event: X sells a car") ==
          std::vector<std::string>{"PersonX buys a boat", "PersonX sells a car"});
    CHECK(parse_event_completion("").empty());
    CHECK(parse_event_completion(" PersonX runs\n\n12. Event: PersonX eats\nsome junk\n13. Event: PersonX sleeps") ==
          std::vector<std::string>{"PersonX runs", "PersonX eats"});
    CHECK(parse_event_completion(" PersonX asks Y for help.\n") == std::vector<std::string>{"PersonX asks PersonY for help"});
    // Candidates without a PersonX marker are dropped.
    CHECK(parse_event_completion(" the sun rises\n12. Event: PersonX wakes").size() == 1);
}

TEST_CASE("parse_inference_completion") {
    const auto& xneed = templates().for_relation(Relation::xNeed);
    const auto& xreact = templates().for_relation(Relation::xReact);
    const auto& xattr = templates().for_relation(Relation::xAttr);
    CHECK(parse_inference_completion(xneed, " to wear running shoes\nSituation 12: whatever") == "wear running shoes");
    CHECK(parse_inference_completion(xreact, " tired.") == "tired");
    CHECK_FALSE(parse_inference_completion(xattr, "\n\n").has_value());
    CHECK(parse_inference_completion(xattr, " brave. Situation 12: Alex") == "brave");
}
