#include <cstdlib>
#include <mutex>
#include <thread>

#include "doctest.h"
#include "kdist/error.hpp"
#include "kdist/llm_client.hpp"
#include "support/fixtures.hpp"
#include "support/mock_server.hpp"

using namespace kdist;
using namespace kdist::testing;

namespace {

Json completion_body(std::initializer_list<std::string> texts) {
    Json choices = Json::array();
    int i = 0;
    for (const auto& t : texts) choices.push_back({{"text", t}, {"index", i++}, {"finish_reason", "stop"}});
    return {{"choices", choices}};
}

ClientOptions fast_options(const std::string& url) {
    ClientOptions o;
    o.base_url = url;
    o.api_key_env = "";
    o.retry.max_retries = 3;
    o.retry.base_delay = std::chrono::milliseconds(1);
    o.retry.max_delay = std::chrono::milliseconds(5);
    o.timeout = std::chrono::seconds(5);
    return o;
}

GenerationConfig config(int n = 1) {
    GenerationConfig c;
    c.model = "mock";
    c.n = n;
    return c;
}

}  // namespace

TEST_CASE("generation config hash is stable and field-sensitive") {
    const GenerationConfig a = config();
    GenerationConfig b = a;
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 16);
    b.top_p = 0.8;
    CHECK(a.hash() != b.hash());
    CHECK(GenerationConfig::from_json(a.to_json()).hash() == a.hash());
    GenerationConfig bad = a;
    bad.top_p = 0.0;
    CHECK_THROWS_AS(bad.validate(), UsageError);
    bad = a;
    bad.n = 0;
    CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("fixture replay returns the recorded response") {
    const auto dir = scratch_dir("replay");
    const std::string prompt = "1. Event: PersonX runs\n\n2. Event:";
    write_file_atomic(dir / (fixture_key(prompt, config()) + ".json"), completion_body({" PersonX eats"}).dump());
    ClientOptions o;
    o.mode = ClientMode::replay;
    o.fixture_dir = dir;
    CompletionClient client(o);
    const auto r = client.complete(prompt, config());
    REQUIRE(r.size() == 1);
    CHECK(r[0].text == " PersonX eats");
    CHECK(r[0].finish_reason == FinishReason::stop);
    CHECK(client.fixture_hits() == 1);
    CHECK(client.api_calls() == 0);
    CHECK_THROWS_AS(client.complete("unseen prompt", config()), RemoteError);

    // A fixture recorded for one config does not answer another.
    GenerationConfig other = config();
    other.temperature = 0.7;
    CHECK_THROWS_AS(client.complete(prompt, other), RemoteError);
}

TEST_CASE("n completions are returned in index order") {
    const auto dir = scratch_dir("replay-n");
    Json body = completion_body({"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"});
    std::reverse(body["choices"].begin(), body["choices"].end());
    write_file_atomic(dir / (fixture_key("p", config(10)) + ".json"), body.dump());
    ClientOptions o;
    o.mode = ClientMode::replay;
    o.fixture_dir = dir;
    CompletionClient client(o);
    const auto r = client.complete("p", config(10));
    REQUIRE(r.size() == 10);
    CHECK(r.front().text == "a");
    CHECK(r.back().text == "j");
    CHECK_THROWS_AS(parse_completion_response(body, 9), RemoteError);
}

TEST_CASE("429 twice then success") {
    std::atomic<int> hits{0};
    Json last_request;
    std::mutex mu;
    MockServer server([&](httplib::Server& s) {
        s.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
            if (hits++ < 2) {
                res.status = 429;
                res.set_content("slow down", "text/plain");
                return;
            }
            std::lock_guard lock(mu);
            last_request = Json::parse(req.body);
            res.set_content(completion_body({" ok then"}).dump(), "application/json");
        });
    });
    CompletionClient client(fast_options(server.url()));
    GenerationConfig c = config();
    c.stop = {"\n"};
    const auto r = client.complete("prompt text", c);
    CHECK(r.at(0).text == " ok then");
    CHECK(client.retries() == 2);
    CHECK(client.api_calls() == 3);
    CHECK(last_request["prompt"] == "prompt text");
    CHECK(last_request["top_p"] == 0.9);
    CHECK(last_request["presence_penalty"] == 0.5);
    CHECK(last_request["frequency_penalty"] == 0.5);
    CHECK(last_request["stop"] == Json::array({"\n"}));
}

TEST_CASE("client errors are not retried and retries are bounded") {
    std::atomic<int> hits{0};
    MockServer server([&](httplib::Server& s) {
        s.Post("/v1/completions", [&](const httplib::Request&, httplib::Response& res) {
            ++hits;
            res.status = 400;
            res.set_content("bad request body", "text/plain");
        });
        s.Post("/down/v1/completions", [&](const httplib::Request&, httplib::Response& res) {
            res.status = 503;
            res.set_content("unavailable", "text/plain");
        });
        s.Post("/garbage/v1/completions", [&](const httplib::Request&, httplib::Response& res) {
            res.set_content("{not json", "application/json");
        });
    });
    CompletionClient client(fast_options(server.url()));
    try {
        client.complete("p", config());
        FAIL("expected RemoteError");
    } catch (const RemoteError& e) {
        CHECK(e.status() == 400);
        CHECK(std::string(e.what()).find("bad request body") != std::string::npos);
    }
    CHECK(hits == 1);

    CompletionClient down(fast_options(server.url() + "/down"));
    CHECK_THROWS_AS(down.complete("p", config()), RemoteError);
    CHECK(down.api_calls() == 4);

    CompletionClient garbage(fast_options(server.url() + "/garbage"));
    CHECK_THROWS_AS(garbage.complete("p", config()), RemoteError);
}

TEST_CASE("bearer token comes from the configured environment variable") {
    std::string auth;
    std::mutex mu;
    MockServer server([&](httplib::Server& s) {
        s.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(mu);
            auth = req.get_header_value("Authorization");
            res.set_content(completion_body({"x"}).dump(), "application/json");
        });
    });
    ::setenv("KDIST_TEST_KEY", "sk-test", 1);
    ClientOptions o = fast_options(server.url());
    o.api_key_env = "KDIST_TEST_KEY";
    CompletionClient client(o);
    client.complete("p", config());
    CHECK(auth == "Bearer sk-test");
}

TEST_CASE("in-flight requests stay within the bound") {
    std::atomic<int> current{0};
    std::atomic<int> peak{0};
    MockServer server([&](httplib::Server& s) {
        s.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
            const int now = ++current;
            int seen = peak.load();
            while (now > seen && !peak.compare_exchange_weak(seen, now)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(30));
            --current;
            const auto prompt = Json::parse(req.body)["prompt"].get<std::string>();
            res.set_content(completion_body({"re: " + prompt}).dump(), "application/json");
        });
    });
    ClientOptions o = fast_options(server.url());
    o.max_in_flight = 3;
    CompletionClient client(o);
    std::vector<std::string> prompts;
    for (int i = 0; i < 12; ++i) prompts.push_back("prompt " + std::to_string(i));
    const auto items = client.complete_batch(prompts, config());
    REQUIRE(items.size() == 12);
    for (std::size_t i = 0; i < items.size(); ++i) {
        REQUIRE(items[i].ok());
        CHECK(items[i].results[0].text == "re: " + prompts[i]);
    }
    CHECK(peak.load() <= 3);
    CHECK(peak.load() >= 2);
}

TEST_CASE("batch failures are captured per item") {
    MockServer server([&](httplib::Server& s) {
        s.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
            const auto prompt = Json::parse(req.body)["prompt"].get<std::string>();
            if (prompt == "bad") {
                res.status = 422;
                return;
            }
            res.set_content(completion_body({"fine"}).dump(), "application/json");
        });
    });
    CompletionClient client(fast_options(server.url()));
    const std::vector<std::string> prompts = {"good", "bad", "good again"};
    const auto items = client.complete_batch(prompts, config());
    CHECK(items[0].ok());
    CHECK_FALSE(items[1].ok());
    CHECK(items[1].error_kind == ErrorKind::remote);
    CHECK(items[2].ok());
}

TEST_CASE("record mode writes fixtures that replay reproduces") {
    const auto dir = scratch_dir("record");
    MockServer server([&](httplib::Server& s) { install_mock_llm(s); });
    ClientOptions o = fast_options(server.url());
    o.mode = ClientMode::record;
    o.fixture_dir = dir;
    CompletionClient recorder(o);
    const std::string prompt = "Situation 11: Alex runs.\n\nAlex is seen as";
    const auto live = recorder.complete(prompt, config(4));
    CHECK(std::filesystem::exists(dir / (fixture_key(prompt, config(4)) + ".json")));

    ClientOptions r;
    r.mode = ClientMode::replay;
    r.fixture_dir = dir;
    CompletionClient replayer(r);
    const auto again = replayer.complete(prompt, config(4));
    REQUIRE(again.size() == live.size());
    for (std::size_t i = 0; i < live.size(); ++i) CHECK(again[i].text == live[i].text);
}

TEST_CASE("NLL scoring") {
    MockServer server([&](httplib::Server& s) {
        install_mock_llm(s);
        s.Post("/fixed/v1/nll", [](const httplib::Request& req, httplib::Response& res) {
            const Json body = Json::parse(req.body);
            Json results = Json::array();
            for (const auto& t : body["texts"]) {
                results.push_back({{"total_nll", t == "zero" ? 0.0 : 12.0}, {"n_tokens", t == "zero" ? 0 : 6}});
            }
            res.set_content(Json{{"results", results}}.dump(), "application/json");
        });
    });
    HttpNllScorer fixed(server.url() + "/fixed");
    const auto r = score_nll("PersonX runs PersonX is seen as fast", fixed);
    CHECK(r.total_nll == 12.0);
    CHECK(r.n_tokens == 6);
    CHECK(r.token_mean() == 2.0);
    CHECK_THROWS_AS(score_nll("", fixed), DataError);
    CHECK_THROWS_AS(score_nll("zero", fixed), DataError);

    HttpNllScorer self(server.url() + "/self", {}, 2);
    const std::vector<std::string> texts = {"a b c", "PersonX eats", "PersonX runs away fast", "x"};
    const auto first = self.score(texts);
    const auto second = self.score(texts);
    REQUIRE(first.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(first[i].total_nll == second[i].total_nll);
        CHECK(first[i].n_tokens == second[i].n_tokens);
    }
    CHECK(first[2].n_tokens == 4);
}
