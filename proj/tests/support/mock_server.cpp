#include "support/mock_server.hpp"

#include <array>
#include <chrono>
#include <stdexcept>

#include "kdist/hash.hpp"
#include "kdist/text.hpp"

namespace kdist::testing {

MockServer::MockServer(const std::function<void(httplib::Server&)>& setup) {
    setup(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("mock server could not bind");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
}

MockServer::~MockServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
}

namespace {

constexpr std::array<const char*, 6> kVerbs = {"paints", "cleans", "sells", "fixes", "borrows", "hides"};
constexpr std::array<const char*, 5> kObjects = {"the fence", "PersonY's car", "an old lamp", "the garden",
                                                 "X's bike"};
constexpr std::array<const char*, 12> kTails = {
    "kind",          "happy",       "tired",          "go home",        "buy a new one", "get some rest",
    "to help Chris", "be careful",  "nervous",        "ask for advice", "ok",            "",
};

std::string event_text(std::uint64_t h) {
    return std::string("PersonX ") + kVerbs[h % kVerbs.size()] + " " + kObjects[(h / 7) % kObjects.size()];
}

std::string event_choice(const std::string& prompt, int i) {
    const std::uint64_t h = sha256_u64(prompt + "#" + std::to_string(i));
    if (h % 13 == 0) return "";
    std::string text = " " + event_text(h);
    const int extra = static_cast<int>((h >> 16) % 3);
    for (int k = 0; k < extra; ++k) {
        text += "\n\n" + std::to_string(12 + k) + ". Event: " + event_text(sha256_u64(std::to_string(h) + "/" + std::to_string(k)));
    }
    return text + "\n\n";
}

std::string inference_choice(const std::string& prompt, int i) {
    const std::uint64_t h = sha256_u64(prompt + "#" + std::to_string(i));
    return std::string(" ") + kTails[h % kTails.size()] + ".\n\nSituation 12:";
}

}  // namespace

Json mock_completion_reply(const Json& request) {
    const std::string prompt = request.at("prompt").get<std::string>();
    const int n = request.value("n", 1);
    const bool events = prompt.ends_with("Event:");
    Json choices = Json::array();
    for (int i = 0; i < n; ++i) {
        Json c;
        c["text"] = events ? event_choice(prompt, i) : inference_choice(prompt, i);
        c["index"] = i;
        c["finish_reason"] = "stop";
        c["logprobs"] = nullptr;
        choices.push_back(c);
    }
    Json reply;
    reply["id"] = "cmpl-" + sha256_hex(prompt).substr(0, 12);
    reply["object"] = "text_completion";
    reply["model"] = request.value("model", std::string());
    reply["choices"] = choices;
    return reply;
}

Json mock_nll_reply(const Json& request, double scale) {
    Json results = Json::array();
    for (const auto& t : request.at("texts")) {
        const std::string text = t.get<std::string>();
        const auto tokens = tokenize(text);
        const double offset = static_cast<double>(sha256_u64(text) % 1000) / 1000.0;
        Json r;
        r["total_nll"] = scale * (0.75 * static_cast<double>(tokens.size()) + offset);
        r["n_tokens"] = tokens.size();
        results.push_back(r);
    }
    return Json{{"results", results}};
}

void install_mock_llm(httplib::Server& server, std::atomic<int>* completion_calls) {
    server.Post("/v1/completions", [completion_calls](const httplib::Request& req, httplib::Response& res) {
        if (completion_calls) ++*completion_calls;
        res.set_content(mock_completion_reply(Json::parse(req.body)).dump(), "application/json");
    });
    server.Post("/self/v1/nll", [](const httplib::Request& req, httplib::Response& res) {
        res.set_content(mock_nll_reply(Json::parse(req.body), 1.0).dump(), "application/json");
    });
    server.Post("/cross/v1/nll", [](const httplib::Request& req, httplib::Response& res) {
        res.set_content(mock_nll_reply(Json::parse(req.body), 3.0).dump(), "application/json");
    });
}

}  // namespace kdist::testing
