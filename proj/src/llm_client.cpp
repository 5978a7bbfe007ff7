#include "kdist/llm_client.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "kdist/hash.hpp"

namespace kdist {

// ---- GenerationConfig ------------------------------------------------------------

void GenerationConfig::validate() const {
    if (!(top_p > 0.0 && top_p <= 1.0)) throw UsageError("top_p must be in (0, 1]");
    if (n < 1) throw UsageError("n must be >= 1");
    if (max_tokens < 1) throw UsageError("max_tokens must be >= 1");
    if (!(temperature >= 0.0)) throw UsageError("temperature must be >= 0");
}

Json GenerationConfig::to_json() const {
    Json j;
    j["model"] = model;
    j["top_p"] = top_p;
    j["presence_penalty"] = presence_penalty;
    j["frequency_penalty"] = frequency_penalty;
    j["max_tokens"] = max_tokens;
    j["n"] = n;
    j["stop"] = stop;
    j["temperature"] = temperature;
    j["logprobs"] = logprobs ? Json(*logprobs) : Json(nullptr);
    return j;
}

GenerationConfig GenerationConfig::from_json(const Json& j) {
    GenerationConfig c;
    try {
        c.model = j.value("model", c.model);
        c.top_p = j.value("top_p", c.top_p);
        c.presence_penalty = j.value("presence_penalty", c.presence_penalty);
        c.frequency_penalty = j.value("frequency_penalty", c.frequency_penalty);
        c.max_tokens = j.value("max_tokens", c.max_tokens);
        c.n = j.value("n", c.n);
        c.stop = j.value("stop", c.stop);
        c.temperature = j.value("temperature", c.temperature);
        if (const auto it = j.find("logprobs"); it != j.end() && !it->is_null()) c.logprobs = it->get<int>();
    } catch (const Json::exception& e) {
        throw UsageError(std::string("bad generation config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string GenerationConfig::hash() const { return sha256_hex(to_json().dump()).substr(0, 16); }

// ---- responses -----------------------------------------------------------------

std::string fixture_key(const std::string& prompt, const GenerationConfig& config) {
    std::string material = prompt;
    material.push_back('\0');
    material += config.hash();
    return sha256_hex(material);
}

std::vector<CompletionResult> parse_completion_response(const Json& body, int expected_n) {
    const auto choices = body.find("choices");
    if (!body.is_object() || choices == body.end() || !choices->is_array()) {
        throw RemoteError("malformed completion response: " + excerpt(body.dump()));
    }
    std::vector<std::pair<long long, CompletionResult>> indexed;
    long long position = 0;
    for (const auto& c : *choices) {
        const auto text = c.find("text");
        if (!c.is_object() || text == c.end() || !text->is_string()) {
            throw RemoteError("malformed completion choice: " + excerpt(c.dump()));
        }
        CompletionResult r;
        r.text = text->get<std::string>();
        const std::string finish = c.contains("finish_reason") && c["finish_reason"].is_string()
                                       ? c["finish_reason"].get<std::string>()
                                       : std::string();
        r.finish_reason = finish == "stop" ? FinishReason::stop
                          : finish == "length" ? FinishReason::length
                                               : FinishReason::other;
        if (const auto lp = c.find("logprobs"); lp != c.end() && lp->is_object()) {
            const auto& tokens = lp->value("tokens", Json::array());
            const auto& values = lp->value("token_logprobs", Json::array());
            if (tokens.size() != values.size()) throw RemoteError("logprobs tokens/token_logprobs length mismatch");
            std::vector<std::pair<std::string, double>> pairs;
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                pairs.emplace_back(tokens[i].get<std::string>(), values[i].is_number() ? values[i].get<double>() : 0.0);
            }
            r.token_logprobs = std::move(pairs);
        }
        const long long idx = c.contains("index") && c["index"].is_number_integer() ? c["index"].get<long long>()
                                                                                    : position;
        indexed.emplace_back(idx, std::move(r));
        ++position;
    }
    if (static_cast<int>(indexed.size()) != expected_n) {
        throw RemoteError("expected " + std::to_string(expected_n) + " completions, got " +
                          std::to_string(indexed.size()));
    }
    std::stable_sort(indexed.begin(), indexed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<CompletionResult> out;
    out.reserve(indexed.size());
    for (auto& [_, r] : indexed) out.push_back(std::move(r));
    return out;
}

// ---- CompletionSource --------------------------------------------------------------

std::vector<BatchItem> CompletionSource::complete_batch(std::span<const std::string> prompts,
                                                        const GenerationConfig& config) {
    std::vector<BatchItem> items(prompts.size());
    for (std::size_t i = 0; i < prompts.size(); ++i) {
        try {
            items[i].results = complete(prompts[i], config);
        } catch (const Error& e) {
            items[i].error = e.what();
            items[i].error_kind = e.kind();
        } catch (const std::exception& e) {
            items[i].error = e.what();
        }
    }
    return items;
}

// ---- CompletionClient ------------------------------------------------------------

CompletionClient::CompletionClient(ClientOptions options)
    : options_(std::move(options)),
      limiter_(options_.requests_per_minute),
      in_flight_(std::max(1, options_.max_in_flight)) {
    if (options_.mode == ClientMode::replay) {
        if (options_.fixture_dir.empty()) throw UsageError("replay mode needs a fixture directory");
    } else {
        if (options_.base_url.empty()) throw UsageError("live mode needs an endpoint base_url");
        if (options_.mode == ClientMode::record && options_.fixture_dir.empty()) {
            throw UsageError("record mode needs a fixture directory");
        }
    }
    http_.retry = options_.retry;
    http_.timeout = options_.timeout;
    if (!options_.api_key_env.empty()) {
        if (const char* key = std::getenv(options_.api_key_env.c_str())) http_.bearer_token = key;
    }
}

Json CompletionClient::request_body(const std::string& prompt, const GenerationConfig& config) const {
    Json j;
    j["model"] = config.model;
    j["prompt"] = prompt;
    j["max_tokens"] = config.max_tokens;
    j["top_p"] = config.top_p;
    j["temperature"] = config.temperature;
    j["n"] = config.n;
    if (!config.stop.empty()) j["stop"] = config.stop;
    j["presence_penalty"] = config.presence_penalty;
    j["frequency_penalty"] = config.frequency_penalty;
    if (config.logprobs) j["logprobs"] = *config.logprobs;
    return j;
}

std::vector<CompletionResult> CompletionClient::complete(const std::string& prompt, const GenerationConfig& config) {
    config.validate();
    const auto fixture_path = options_.fixture_dir / (fixture_key(prompt, config) + ".json");

    if (options_.mode == ClientMode::replay) {
        if (!std::filesystem::exists(fixture_path)) {
            throw RemoteError("no recorded fixture " + fixture_path.filename().string() + " for prompt: " +
                              excerpt(prompt, 80));
        }
        Json body;
        try {
            body = Json::parse(read_file(fixture_path));
        } catch (const Json::parse_error&) {
            throw RemoteError("malformed fixture " + fixture_path.string());
        }
        ++fixture_hits_;
        return parse_completion_response(body, config.n);
    }

    Json body;
    {
        in_flight_.acquire();
        struct Release {
            std::counting_semaphore<>& s;
            ~Release() { s.release(); }
        } release{in_flight_};
        body = post_json(options_.base_url, "/v1/completions", request_body(prompt, config), http_, &counters_,
                         &limiter_);
    }
    auto results = parse_completion_response(body, config.n);
    if (options_.mode == ClientMode::record) write_file_atomic(fixture_path, dump_pretty(body));
    return results;
}

std::vector<BatchItem> CompletionClient::complete_batch(std::span<const std::string> prompts,
                                                        const GenerationConfig& config) {
    std::vector<BatchItem> items(prompts.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < prompts.size(); i = next++) {
            try {
                items[i].results = complete(prompts[i], config);
            } catch (const Error& e) {
                items[i].error = e.what();
                items[i].error_kind = e.kind();
            } catch (const std::exception& e) {
                items[i].error = e.what();
            }
        }
    };
    const std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(1, options_.max_in_flight)), prompts.size());
    std::vector<std::jthread> threads;
    threads.reserve(n_workers);
    for (std::size_t t = 0; t < n_workers; ++t) threads.emplace_back(worker);
    threads.clear();
    return items;
}

// ---- NLL scoring -------------------------------------------------------------------

HttpNllScorer::HttpNllScorer(std::string url, HttpOptions options, std::size_t batch_size)
    : url_(std::move(url)), options_(std::move(options)), batch_size_(std::max<std::size_t>(1, batch_size)) {}

std::vector<NllResult> HttpNllScorer::score(std::span<const std::string> texts) {
    std::vector<NllResult> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += batch_size_) {
        const auto batch = texts.subspan(start, std::min(batch_size_, texts.size() - start));
        Json body;
        body["texts"] = Json::array();
        for (const auto& t : batch) body["texts"].push_back(t);
        const Json reply = post_json(url_, "/v1/nll", body, options_);
        const auto results = reply.find("results");
        if (!reply.is_object() || results == reply.end() || !results->is_array() || results->size() != batch.size()) {
            throw RemoteError("malformed /v1/nll response: " + excerpt(reply.dump()));
        }
        for (const auto& r : *results) {
            if (!r.is_object() || !r.contains("total_nll") || !r["total_nll"].is_number() ||
                !r.contains("n_tokens") || !r["n_tokens"].is_number_integer()) {
                throw RemoteError("malformed /v1/nll result: " + excerpt(r.dump()));
            }
            NllResult n{r["total_nll"].get<double>(), r["n_tokens"].get<int>()};
            if (n.total_nll < 0.0 || n.n_tokens < 0) throw RemoteError("negative NLL or token count from scorer");
            out.push_back(n);
        }
    }
    return out;
}

NllResult score_nll(const std::string& text, NllSource& scorer) {
    if (text.empty()) throw DataError("cannot score an empty text");
    const std::string one[] = {text};
    const auto results = scorer.score(one);
    if (results.size() != 1) throw RemoteError("scorer returned " + std::to_string(results.size()) + " results for 1 text");
    if (results[0].n_tokens == 0) throw DataError("untokenizable text");
    return results[0];
}

}  // namespace kdist
