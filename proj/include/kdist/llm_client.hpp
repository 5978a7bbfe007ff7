#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kdist/error.hpp"
#include "kdist/http.hpp"

namespace kdist {

/// Sampling parameters for one completion request.
struct GenerationConfig {
    std::string model;
    double top_p = 0.9;
    double presence_penalty = 0.5;
    double frequency_penalty = 0.5;
    int max_tokens = 64;
    int n = 1;
    std::vector<std::string> stop;
    double temperature = 1.0;
    std::optional<int> logprobs;

    void validate() const;

    /// Canonical JSON of every field, in fixed order.
    Json to_json() const;
    static GenerationConfig from_json(const Json& j);

    /// Stable hash of to_json(), recorded in triple provenance.
    std::string hash() const;
};

enum class FinishReason { stop, length, other };

struct CompletionResult {
    std::string text;
    FinishReason finish_reason = FinishReason::other;
    std::optional<std::vector<std::pair<std::string, double>>> token_logprobs;
};

/// Outcome of one prompt inside a batch: either results or an error.
struct BatchItem {
    std::vector<CompletionResult> results;
    std::optional<std::string> error;
    ErrorKind error_kind = ErrorKind::remote;

    bool ok() const { return !error.has_value(); }
};

/// Anything that turns prompts into completions.
class CompletionSource {
public:
    virtual ~CompletionSource() = default;

    /// Exactly config.n results, or throws.
    virtual std::vector<CompletionResult> complete(const std::string& prompt, const GenerationConfig& config) = 0;

    /// Results in prompt order. Failures are captured per item instead of thrown.
    virtual std::vector<BatchItem> complete_batch(std::span<const std::string> prompts, const GenerationConfig& config);

    virtual std::uint64_t api_calls() const { return 0; }
};

enum class ClientMode { live, replay, record };

struct ClientOptions {
    std::string base_url;
    std::string api_key_env = "OPENAI_API_KEY";
    std::filesystem::path fixture_dir;
    ClientMode mode = ClientMode::live;
    int max_in_flight = 4;
    double requests_per_minute = 0.0;
    RetryPolicy retry;
    std::chrono::seconds timeout{60};
};

/// Fixture file name for a (prompt, config) pair.
std::string fixture_key(const std::string& prompt, const GenerationConfig& config);

/// Parses an OpenAI-style /v1/completions response body.
std::vector<CompletionResult> parse_completion_response(const Json& body, int expected_n);

/// Client for an OpenAI-compatible POST /v1/completions endpoint.
/// In replay mode responses come from <fixture_dir>/<fixture_key>.json and no
/// network traffic happens; record mode calls the endpoint and writes those files.
class CompletionClient : public CompletionSource {
public:
    explicit CompletionClient(ClientOptions options);

    std::vector<CompletionResult> complete(const std::string& prompt, const GenerationConfig& config) override;
    std::vector<BatchItem> complete_batch(std::span<const std::string> prompts, const GenerationConfig& config) override;

    std::uint64_t api_calls() const override { return counters_.requests.load(); }
    std::uint64_t retries() const { return counters_.retries.load(); }
    std::uint64_t fixture_hits() const { return fixture_hits_.load(); }

private:
    Json request_body(const std::string& prompt, const GenerationConfig& config) const;

    ClientOptions options_;
    HttpOptions http_;
    HttpCounters counters_;
    TokenBucket limiter_;
    std::counting_semaphore<> in_flight_;
    std::atomic<std::uint64_t> fixture_hits_{0};
};

struct NllResult {
    double total_nll = 0.0;  // nats
    int n_tokens = 0;

    double token_mean() const { return total_nll / n_tokens; }
};

/// Anything that returns per-text negative log-likelihoods.
class NllSource {
public:
    virtual ~NllSource() = default;
    virtual std::vector<NllResult> score(std::span<const std::string> texts) = 0;
    virtual std::string id() const = 0;
};

/// Client for POST {url}/v1/nll with {"texts": [...]}, answered by
/// {"results": [{"total_nll": nats, "n_tokens": k}, ...]}.
class HttpNllScorer : public NllSource {
public:
    HttpNllScorer(std::string url, HttpOptions options = {}, std::size_t batch_size = 64);

    std::vector<NllResult> score(std::span<const std::string> texts) override;
    std::string id() const override { return url_; }

private:
    std::string url_;
    HttpOptions options_;
    std::size_t batch_size_;
};

/// Scores a single text; rejects empty input and zero-token replies.
NllResult score_nll(const std::string& text, NllSource& scorer);

}  // namespace kdist
