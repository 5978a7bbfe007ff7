#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <mutex>
#include <string>
#include <string_view>

#include "kdist/jsonl.hpp"

namespace kdist {

struct RetryPolicy {
    int max_retries = 5;
    std::chrono::milliseconds base_delay{500};
    std::chrono::milliseconds max_delay{30000};
};

/// Client-side token bucket. A rate of zero disables limiting.
class TokenBucket {
public:
    explicit TokenBucket(double requests_per_minute = 0.0);

    void acquire();

private:
    using Clock = std::chrono::steady_clock;

    double rate_per_sec_;
    double capacity_;
    double tokens_;
    Clock::time_point last_;
    std::mutex mu_;
};

struct HttpOptions {
    RetryPolicy retry;
    std::chrono::seconds timeout{60};
    std::string bearer_token;
};

struct HttpCounters {
    std::atomic<std::uint64_t> requests{0};
    std::atomic<std::uint64_t> retries{0};
};

/// POSTs JSON to base_url + path and returns the parsed JSON reply.
/// Transport failures, 408, 429 and 5xx are retried with exponential backoff
/// plus jitter. Other non-2xx statuses raise RemoteError immediately.
Json post_json(std::string_view base_url, std::string_view path, const Json& body, const HttpOptions& options,
               HttpCounters* counters = nullptr, TokenBucket* limiter = nullptr);

/// Short prefix of a payload for error messages.
std::string excerpt(std::string_view s, std::size_t max_len = 200);

}  // namespace kdist
