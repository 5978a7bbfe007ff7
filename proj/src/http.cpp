#include "kdist/http.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "httplib.h"
#include "kdist/error.hpp"

namespace kdist {
namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path without trailing slash
};

SplitUrl split_url(std::string_view url) {
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) throw UsageError("URL lacks a scheme: " + std::string(url));
    const std::size_t path_start = url.find('/', scheme_end + 3);
    SplitUrl out;
    out.origin = std::string(url.substr(0, path_start));
    if (path_start != std::string_view::npos) {
        out.prefix = std::string(url.substr(path_start));
        while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    }
    return out;
}

bool retryable(int status) { return status == 408 || status == 429 || status >= 500; }

std::chrono::milliseconds backoff(const RetryPolicy& p, int attempt) {
    thread_local std::minstd_rand jitter_rng{std::random_device{}()};
    const double base = static_cast<double>(p.base_delay.count());
    const double exp = base * std::pow(2.0, attempt);
    std::uniform_real_distribution<double> jitter(0.0, std::max(base, 1.0));
    const double total = std::min(exp + jitter(jitter_rng), static_cast<double>(p.max_delay.count()));
    return std::chrono::milliseconds(static_cast<long long>(total));
}

}  // namespace

TokenBucket::TokenBucket(double requests_per_minute)
    : rate_per_sec_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, requests_per_minute / 60.0)),
      tokens_(capacity_),
      last_(Clock::now()) {}

void TokenBucket::acquire() {
    if (rate_per_sec_ <= 0.0) return;
    std::unique_lock lock(mu_);
    while (true) {
        const auto now = Clock::now();
        tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_per_sec_);
        last_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        const double wait = (1.0 - tokens_) / rate_per_sec_;
        lock.unlock();
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        lock.lock();
    }
}

std::string excerpt(std::string_view s, std::size_t max_len) {
    if (s.size() <= max_len) return std::string(s);
    return std::string(s.substr(0, max_len)) + "...";
}

Json post_json(std::string_view base_url, std::string_view path, const Json& body, const HttpOptions& options,
               HttpCounters* counters, TokenBucket* limiter) {
    const SplitUrl url = split_url(base_url);
    const std::string full_path = url.prefix + std::string(path);
    const std::string payload = body.dump();

    std::string last_failure;
    for (int attempt = 0; attempt <= options.retry.max_retries; ++attempt) {
        if (attempt > 0) {
            if (counters) ++counters->retries;
            std::this_thread::sleep_for(backoff(options.retry, attempt - 1));
        }
        if (limiter) limiter->acquire();
        if (counters) ++counters->requests;

        httplib::Client client(url.origin);
        client.set_connection_timeout(options.timeout);
        client.set_read_timeout(options.timeout);
        client.set_write_timeout(options.timeout);
        httplib::Headers headers;
        if (!options.bearer_token.empty()) headers.emplace("Authorization", "Bearer " + options.bearer_token);

        const auto res = client.Post(full_path, headers, payload, "application/json");
        if (!res) {
            last_failure = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (retryable(res->status)) {
            last_failure = "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw RemoteError("HTTP " + std::to_string(res->status) + " from " + std::string(base_url) + full_path +
                                  ": " + excerpt(res->body),
                              res->status);
        }
        try {
            return Json::parse(res->body);
        } catch (const Json::parse_error&) {
            throw RemoteError("malformed response JSON from " + std::string(base_url) + full_path + ": " +
                              excerpt(res->body));
        }
    }
    throw RemoteError("retries exhausted for " + std::string(base_url) + full_path + " (last: " + last_failure + ")");
}

}  // namespace kdist
