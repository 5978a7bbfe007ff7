#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "kdist/critic.hpp"
#include "kdist/llm_client.hpp"
#include "kdist/pipeline.hpp"

namespace kdist {

/// Everything one CLI invocation needs. Relative paths resolve against the
/// directory holding the config file.
struct RunConfig {
    ClientOptions endpoint;
    GenerationPlan plan;
    std::map<std::string, ScorerBinding> scorers;
    // Named cutoffs expressed as target kept fractions.
    std::map<std::string, double> presets{{"critic_low", 0.68}, {"critic_high", 0.38}};
    std::map<std::string, std::filesystem::path> paths;
    HttpOptions scorer_http;
    std::uint64_t rng_seed = 0;
    std::string created_at;
    std::filesystem::path base_dir;

    static RunConfig from_json(const Json& j, const std::filesystem::path& base_dir);
    static RunConfig load(const std::filesystem::path& path);

    /// Named path, or UsageError if the config does not define it.
    std::filesystem::path path(const std::string& key) const;
    std::optional<std::filesystem::path> path_if_set(const std::string& key) const;

    /// created_at if configured; the epoch in replay mode; otherwise now (UTC).
    std::string timestamp() const;
};

std::string utc_now_iso8601();

}  // namespace kdist
