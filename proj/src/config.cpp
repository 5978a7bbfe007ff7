#include "kdist/config.hpp"

#include <chrono>
#include <ctime>

#include "kdist/error.hpp"

namespace kdist {
namespace {

ClientOptions parse_endpoint(const Json& j, const std::filesystem::path& base_dir) {
    ClientOptions o;
    o.base_url = j.value("base_url", o.base_url);
    o.api_key_env = j.value("api_key_env", o.api_key_env);
    if (j.contains("fixture_dir")) o.fixture_dir = base_dir / j["fixture_dir"].get<std::string>();
    const std::string mode = j.value("mode", std::string("live"));
    if (mode == "live") o.mode = ClientMode::live;
    else if (mode == "replay") o.mode = ClientMode::replay;
    else if (mode == "record") o.mode = ClientMode::record;
    else throw UsageError("endpoint.mode must be live, replay or record");
    o.max_in_flight = j.value("max_in_flight", o.max_in_flight);
    o.requests_per_minute = j.value("requests_per_minute", o.requests_per_minute);
    o.retry.max_retries = j.value("max_retries", o.retry.max_retries);
    o.retry.base_delay = std::chrono::milliseconds(j.value("backoff_base_ms", o.retry.base_delay.count()));
    o.retry.max_delay = std::chrono::milliseconds(j.value("backoff_max_ms", o.retry.max_delay.count()));
    o.timeout = std::chrono::seconds(j.value("timeout_seconds", o.timeout.count()));
    if (o.max_in_flight < 1) throw UsageError("endpoint.max_in_flight must be >= 1");
    if (o.mode == ClientMode::replay && o.fixture_dir.empty()) throw UsageError("replay mode needs endpoint.fixture_dir");
    if (o.mode != ClientMode::replay && o.base_url.empty()) throw UsageError("live mode needs endpoint.base_url");
    if (o.mode == ClientMode::record && o.fixture_dir.empty()) throw UsageError("record mode needs endpoint.fixture_dir");
    return o;
}

}  // namespace

RunConfig RunConfig::from_json(const Json& j, const std::filesystem::path& base_dir) {
    RunConfig c;
    c.base_dir = base_dir;
    try {
        if (j.contains("endpoint")) c.endpoint = parse_endpoint(j["endpoint"], base_dir);
        if (j.contains("plan")) c.plan = GenerationPlan::from_json(j["plan"]);
        if (j.contains("scorers")) {
            for (const auto& [name, binding] : j["scorers"].items()) c.scorers[name] = ScorerBinding::from_json(binding);
        }
        if (j.contains("presets")) {
            for (const auto& [name, fraction] : j["presets"].items()) {
                const double f = fraction.get<double>();
                if (!(f > 0.0 && f <= 1.0)) throw UsageError("preset " + name + " must be a kept fraction in (0, 1]");
                c.presets[name] = f;
            }
        }
        if (j.contains("paths")) {
            for (const auto& [name, p] : j["paths"].items()) c.paths[name] = base_dir / p.get<std::string>();
        }
        if (j.contains("scorer_http")) {
            const Json& h = j["scorer_http"];
            c.scorer_http.retry.max_retries = h.value("max_retries", c.scorer_http.retry.max_retries);
            c.scorer_http.retry.base_delay =
                std::chrono::milliseconds(h.value("backoff_base_ms", c.scorer_http.retry.base_delay.count()));
            c.scorer_http.timeout = std::chrono::seconds(h.value("timeout_seconds", c.scorer_http.timeout.count()));
        }
        if (j.contains("rng_seed")) {
            c.rng_seed = j["rng_seed"].get<std::uint64_t>();
            c.plan.rng_seed = c.rng_seed;
        } else {
            c.rng_seed = c.plan.rng_seed;
        }
        c.created_at = j.value("created_at", std::string());
    } catch (const Json::exception& e) {
        throw UsageError(std::string("bad run config: ") + e.what());
    }
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw UsageError(path.string() + ": " + e.what());
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
    return from_json(j, path.parent_path());
}

std::filesystem::path RunConfig::path(const std::string& key) const {
    const auto it = paths.find(key);
    if (it == paths.end()) throw UsageError("config does not define paths." + key);
    return it->second;
}

std::optional<std::filesystem::path> RunConfig::path_if_set(const std::string& key) const {
    const auto it = paths.find(key);
    if (it == paths.end()) return std::nullopt;
    return it->second;
}

std::string RunConfig::timestamp() const {
    if (!created_at.empty()) return created_at;
    if (endpoint.mode == ClientMode::replay) return "1970-01-01T00:00:00Z";
    return utc_now_iso8601();
}

std::string utc_now_iso8601() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace kdist
