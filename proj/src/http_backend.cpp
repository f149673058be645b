#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "tbforge/agents.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <thread>

using nlohmann::json;

namespace tbforge::agents {

namespace {

// Splits "scheme://host[:port][/prefix]" into client base and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint URL must include a scheme: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_start), prefix};
}

bool retryable_status(int status) {
    return status == 429 || status == 408 || status >= 500;
}

} // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw ConfigError("live backend requires an endpoint URL");
    if (config_.model.empty()) throw ConfigError("live backend requires a model name");
    std::tie(scheme_host_, path_prefix_) = split_base_url(config_.base_url);
    if (const char* key = std::getenv(config_.api_key_env.c_str())) {
        api_key_ = key;
    }
}

double HttpBackend::temperature_for(AgentRole role) const {
    if (auto it = config_.temperature_override.find(role); it != config_.temperature_override.end()) {
        return it->second;
    }
    return role == AgentRole::QualityRefiner ? config_.refiner_temperature
                                             : config_.default_temperature;
}

AgentResponse HttpBackend::do_complete(AgentRole role, const std::string& prompt) {
    json body;
    body["model"] = config_.model;
    body["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = temperature_for(role);
    const std::string payload = body.dump();
    const std::string path = path_prefix_ + "/chat/completions";

    httplib::Client client(scheme_host_);
    client.set_connection_timeout(config_.request_timeout);
    client.set_read_timeout(config_.request_timeout);
    client.set_write_timeout(config_.request_timeout);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    std::string last_failure = "no attempt made";
    for (int attempt = 1; attempt <= config_.max_transport_attempts; ++attempt) {
        if (attempt > 1) std::this_thread::sleep_for(config_.retry_delay);
        auto result = client.Post(path, headers, payload, "application/json");
        if (!result) {
            last_failure = "transport error: " + httplib::to_string(result.error());
            note_transport_retry();
            continue;
        }
        if (result->status != 200) {
            std::string excerpt = result->body.substr(0, 200);
            if (!retryable_status(result->status)) {
                throw BackendError("endpoint returned status " + std::to_string(result->status) +
                                   ": " + excerpt);
            }
            last_failure = "status " + std::to_string(result->status) + ": " + excerpt;
            note_transport_retry();
            continue;
        }
        json response;
        try {
            response = json::parse(result->body);
        } catch (const json::parse_error& e) {
            throw BackendError(std::string("malformed completion payload: ") + e.what());
        }
        if (!response.contains("choices") || response["choices"].empty() ||
            !response["choices"][0].contains("message")) {
            throw BackendError("completion payload missing choices[0].message");
        }
        AgentResponse out;
        out.text = response["choices"][0]["message"].value("content", "");
        if (response.contains("usage") && response["usage"].is_object()) {
            const auto& usage = response["usage"];
            out.usage.input_tokens = usage.value("prompt_tokens", 0ULL);
            out.usage.output_tokens = usage.value("completion_tokens", 0ULL);
        }
        return out;
    }
    throw BackendError("transport failure after " + std::to_string(config_.max_transport_attempts) +
                       " attempts (" + last_failure + ")");
}

} // namespace tbforge::agents
