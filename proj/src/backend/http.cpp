#include <httplib.h>

#include "qforge/backend/http.hpp"

#include "qforge/error.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

namespace qforge::backend {

HttpResponse HttplibTransport::post(const HttpRequest& request) {
    // Split scheme://host[:port] from the path.
    const auto scheme_end = request.url.find("://");
    if (scheme_end == std::string::npos) throw TransportFailure("url without scheme: " + request.url);
    const auto path_start = request.url.find('/', scheme_end + 3);
    const std::string origin = request.url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : request.headers) {
        if (k == "Content-Type") content_type = v;
        else headers.emplace(k, v);
    }
    auto result = client.Post(path, headers, request.body, content_type);
    if (!result) throw TransportFailure("request to " + origin + " failed: " + httplib::to_string(result.error()));
    return {result->status, result->body};
}

HttpBackendConfig HttpBackendConfig::from_env() {
    auto get = [](const char* name) {
        const char* v = std::getenv(name);
        return v ? std::string(v) : std::string();
    };
    HttpBackendConfig c;
    c.api_base = get(env_api_base);
    c.api_key = get(env_api_key);
    c.model = get(env_model);
    if (c.api_base.empty() || c.model.empty()) {
        throw Error(ErrorCode::invalid_config,
                    std::string(env_api_base) + " and " + env_model + " must be set for the HTTP backend");
    }
    return c;
}

HttpBackend::HttpBackend(HttpBackendConfig config, std::shared_ptr<HttpTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    if (!transport_) transport_ = std::make_shared<HttplibTransport>();
    while (!config_.api_base.empty() && config_.api_base.back() == '/') config_.api_base.pop_back();
}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
    request.params.validate();
    if (request.prompt.empty()) throw Error(ErrorCode::invalid_params, "prompt must be nonempty");

    const nlohmann::json body = {{"model", config_.model},
                                 {"prompt", request.prompt},
                                 {"temperature", request.params.temperature},
                                 {"top_p", request.params.top_p},
                                 {"max_tokens", request.params.max_tokens},
                                 {"n", request.params.n}};
    HttpRequest http{config_.api_base + "/completions", {{"Content-Type", "application/json"}}, body.dump()};
    if (!config_.api_key.empty()) http.headers.emplace_back("Authorization", "Bearer " + config_.api_key);

    const auto start = std::chrono::steady_clock::now();
    HttpResponse response;
    std::string last_failure;
    auto backoff = config_.retry.initial_backoff;
    const int attempts = std::max(1, config_.retry.attempts);
    bool received = false;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        try {
            response = transport_->post(http);
            if (response.status == 401 || response.status == 403) {
                throw Error(ErrorCode::auth_error, "endpoint rejected credentials (HTTP " +
                                                       std::to_string(response.status) + ")");
            }
            if (response.status == 429 || response.status >= 500) {
                last_failure = "HTTP " + std::to_string(response.status);
            } else {
                received = true;
                break;
            }
        } catch (const TransportFailure& e) {
            last_failure = e.what();
        }
        if (attempt < attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    if (!received) {
        throw Error(ErrorCode::transport_error,
                    "giving up after " + std::to_string(attempts) + " attempts: " + last_failure);
    }
    if (response.status < 200 || response.status >= 300) {
        throw Error(ErrorCode::transport_error, "HTTP " + std::to_string(response.status) + ": " + response.body);
    }

    CompletionResponse out;
    out.backend_id = id();
    try {
        const auto j = nlohmann::json::parse(response.body);
        std::vector<std::pair<std::int64_t, std::string>> choices;
        std::int64_t position = 0;
        for (const auto& choice : j.at("choices")) {
            choices.emplace_back(choice.value("index", position), choice.at("text").get<std::string>());
            ++position;
        }
        std::stable_sort(choices.begin(), choices.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& [index, text] : choices) out.completions.push_back(std::move(text));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::malformed_response, e.what());
    }
    out.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    check_completion_count(request, out);
    return out;
}

} // namespace qforge::backend
