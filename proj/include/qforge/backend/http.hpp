#pragma once

#include "qforge/backend/backend.hpp"

#include <chrono>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qforge::backend {

inline constexpr const char* env_api_base = "QFORGE_API_BASE";
inline constexpr const char* env_api_key = "QFORGE_API_KEY";
inline constexpr const char* env_model = "QFORGE_MODEL";

struct HttpRequest {
    std::string url;
    std::vector<std::pair<std::string, std::string>> headers;
    std::string body;
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Thrown by transports when no HTTP response was obtained at all.
class TransportFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse post(const HttpRequest& request) = 0;
};

/// cpp-httplib backed transport.
class HttplibTransport final : public HttpTransport {
public:
    explicit HttplibTransport(std::chrono::seconds timeout = std::chrono::seconds(120)) : timeout_(timeout) {}
    HttpResponse post(const HttpRequest& request) override;

private:
    std::chrono::seconds timeout_;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
};

struct HttpBackendConfig {
    std::string api_base;  ///< e.g. http://localhost:8000/v1
    std::string api_key;
    std::string model;
    RetryPolicy retry;

    /// Reads QFORGE_API_BASE, QFORGE_API_KEY and QFORGE_MODEL. Base and
    /// model are required; the key may be empty for local servers.
    static HttpBackendConfig from_env();
};

/// Client for an OpenAI-compatible completions endpoint:
/// POST {api_base}/completions with {model, prompt, temperature, top_p,
/// max_tokens, n}, reading choices[].text ordered by choices[].index.
class HttpBackend final : public Backend {
public:
    HttpBackend(HttpBackendConfig config, std::shared_ptr<HttpTransport> transport = nullptr);

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override { return "http:" + config_.model; }

private:
    HttpBackendConfig config_;
    std::shared_ptr<HttpTransport> transport_;
};

} // namespace qforge::backend
