#pragma once

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qforge::backend {

struct SamplingParams {
    double temperature = 0.0;
    double top_p = 1.0;
    int max_tokens = 1024;
    int n = 1;

    /// Throws Error(invalid_params) when a bound is violated.
    void validate() const;

    /// Sampling used for pass@k runs.
    static SamplingParams for_pass_at_k() { return {0.8, 0.95, 1024, 20}; }
};

struct CompletionRequest {
    std::string prompt;
    SamplingParams params;
    std::optional<std::string> tag;  ///< task id; keys scripted entries and cassettes
};

struct CompletionResponse {
    std::vector<std::string> completions;
    std::string backend_id;
    std::int64_t latency_ms = 0;
};

void to_json(nlohmann::json& j, const SamplingParams& p);
void from_json(const nlohmann::json& j, SamplingParams& p);
void to_json(nlohmann::json& j, const CompletionRequest& r);
void from_json(const nlohmann::json& j, CompletionRequest& r);
void to_json(nlohmann::json& j, const CompletionResponse& r);
void from_json(const nlohmann::json& j, CompletionResponse& r);

/// Completion interface every agent talks through. Implementations must be
/// safe to call concurrently and must return exactly params.n completions
/// or throw.
class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
    virtual std::string id() const = 0;
};

/// Throws Error(malformed_response) unless the response honours the n-contract.
void check_completion_count(const CompletionRequest& request, const CompletionResponse& response);

} // namespace qforge::backend
