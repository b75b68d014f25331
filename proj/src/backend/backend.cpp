#include "qforge/backend/backend.hpp"

#include "qforge/error.hpp"

namespace qforge::backend {

void SamplingParams::validate() const {
    if (!(temperature >= 0.0)) throw Error(ErrorCode::invalid_params, "temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCode::invalid_params, "top_p must lie in (0, 1]");
    if (max_tokens < 1) throw Error(ErrorCode::invalid_params, "max_tokens must be >= 1");
    if (n < 1) throw Error(ErrorCode::invalid_params, "n must be >= 1");
}

void to_json(nlohmann::json& j, const SamplingParams& p) {
    j = {{"temperature", p.temperature}, {"top_p", p.top_p}, {"max_tokens", p.max_tokens}, {"n", p.n}};
}

void from_json(const nlohmann::json& j, SamplingParams& p) {
    p.temperature = j.value("temperature", p.temperature);
    p.top_p = j.value("top_p", p.top_p);
    p.max_tokens = j.value("max_tokens", p.max_tokens);
    p.n = j.value("n", p.n);
}

void to_json(nlohmann::json& j, const CompletionRequest& r) {
    j = {{"prompt", r.prompt}, {"params", r.params}, {"tag", r.tag ? nlohmann::json(*r.tag) : nlohmann::json()}};
}

void from_json(const nlohmann::json& j, CompletionRequest& r) {
    r.prompt = j.at("prompt").get<std::string>();
    r.params = j.at("params").get<SamplingParams>();
    if (j.contains("tag") && !j.at("tag").is_null()) r.tag = j.at("tag").get<std::string>();
    else r.tag.reset();
}

void to_json(nlohmann::json& j, const CompletionResponse& r) {
    j = {{"completions", r.completions}, {"backend_id", r.backend_id}, {"latency_ms", r.latency_ms}};
}

void from_json(const nlohmann::json& j, CompletionResponse& r) {
    r.completions = j.at("completions").get<std::vector<std::string>>();
    r.backend_id = j.at("backend_id").get<std::string>();
    r.latency_ms = j.at("latency_ms").get<std::int64_t>();
}

void check_completion_count(const CompletionRequest& request, const CompletionResponse& response) {
    if (response.completions.size() != static_cast<std::size_t>(request.params.n)) {
        throw Error(ErrorCode::malformed_response, "expected " + std::to_string(request.params.n) +
                                                       " completions, got " +
                                                       std::to_string(response.completions.size()));
    }
}

} // namespace qforge::backend
