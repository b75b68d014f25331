#include "qforge/backend/scripted.hpp"

namespace qforge::backend {

ScriptedBackend& ScriptedBackend::set(const std::string& tag, int pass_index, std::vector<std::string> candidates) {
    auto& entry = script_[tag];
    if (pass_index < 1 || static_cast<std::size_t>(pass_index) > entry.passes.size() + 1) {
        throw Error(ErrorCode::invalid_config, "scripted passes for '" + tag + "' must be added contiguously from 1");
    }
    if (candidates.empty()) throw Error(ErrorCode::invalid_config, "scripted pass needs at least one completion");
    const auto idx = static_cast<std::size_t>(pass_index - 1);
    if (idx == entry.passes.size()) entry.passes.push_back(std::move(candidates));
    else entry.passes[idx] = std::move(candidates);
    return *this;
}

ScriptedBackend& ScriptedBackend::fail(const std::string& tag, ErrorCode code) {
    script_[tag].failure = code;
    return *this;
}

namespace {

ErrorCode parse_code(const std::string& name) {
    for (auto code : {ErrorCode::transport_error, ErrorCode::auth_error, ErrorCode::malformed_response,
                      ErrorCode::cassette_miss, ErrorCode::backend_unreachable}) {
        if (to_string(code) == name) return code;
    }
    throw Error(ErrorCode::invalid_config, "unknown scripted error '" + name + "'");
}

} // namespace

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::invalid_config, "script must be a JSON object");
    auto b = std::make_shared<ScriptedBackend>();
    for (const auto& [tag, value] : j.items()) {
        if (value.is_object()) {
            b->fail(tag, parse_code(value.at("error").get<std::string>()));
            continue;
        }
        if (!value.is_array()) throw Error(ErrorCode::invalid_config, "script entry for '" + tag + "' must be an array");
        int pass = 1;
        for (const auto& item : value) {
            if (item.is_string()) b->set(tag, pass++, item.get<std::string>());
            else b->set(tag, pass++, item.get<std::vector<std::string>>());
        }
    }
    return b;
}

CompletionResponse ScriptedBackend::complete(const CompletionRequest& request) {
    request.params.validate();
    const std::string tag = request.tag.value_or("");
    std::lock_guard lock(mutex_);
    ++calls_;
    auto it = script_.find(tag);
    if (it == script_.end()) it = script_.find(wildcard);
    if (it == script_.end()) throw Error(ErrorCode::invalid_config, "no scripted completion for tag '" + tag + "'");
    const auto& entry = it->second;
    if (entry.failure) throw Error(*entry.failure, "scripted failure for tag '" + tag + "'");
    if (entry.passes.empty()) throw Error(ErrorCode::invalid_config, "empty script for tag '" + tag + "'");

    const std::size_t pass = counters_[tag]++;
    const auto& candidates = entry.passes[pass % entry.passes.size()];
    CompletionResponse response;
    response.backend_id = id();
    for (int i = 0; i < request.params.n; ++i) {
        response.completions.push_back(candidates[static_cast<std::size_t>(i) % candidates.size()]);
    }
    return response;
}

std::size_t ScriptedBackend::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

} // namespace qforge::backend
