#pragma once

#include "qforge/backend/backend.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace qforge::backend {

enum class CassetteMode { record, replay };

/// SHA-256 (hex) over the canonical JSON of {prompt, params, tag}.
std::string cassette_key(const CompletionRequest& request);

/// Record/replay wrapper. Record mode forwards to the inner backend and
/// appends {key, request, response, timestamp} as one JSON line per call.
/// Replay mode never touches the inner backend; repeated keys are served in
/// recorded order, and an unseen key throws Error(cassette_miss).
class CassetteBackend final : public Backend {
public:
    CassetteBackend(std::shared_ptr<Backend> inner, std::string path, CassetteMode mode);

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override;

private:
    std::shared_ptr<Backend> inner_;
    std::string path_;
    CassetteMode mode_;
    std::map<std::string, std::vector<nlohmann::json>> recorded_;
    std::map<std::string, std::size_t> cursor_;
    std::mutex mutex_;
};

} // namespace qforge::backend
