#pragma once

#include "qforge/backend/backend.hpp"
#include "qforge/error.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace qforge::backend {

/// Deterministic backend serving canned completions keyed by (tag, pass
/// index). The pass index is the number of calls made so far for that tag
/// (1-based) and wraps around the scripted passes. Within one pass the
/// scripted candidates are cycled to fill params.n, so a single entry is
/// broadcast to every requested completion.
///
/// JSON form: {"<tag>": [pass1, pass2, ...], "*": [...]} where each pass is
/// a string or an array of strings, and a tag may instead map to
/// {"error": "<error code>"} to simulate an infrastructure failure.
class ScriptedBackend final : public Backend {
public:
    ScriptedBackend() = default;

    /// Sets the candidates for one pass. Passes must be added contiguously from 1.
    ScriptedBackend& set(const std::string& tag, int pass_index, std::vector<std::string> candidates);
    ScriptedBackend& set(const std::string& tag, int pass_index, std::string completion) {
        return set(tag, pass_index, std::vector<std::string>{std::move(completion)});
    }
    /// Every call for `tag` throws Error(code).
    ScriptedBackend& fail(const std::string& tag, ErrorCode code);

    static std::shared_ptr<ScriptedBackend> from_json(const nlohmann::json& j);

    CompletionResponse complete(const CompletionRequest& request) override;
    std::string id() const override { return "scripted"; }

    std::size_t calls() const;

    static constexpr const char* wildcard = "*";

private:
    struct Entry {
        std::vector<std::vector<std::string>> passes;
        std::optional<ErrorCode> failure;
    };

    std::map<std::string, Entry> script_;
    std::map<std::string, std::size_t> counters_;
    std::size_t calls_ = 0;
    mutable std::mutex mutex_;
};

} // namespace qforge::backend
