#pragma once

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

namespace qforge::sandbox {

enum class ExecStatus { ok, error, timeout, infra_fail };

std::string_view to_string(ExecStatus status);
ExecStatus exec_status_from_string(std::string_view name);

struct Frame {
    std::string file;
    int line = 0;
};

struct ParsedError {
    std::string error_type;
    std::string message;
    std::optional<Frame> last_frame;
};

struct ExecutionResult {
    ExecStatus status = ExecStatus::infra_fail;
    std::optional<int> exit_code;
    std::string stdout_text;
    std::string stderr_text;
    std::int64_t duration_ms = 0;
    std::optional<ParsedError> parsed_error;
    /// Reason for infra_fail, empty otherwise. Not part of the runner envelope.
    std::string infra_detail;
};

/// Captured streams larger than this are cut and suffixed with truncation_marker.
inline constexpr std::size_t capture_limit = std::size_t{1} << 20;
inline constexpr std::string_view truncation_marker = "\n[qforge: output truncated at 1048576 bytes]\n";
/// Replaces the per-run workdir path in captured output.
inline constexpr std::string_view workdir_token = "<workdir>";
/// Raw stderr kept when no traceback can be recognised.
inline constexpr std::size_t stderr_fallback_chars = 2000;

struct ExecutorConfig {
    /// argv template; "{file}" must appear exactly once, "{timeout}" is optional.
    std::vector<std::string> command = {"qforge-runner", "{file}", "--timeout", "{timeout}"};
    double timeout_s = 30.0;
    /// Extra wall-clock allowance for the runner to report before its process group is killed.
    double grace_s = 5.0;
    std::vector<std::string> env_allowlist = {"PATH", "HOME", "LANG", "LC_ALL", "PYTHONPATH", "PYTHONIOENCODING",
                                              "VIRTUAL_ENV"};
    std::string file_name = "candidate.py";
    /// 0 means the number of logical CPUs.
    std::size_t max_concurrency = 0;

    void validate() const;
};

void to_json(nlohmann::json& j, const ExecutorConfig& c);
void from_json(const nlohmann::json& j, ExecutorConfig& c);

class Executor {
public:
    virtual ~Executor() = default;
    virtual ExecutionResult execute(const std::string& code) = 0;
};

/// Runs candidates through an external runner that prints one JSON envelope
/// on stdout. Each call gets a fresh temp workdir and its own process group,
/// which is killed once the runner exits or the deadline passes.
class ProcessExecutor final : public Executor {
public:
    explicit ProcessExecutor(ExecutorConfig config);

    ExecutionResult execute(const std::string& code) override;
    const ExecutorConfig& config() const { return config_; }

private:
    ExecutionResult run(const std::string& code);

    ExecutorConfig config_;
    std::unique_ptr<std::counting_semaphore<4096>> slots_;
};

/// Decodes a runner envelope {status, exit_code, stdout_b64, stderr_b64,
/// duration_ms}. Anything malformed or self-inconsistent yields infra_fail.
ExecutionResult parse_envelope(std::string_view runner_stdout);

/// Structured view of the last interpreter traceback in stderr, if any.
std::optional<ParsedError> parse_error_trace(std::string_view stderr_text);

/// Text handed to the repair loop: the parsed exception or the raw stderr tail.
ParsedError describe_failure(const ExecutionResult& result, double timeout_s);

std::string cap_output(std::string text);

void to_json(nlohmann::json& j, const ParsedError& e);
void from_json(const nlohmann::json& j, ParsedError& e);
void to_json(nlohmann::json& j, const ExecutionResult& r);
void from_json(const nlohmann::json& j, ExecutionResult& r);

} // namespace qforge::sandbox
