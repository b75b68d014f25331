#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qforge {

enum class ErrorCode {
    // orchestrator
    backend_unreachable,
    executor_failure,
    index_missing,
    no_tasks,
    // backend
    transport_error,
    auth_error,
    cassette_miss,
    malformed_response,
    // prompting
    empty_input,
    style_mismatch,
    no_exemplars,
    parse_failure,
    // rag
    invalid_params,
    dimension_mismatch,
    empty_index,
    // evalsuite
    invalid_args,
    // dataprep
    malformed_notebook,
    invalid_target,
    // qec
    invalid_distance,
    too_many_defects,
    inconsistent_history,
    topology_unsupported,
    unsupported_gate,
    length_mismatch,
    // shared
    io_error,
    invalid_config,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a stable machine-readable code alongside the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

} // namespace qforge
