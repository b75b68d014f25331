#include "qforge/error.hpp"

namespace qforge {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::backend_unreachable: return "backend_unreachable";
        case ErrorCode::executor_failure: return "executor_failure";
        case ErrorCode::index_missing: return "index_missing";
        case ErrorCode::no_tasks: return "no_tasks";
        case ErrorCode::transport_error: return "transport_error";
        case ErrorCode::auth_error: return "auth_error";
        case ErrorCode::cassette_miss: return "cassette_miss";
        case ErrorCode::malformed_response: return "malformed_response";
        case ErrorCode::empty_input: return "empty_input";
        case ErrorCode::style_mismatch: return "style_mismatch";
        case ErrorCode::no_exemplars: return "no_exemplars";
        case ErrorCode::parse_failure: return "parse_failure";
        case ErrorCode::invalid_params: return "invalid_params";
        case ErrorCode::dimension_mismatch: return "dimension_mismatch";
        case ErrorCode::empty_index: return "empty_index";
        case ErrorCode::invalid_args: return "invalid_args";
        case ErrorCode::malformed_notebook: return "malformed_notebook";
        case ErrorCode::invalid_target: return "invalid_target";
        case ErrorCode::invalid_distance: return "invalid_distance";
        case ErrorCode::too_many_defects: return "too_many_defects";
        case ErrorCode::inconsistent_history: return "inconsistent_history";
        case ErrorCode::topology_unsupported: return "topology_unsupported";
        case ErrorCode::unsupported_gate: return "unsupported_gate";
        case ErrorCode::length_mismatch: return "length_mismatch";
        case ErrorCode::io_error: return "io_error";
        case ErrorCode::invalid_config: return "invalid_config";
    }
    return "unknown";
}

} // namespace qforge
