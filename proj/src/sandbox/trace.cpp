#include "qforge/sandbox/executor.hpp"

#include "qforge/text.hpp"

#include <regex>

namespace qforge::sandbox {

namespace {

const std::regex frame_re(R"re(^\s*File "(.+)", line (\d+))re");
const std::regex exception_re(R"(^([A-Za-z_][A-Za-z0-9_.]*)(?::\s?(.*))?$)");

bool indented(std::string_view line) { return !line.empty() && (line[0] == ' ' || line[0] == '\t'); }

} // namespace

std::optional<ParsedError> parse_error_trace(std::string_view stderr_text) {
    const auto lines = text::split_lines(stderr_text);

    // Start of the last traceback block; a bare `File "...", line N` header
    // covers SyntaxError reports, which print no "Traceback" line.
    std::optional<std::size_t> start;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (text::starts_with(lines[i], "Traceback (most recent call last):")) start = i;
    }
    if (!start) {
        for (std::size_t i = 0; i < lines.size() && !start; ++i) {
            if (std::regex_search(std::string(lines[i]), frame_re)) start = i;
        }
    }
    if (!start) return std::nullopt;

    std::optional<Frame> frame;
    std::optional<ParsedError> found;
    std::smatch m;
    for (std::size_t i = *start; i < lines.size(); ++i) {
        const std::string line(text::trim_right(lines[i]));
        if (std::regex_search(line, m, frame_re)) {
            frame = Frame{m[1].str(), std::stoi(m[2].str())};
            continue;
        }
        if (line.empty() || indented(line) || text::starts_with(line, "Traceback")) continue;
        if (std::regex_match(line, m, exception_re)) {
            found = ParsedError{m[1].str(), m[2].matched ? m[2].str() : std::string(), frame};
        }
    }
    return found;
}

ParsedError describe_failure(const ExecutionResult& result, double timeout_s) {
    if (result.parsed_error) return *result.parsed_error;
    switch (result.status) {
    case ExecStatus::timeout: {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%g", timeout_s);
        return {"TimeoutError", std::string("execution exceeded the ") + buf + " s time limit", std::nullopt};
    }
    case ExecStatus::infra_fail:
        return {"InfrastructureError", result.infra_detail, std::nullopt};
    default:
        break;
    }
    const auto tail = text::tail(result.stderr_text, stderr_fallback_chars);
    if (!text::trim(tail).empty()) return {"RuntimeError", tail, std::nullopt};
    return {"RuntimeError",
            "process exited with code " + (result.exit_code ? std::to_string(*result.exit_code) : std::string("?")),
            std::nullopt};
}

} // namespace qforge::sandbox

namespace qforge::sandbox {

void to_json(nlohmann::json& j, const ParsedError& e) {
    j = {{"error_type", e.error_type}, {"message", e.message}, {"last_frame", nullptr}};
    if (e.last_frame) j["last_frame"] = {{"file", e.last_frame->file}, {"line", e.last_frame->line}};
}

void from_json(const nlohmann::json& j, ParsedError& e) {
    e.error_type = j.at("error_type").get<std::string>();
    e.message = j.at("message").get<std::string>();
    e.last_frame.reset();
    if (j.contains("last_frame") && !j.at("last_frame").is_null()) {
        e.last_frame = Frame{j["last_frame"].at("file").get<std::string>(), j["last_frame"].at("line").get<int>()};
    }
}

void to_json(nlohmann::json& j, const ExecutionResult& r) {
    j = {{"status", to_string(r.status)},
         {"exit_code", nullptr},
         {"stdout", r.stdout_text},
         {"stderr", r.stderr_text},
         {"duration_ms", r.duration_ms},
         {"parsed_error", nullptr}};
    if (r.exit_code) j["exit_code"] = *r.exit_code;
    if (r.parsed_error) j["parsed_error"] = *r.parsed_error;
    if (!r.infra_detail.empty()) j["infra_detail"] = r.infra_detail;
}

void from_json(const nlohmann::json& j, ExecutionResult& r) {
    r.status = exec_status_from_string(j.at("status").get<std::string>());
    r.exit_code.reset();
    if (!j.at("exit_code").is_null()) r.exit_code = j.at("exit_code").get<int>();
    r.stdout_text = j.at("stdout").get<std::string>();
    r.stderr_text = j.at("stderr").get<std::string>();
    r.duration_ms = j.at("duration_ms").get<std::int64_t>();
    r.parsed_error.reset();
    if (!j.at("parsed_error").is_null()) r.parsed_error = j.at("parsed_error").get<ParsedError>();
    r.infra_detail = j.value("infra_detail", std::string());
}

} // namespace qforge::sandbox
