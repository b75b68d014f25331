#include "qforge/prompting/exemplar.hpp"

#include "qforge/error.hpp"
#include "qforge/text.hpp"

#include <algorithm>
#include <filesystem>
#include <regex>

namespace qforge::prompting {

std::string_view to_string(PromptStyle s) { return s == PromptStyle::cot ? "cot" : "scot"; }

std::string_view to_string(StructureKind k) {
    switch (k) {
    case StructureKind::sequence: return "sequence";
    case StructureKind::branch: return "branch";
    case StructureKind::loop: return "loop";
    }
    return "sequence";
}

PromptStyle prompt_style_from_string(std::string_view s) {
    if (s == "cot") return PromptStyle::cot;
    if (s == "scot") return PromptStyle::scot;
    throw Error(ErrorCode::invalid_config, "unknown prompt style '" + std::string(s) + "'");
}

namespace {

const std::regex step_re(R"(^Step (\d+)(?: \[(sequence|branch|loop)\])?:\s*(.*)$)");
const std::regex fence_re(R"(^(`{3,})python\s*$)");

StructureKind kind_from_string(const std::string& s) {
    if (s == "branch") return StructureKind::branch;
    if (s == "loop") return StructureKind::loop;
    return StructureKind::sequence;
}

std::size_t longest_run(std::string_view s, char c) {
    std::size_t best = 0, run = 0;
    for (char ch : s) {
        run = ch == c ? run + 1 : 0;
        best = std::max(best, run);
    }
    return best;
}

[[noreturn]] void reject(const std::string& why) { throw Error(ErrorCode::parse_failure, why); }

bool is_step_line(std::string_view line) { return text::starts_with(line, "Step "); }

} // namespace

std::string format_exemplar(const CotExemplar& e) {
    const auto question = std::string(text::trim(e.question));
    if (question.empty()) throw Error(ErrorCode::invalid_params, "exemplar question is empty");
    const auto qlines = text::split_lines(question);
    for (std::size_t i = 1; i < qlines.size(); ++i) {
        if (is_step_line(qlines[i]) || text::starts_with(qlines[i], "```")) {
            throw Error(ErrorCode::invalid_params, "question line would be read as a step or fence");
        }
    }
    if (e.reasoning_steps.empty()) throw Error(ErrorCode::invalid_params, "exemplar needs at least one step");
    if (text::trim(e.answer_code).empty()) throw Error(ErrorCode::invalid_params, "exemplar code is empty");

    std::string out = "Q: " + question + "\n";
    for (std::size_t i = 0; i < e.reasoning_steps.size(); ++i) {
        const auto& step = e.reasoning_steps[i];
        const auto body = std::string(text::trim(step.text));
        if (body.empty() || body.find('\n') != std::string::npos) {
            throw Error(ErrorCode::invalid_params, "step text must be one nonempty line");
        }
        if (step.kind.has_value() != (e.style == PromptStyle::scot)) {
            throw Error(ErrorCode::invalid_params, "scot steps need a structure kind, cot steps must not have one");
        }
        out += "Step " + std::to_string(i + 1);
        if (step.kind) out += " [" + std::string(to_string(*step.kind)) + "]";
        out += ": " + body + "\n";
    }
    const std::string fence(std::max<std::size_t>(3, longest_run(e.answer_code, '`') + 1), '`');
    out += fence + "python\n" + e.answer_code + "\n" + fence + "\n";
    return out;
}

CotExemplar parse_exemplar(std::string_view input) {
    const auto lines = text::split_lines(input);
    std::size_t i = 0;
    auto skip_blank = [&] {
        while (i < lines.size() && text::trim(lines[i]).empty()) ++i;
    };

    skip_blank();
    if (i == lines.size() || !text::starts_with(lines[i], "Q:")) reject("exemplar must start with a 'Q:' line");
    std::string question(lines[i].substr(2));
    for (++i; i < lines.size() && !is_step_line(lines[i]); ++i) {
        if (text::starts_with(lines[i], "```")) reject("code block before any 'Step' line");
        question += "\n";
        question += lines[i];
    }
    CotExemplar e;
    e.question = std::string(text::trim(question));
    if (e.question.empty()) reject("empty question");

    std::optional<bool> tagged;
    std::smatch m;
    while (i < lines.size() && is_step_line(lines[i])) {
        const std::string line(text::trim_right(lines[i]));
        if (!std::regex_match(line, m, step_re)) reject("malformed step line: " + line);
        if (std::stoul(m[1].str()) != e.reasoning_steps.size() + 1) reject("steps must be numbered 1, 2, ...");
        if (tagged && *tagged != m[2].matched) reject("steps mix tagged and untagged forms");
        tagged = m[2].matched;
        ReasoningStep step{std::string(text::trim(m[3].str())), std::nullopt};
        if (step.text.empty()) reject("empty step text");
        if (m[2].matched) step.kind = kind_from_string(m[2].str());
        e.reasoning_steps.push_back(std::move(step));
        ++i;
        skip_blank();
    }
    if (e.reasoning_steps.empty()) reject("no 'Step k:' lines");
    e.style = *tagged ? PromptStyle::scot : PromptStyle::cot;

    const std::string open = i < lines.size() ? std::string(text::trim_right(lines[i])) : std::string();
    if (!std::regex_match(open, m, fence_re)) reject("expected a ```python code block after the steps");
    const std::string fence = m[1].str();
    std::vector<std::string_view> code;
    for (++i; i < lines.size() && text::trim_right(lines[i]) != fence; ++i) code.push_back(lines[i]);
    if (i == lines.size()) reject("unterminated code block");
    ++i;
    skip_blank();
    if (i != lines.size()) reject("unexpected text after the code block");

    for (std::size_t k = 0; k < code.size(); ++k) {
        if (k) e.answer_code += "\n";
        e.answer_code += code[k];
    }
    if (text::trim(e.answer_code).empty()) reject("empty code block");
    return e;
}

std::vector<CotExemplar> load_exemplar_store(const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::io_error, "exemplar store not found: " + dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<CotExemplar> out;
    for (const auto& f : files) {
        try {
            out.push_back(parse_exemplar(text::read_file(f.string())));
        } catch (const Error& e) {
            throw Error(e.code(), f.string() + ": " + e.detail());
        }
    }
    return out;
}

void save_exemplar(const std::string& path, const CotExemplar& exemplar) {
    text::write_file(path, format_exemplar(exemplar));
}

} // namespace qforge::prompting
