#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qforge::prompting {

enum class PromptStyle { cot, scot };
enum class StructureKind { sequence, branch, loop };

std::string_view to_string(PromptStyle s);
std::string_view to_string(StructureKind k);
PromptStyle prompt_style_from_string(std::string_view s);

struct ReasoningStep {
    std::string text;
    /// Present exactly when the exemplar is scot-style.
    std::optional<StructureKind> kind;
};

struct CotExemplar {
    std::string question;
    std::vector<ReasoningStep> reasoning_steps;
    std::string answer_code;
    PromptStyle style = PromptStyle::cot;
};

/// Exemplar text format:
///
///     Q: <question, may continue on following lines>
///     Step 1: <one line>
///     Step 2 [loop]: <one line>          (scot: every step carries a kind)
///     ```python
///     <code>
///     ```
///
/// Steps are numbered from 1 without gaps. The code fence is at least three
/// backticks and longer than any backtick run opening a line of the code.
/// Blank lines between sections are ignored; any other text is rejected.
std::string format_exemplar(const CotExemplar& exemplar);

/// Throws Error(parse_failure) on any deviation from the format.
CotExemplar parse_exemplar(std::string_view text);

/// Loads every *.txt file in `dir`, sorted by file name.
std::vector<CotExemplar> load_exemplar_store(const std::string& dir);
void save_exemplar(const std::string& path, const CotExemplar& exemplar);

} // namespace qforge::prompting
