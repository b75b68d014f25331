#pragma once

#include "qforge/backend/backend.hpp"
#include "qforge/prompting/exemplar.hpp"
#include "qforge/sandbox/executor.hpp"
#include "qforge/task.hpp"

#include <map>
#include <string>
#include <vector>

namespace qforge::prompting {

/// Text with {name} placeholders. Only the known placeholder names are
/// substituted; a known name left unbound is an error.
struct PromptTemplate {
    std::string name;
    std::string body;

    std::string render(const std::map<std::string, std::string>& values) const;
};

/// Names treated as placeholders by PromptTemplate::render.
const std::vector<std::string>& placeholder_names();

const PromptTemplate& plain_template();
const PromptTemplate& repair_template();
const PromptTemplate& cot_template();

std::string build_plain_prompt(const GenerationTask& task);

/// Task prompt, code and error message each appear verbatim, in that order,
/// inside tilde fences longer than any tilde run in the inputs.
std::string build_repair_prompt(const std::string& task_prompt, const std::string& code,
                                const sandbox::ParsedError& error);

std::string build_cot_prompt(const GenerationTask& task, const std::vector<CotExemplar>& exemplars,
                             PromptStyle style);

/// Asks the backend for a new exemplar in the seeds' format and parses it.
/// The seeds fix the style; a reply in a different style is a parse failure.
CotExemplar generate_cot_exemplar(const GenerationTask& task, const std::vector<CotExemplar>& seeds,
                                  backend::Backend& backend);

/// Code inside the first fenced block of a completion, or the whole
/// completion when it has none.
std::string extract_code(std::string_view completion);

} // namespace qforge::prompting
