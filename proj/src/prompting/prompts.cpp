#include "qforge/prompting/prompts.hpp"

#include "qforge/error.hpp"
#include "qforge/text.hpp"

#include <algorithm>

namespace qforge::prompting {

const std::vector<std::string>& placeholder_names() {
    static const std::vector<std::string> names = {"task_prompt", "code",  "error_trace", "error_type",
                                                   "context_chunks", "exemplars", "fence"};
    return names;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
    const auto& known = placeholder_names();
    std::string out;
    out.reserve(body.size());
    std::size_t pos = 0;
    while (pos < body.size()) {
        const auto open = body.find('{', pos);
        if (open == std::string::npos) break;
        const auto close = body.find('}', open + 1);
        if (close == std::string::npos) break;
        const auto name = body.substr(open + 1, close - open - 1);
        out.append(body, pos, open - pos);
        if (std::find(known.begin(), known.end(), name) == known.end()) {
            out += '{';
            pos = open + 1;
            continue;
        }
        const auto it = values.find(name);
        if (it == values.end()) {
            throw Error(ErrorCode::invalid_config, "template '" + this->name + "' leaves {" + name + "} unbound");
        }
        out += it->second;
        pos = close + 1;
    }
    out.append(body, pos);
    return out;
}

const PromptTemplate& plain_template() {
    static const PromptTemplate t{
        "plain",
        "{task_prompt}\n\nWrite a complete Python program for this task. Return it in a single fenced python code "
        "block.\n"};
    return t;
}

const PromptTemplate& repair_template() {
    static const PromptTemplate t{"repair",
                                  "A program written for the task below failed when it was run.\n\n"
                                  "Task:\n{fence}\n{task_prompt}\n{fence}\n\n"
                                  "Program:\n{fence}\n{code}\n{fence}\n\n"
                                  "Error ({error_type}):\n{fence}\n{error_trace}\n{fence}\n\n"
                                  "Fix the error and return the corrected, complete program in a single fenced python "
                                  "code block.\n"};
    return t;
}

const PromptTemplate& cot_template() {
    static const PromptTemplate t{"cot",
                                  "Solve each programming task by reasoning in numbered steps before writing code.\n\n"
                                  "{exemplars}Q: {task_prompt}\n"};
    return t;
}

namespace {

std::size_t longest_run(std::string_view s, char c) {
    std::size_t best = 0, run = 0;
    for (char ch : s) {
        run = ch == c ? run + 1 : 0;
        best = std::max(best, run);
    }
    return best;
}

std::string step_instruction(PromptStyle style) {
    if (style == PromptStyle::scot) {
        return "Let's think step by step. Write numbered steps, labelling each with the program structure it uses "
               "(\"Step 1 [sequence]:\", \"Step 2 [loop]:\", \"Step 3 [branch]:\"), then give the complete program "
               "in a single fenced python code block.\n";
    }
    return "Let's think step by step. Write numbered steps (\"Step 1:\", \"Step 2:\", ...), then give the complete "
           "program in a single fenced python code block.\n";
}

std::string render_exemplars(const std::vector<CotExemplar>& exemplars) {
    std::string out;
    for (std::size_t i = 0; i < exemplars.size(); ++i) {
        out += "Example " + std::to_string(i + 1) + ":\n" + format_exemplar(exemplars[i]) + "\n";
    }
    return out;
}

void check_style(const std::vector<CotExemplar>& exemplars, PromptStyle style) {
    if (exemplars.empty()) throw Error(ErrorCode::no_exemplars, "at least one exemplar is required");
    for (std::size_t i = 0; i < exemplars.size(); ++i) {
        if (exemplars[i].style != style) {
            throw Error(ErrorCode::style_mismatch, "exemplar " + std::to_string(i + 1) + " is " +
                                                       std::string(to_string(exemplars[i].style)) + ", expected " +
                                                       std::string(to_string(style)));
        }
    }
}

} // namespace

std::string build_plain_prompt(const GenerationTask& task) {
    if (text::trim(task.prompt).empty()) throw Error(ErrorCode::empty_input, "task prompt is empty");
    return plain_template().render({{"task_prompt", task.prompt}});
}

std::string build_repair_prompt(const std::string& task_prompt, const std::string& code,
                                const sandbox::ParsedError& error) {
    if (task_prompt.empty()) throw Error(ErrorCode::empty_input, "task prompt is empty");
    if (code.empty()) throw Error(ErrorCode::empty_input, "code is empty");
    if (error.message.empty()) throw Error(ErrorCode::empty_input, "error message is empty");

    const std::size_t run = std::max({longest_run(task_prompt, '~'), longest_run(code, '~'),
                                      longest_run(error.message, '~'), longest_run(error.error_type, '~')});
    std::string type = error.error_type.empty() ? std::string("error") : error.error_type;
    if (error.last_frame) type += ", line " + std::to_string(error.last_frame->line);
    return repair_template().render({{"fence", std::string(std::max<std::size_t>(3, run + 1), '~')},
                                     {"task_prompt", task_prompt},
                                     {"code", code},
                                     {"error_type", type},
                                     {"error_trace", error.message}});
}

std::string build_cot_prompt(const GenerationTask& task, const std::vector<CotExemplar>& exemplars,
                             PromptStyle style) {
    check_style(exemplars, style);
    if (text::trim(task.prompt).empty()) throw Error(ErrorCode::empty_input, "task prompt is empty");
    return cot_template().render({{"exemplars", render_exemplars(exemplars)}, {"task_prompt", task.prompt}}) +
           step_instruction(style);
}

CotExemplar generate_cot_exemplar(const GenerationTask& task, const std::vector<CotExemplar>& seeds,
                                  backend::Backend& backend) {
    if (seeds.empty()) throw Error(ErrorCode::no_exemplars, "at least one seed exemplar is required");
    const auto style = seeds.front().style;
    check_style(seeds, style);

    std::string prompt = "Write one new worked example in exactly the format of the examples below: a line starting "
                         "with \"Q:\" holding the question, numbered step lines";
    prompt += style == PromptStyle::scot ? " each tagged [sequence], [branch] or [loop]" : "";
    prompt += ", then the program in a fenced python code block. Output only the example.\n\n";
    prompt += render_exemplars(seeds);
    prompt += "Write the example for this question:\nQ: " + task.prompt + "\n";

    backend::CompletionRequest request;
    request.prompt = std::move(prompt);
    request.tag = "exemplar:" + task.id;
    const auto response = backend.complete(request);
    backend::check_completion_count(request, response);

    auto exemplar = parse_exemplar(response.completions.front());
    if (exemplar.style != style) {
        throw Error(ErrorCode::parse_failure, "generated exemplar is " + std::string(to_string(exemplar.style)) +
                                                  " but the seeds are " + std::string(to_string(style)));
    }
    return exemplar;
}

std::string extract_code(std::string_view completion) {
    const auto lines = text::split_lines(completion);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto line = text::trim(lines[i]);
        if (!text::starts_with(line, "```")) continue;
        const std::string fence(line.substr(0, line.find_first_not_of('`')));
        std::string code;
        for (std::size_t k = i + 1; k < lines.size(); ++k) {
            const auto t = text::trim(lines[k]);
            if (text::starts_with(t, fence) && t.find_first_not_of('`') == std::string_view::npos) return code;
            code += lines[k];
            code += '\n';
        }
        return code;
    }
    return std::string(completion);
}

} // namespace qforge::prompting
