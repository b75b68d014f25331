#include "qforge/orchestrator/pipeline.hpp"

#include "qforge/error.hpp"
#include "qforge/parallel.hpp"
#include "qforge/prompting/prompts.hpp"
#include "qforge/text.hpp"

namespace qforge::orchestrator {

std::string_view to_string(Strategy s) {
    switch (s) {
    case Strategy::plain: return "plain";
    case Strategy::cot: return "cot";
    case Strategy::scot: return "scot";
    case Strategy::rag: return "rag";
    }
    return "plain";
}

std::string_view to_string(Verdict v) {
    switch (v) {
    case Verdict::syntactic_fail: return "syntactic_fail";
    case Verdict::semantic_fail: return "semantic_fail";
    case Verdict::pass: return "pass";
    }
    return "syntactic_fail";
}

Strategy strategy_from_string(std::string_view s) {
    for (auto v : {Strategy::plain, Strategy::cot, Strategy::scot, Strategy::rag}) {
        if (to_string(v) == s) return v;
    }
    throw Error(ErrorCode::invalid_config, "unknown strategy '" + std::string(s) + "'");
}

Verdict verdict_from_string(std::string_view s) {
    for (auto v : {Verdict::syntactic_fail, Verdict::semantic_fail, Verdict::pass}) {
        if (to_string(v) == s) return v;
    }
    throw Error(ErrorCode::invalid_config, "unknown verdict '" + std::string(s) + "'");
}

void PipelineConfig::validate() const {
    if (max_passes < 1) throw Error(ErrorCode::invalid_config, "max_passes must be at least 1");
    if (samples_n < 1) throw Error(ErrorCode::invalid_config, "samples_n must be at least 1");
    if (strategy != Strategy::rag && retrieval_k != 0) {
        throw Error(ErrorCode::invalid_config, "retrieval_k must be 0 unless the strategy is rag");
    }
    if (strategy == Strategy::rag && retrieval_k == 0) {
        throw Error(ErrorCode::invalid_config, "the rag strategy needs retrieval_k >= 1");
    }
    sampling.validate();
    executor.validate();
}

void to_json(nlohmann::json& j, const PipelineConfig& c) {
    j = {{"max_passes", c.max_passes}, {"strategy", to_string(c.strategy)}, {"samples_n", c.samples_n},
         {"sampling", c.sampling},     {"retrieval_k", c.retrieval_k},       {"executor", c.executor},
         {"backend", c.backend},       {"workers", c.workers}};
}

void from_json(const nlohmann::json& j, PipelineConfig& c) {
    c.max_passes = j.value("max_passes", c.max_passes);
    if (j.contains("strategy")) c.strategy = strategy_from_string(j.at("strategy").get<std::string>());
    c.samples_n = j.value("samples_n", c.samples_n);
    if (j.contains("sampling")) {
        nlohmann::json merged = c.sampling;
        merged.update(j.at("sampling"));
        c.sampling = merged.get<backend::SamplingParams>();
    }
    c.retrieval_k = j.value("retrieval_k", c.retrieval_k);
    if (j.contains("executor")) {
        nlohmann::json merged = c.executor;
        merged.update(j.at("executor"));
        c.executor = merged.get<sandbox::ExecutorConfig>();
    }
    c.backend = j.value("backend", c.backend);
    c.workers = j.value("workers", c.workers);
}

nlohmann::json to_json(const Attempt& a, const ReportOptions& options) {
    nlohmann::json execution = a.execution;
    if (!options.include_timing) execution.erase("duration_ms");
    nlohmann::json j = {{"pass_index", a.pass_index},
                        {"prompt_used", a.prompt_used},
                        {"code", a.code},
                        {"execution", execution},
                        {"verdict", to_string(a.verdict)},
                        {"feedback", nullptr}};
    if (a.feedback) j["feedback"] = *a.feedback;
    return j;
}

nlohmann::json to_json(const TaskReport& r, const ReportOptions& options) {
    nlohmann::json attempts = nlohmann::json::array();
    for (const auto& a : r.attempts) attempts.push_back(to_json(a, options));
    nlohmann::json j = {{"task_id", r.task_id},
                        {"attempts", attempts},
                        {"final_verdict", r.error ? nlohmann::json() : nlohmann::json(to_string(r.final_verdict))},
                        {"passes_used", r.passes_used}};
    if (r.error) j["error"] = {{"code", r.error->code}, {"message", r.error->message}};
    return j;
}

nlohmann::json to_json(const std::vector<TaskReport>& reports, const ReportOptions& options) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& r : reports) j.push_back(to_json(r, options));
    return j;
}

TaskReport task_report_from_json(const nlohmann::json& j) {
    TaskReport r;
    r.task_id = j.at("task_id").get<std::string>();
    r.passes_used = j.at("passes_used").get<int>();
    if (j.contains("error")) r.error = TaskError{j["error"].at("code").get<std::string>(), j["error"].at("message").get<std::string>()};
    if (!j.at("final_verdict").is_null()) r.final_verdict = verdict_from_string(j.at("final_verdict").get<std::string>());
    for (const auto& ja : j.at("attempts")) {
        Attempt a;
        a.pass_index = ja.at("pass_index").get<int>();
        a.prompt_used = ja.at("prompt_used").get<std::string>();
        a.code = ja.at("code").get<std::string>();
        auto execution = ja.at("execution");
        if (!execution.contains("duration_ms")) execution["duration_ms"] = 0;
        a.execution = execution.get<sandbox::ExecutionResult>();
        a.verdict = verdict_from_string(ja.at("verdict").get<std::string>());
        if (!ja.at("feedback").is_null()) a.feedback = ja.at("feedback").get<sandbox::ParsedError>();
        r.attempts.push_back(std::move(a));
    }
    return r;
}

Verdict classify_verdict(const sandbox::ExecutionResult& execution, const std::optional<CheckerSpec>& checker,
                         std::optional<bool> checker_outcome) {
    if (execution.status != sandbox::ExecStatus::ok) return Verdict::syntactic_fail;
    if (checker && checker_outcome == false) return Verdict::semantic_fail;
    return Verdict::pass;
}

Pipeline::Pipeline(PipelineConfig config, PipelineResources resources)
    : config_(std::move(config)), resources_(std::move(resources)) {
    config_.validate();
    if (!resources_.backend) throw Error(ErrorCode::invalid_config, "pipeline needs a backend");
    if (!resources_.executor) throw Error(ErrorCode::invalid_config, "pipeline needs an executor");
}

std::string Pipeline::initial_prompt(const GenerationTask& task) const {
    switch (config_.strategy) {
    case Strategy::plain:
        return prompting::build_plain_prompt(task);
    case Strategy::cot:
        return prompting::build_cot_prompt(task, resources_.exemplars, prompting::PromptStyle::cot);
    case Strategy::scot:
        return prompting::build_cot_prompt(task, resources_.exemplars, prompting::PromptStyle::scot);
    case Strategy::rag: {
        if (!resources_.index || !resources_.embedder) {
            throw Error(ErrorCode::index_missing, "the rag strategy needs a loaded index");
        }
        const auto hits = rag::retrieve(*resources_.index, task.prompt, config_.retrieval_k, *resources_.embedder);
        return rag::augment_prompt(prompting::build_plain_prompt(task), hits);
    }
    }
    return prompting::build_plain_prompt(task);
}

backend::CompletionResponse Pipeline::call_backend(const backend::CompletionRequest& request) const {
    try {
        auto response = resources_.backend->complete(request);
        backend::check_completion_count(request, response);
        return response;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::transport_error) throw Error(ErrorCode::backend_unreachable, e.detail());
        throw;
    }
}

namespace {

sandbox::ExecutionResult run_checked(sandbox::Executor& executor, const std::string& code) {
    auto result = executor.execute(code);
    if (result.status == sandbox::ExecStatus::infra_fail) {
        throw Error(ErrorCode::executor_failure, result.infra_detail);
    }
    return result;
}

} // namespace

std::pair<sandbox::ExecutionResult, std::optional<CheckOutcome>> Pipeline::evaluate(const GenerationTask& task,
                                                                                     const std::string& code) const {
    auto execution = run_checked(*resources_.executor, code);
    if (execution.status != sandbox::ExecStatus::ok || !task.checker) return {std::move(execution), std::nullopt};

    const auto& checker = *task.checker;
    CheckOutcome outcome;
    switch (checker.kind) {
    case CheckerKind::exact_stdout:
        outcome.passed = text::trim_right(execution.stdout_text) == text::trim_right(checker.payload);
        if (!outcome.passed) {
            outcome.detail = "stdout did not match the expected output.\nExpected:\n" + checker.payload +
                             "\nActual:\n" + text::tail(execution.stdout_text, sandbox::stderr_fallback_chars);
        }
        break;
    case CheckerKind::contains_stdout:
        outcome.passed = execution.stdout_text.find(checker.payload) != std::string::npos;
        if (!outcome.passed) outcome.detail = "stdout does not contain the expected text: " + checker.payload;
        break;
    case CheckerKind::assertion_script: {
        const auto check = run_checked(*resources_.executor, code + "\n\n" + checker.payload + "\n");
        outcome.passed = check.status == sandbox::ExecStatus::ok;
        if (!outcome.passed) {
            const auto why = sandbox::describe_failure(check, config_.executor.timeout_s);
            outcome.detail = "assertion check failed: " + why.error_type +
                             (why.message.empty() ? std::string() : ": " + why.message);
        }
        break;
    }
    }
    return {std::move(execution), outcome};
}

TaskReport Pipeline::run_task(const GenerationTask& task) const {
    TaskReport report;
    report.task_id = task.id;
    std::string prompt = initial_prompt(task);

    for (int pass = 1; pass <= config_.max_passes; ++pass) {
        backend::CompletionRequest request;
        request.prompt = prompt;
        request.params = config_.sampling;
        request.params.n = 1;
        request.tag = task.id;
        const auto response = call_backend(request);

        Attempt attempt;
        attempt.pass_index = pass;
        attempt.prompt_used = prompt;
        attempt.code = prompting::extract_code(response.completions.front());
        auto [execution, check] = evaluate(task, attempt.code);
        attempt.execution = std::move(execution);
        attempt.verdict = classify_verdict(attempt.execution, task.checker,
                                           check ? std::optional<bool>(check->passed) : std::nullopt);
        if (attempt.verdict == Verdict::semantic_fail) {
            attempt.feedback = sandbox::ParsedError{"CheckerMismatch", check->detail, std::nullopt};
        } else if (attempt.verdict == Verdict::syntactic_fail) {
            attempt.feedback = sandbox::describe_failure(attempt.execution, config_.executor.timeout_s);
        }
        report.attempts.push_back(attempt);
        if (attempt.verdict == Verdict::pass || pass == config_.max_passes) break;

        const std::string code = text::trim(attempt.code).empty() ? std::string("# (no code was produced)") : attempt.code;
        prompt = prompting::build_repair_prompt(task.prompt, code, *attempt.feedback);
    }
    report.final_verdict = report.attempts.back().verdict;
    report.passes_used = static_cast<int>(report.attempts.size());
    return report;
}

std::vector<TaskReport> Pipeline::run_batch(const std::vector<GenerationTask>& tasks) const {
    if (tasks.empty()) throw Error(ErrorCode::no_tasks, "no tasks to run");
    std::vector<TaskReport> reports(tasks.size());
    const auto workers = config_.workers == 0 ? default_concurrency() : config_.workers;
    parallel_for(tasks.size(), workers, [&](std::size_t i) {
        try {
            reports[i] = run_task(tasks[i]);
        } catch (const Error& e) {
            reports[i] = TaskReport{tasks[i].id, {}, Verdict::syntactic_fail, 0,
                                    TaskError{std::string(qforge::to_string(e.code())), e.detail()}};
        } catch (const std::exception& e) {
            reports[i] = TaskReport{tasks[i].id, {}, Verdict::syntactic_fail, 0, TaskError{"internal", e.what()}};
        }
    });
    return reports;
}

} // namespace qforge::orchestrator
