#pragma once

#include "qforge/backend/backend.hpp"
#include "qforge/prompting/exemplar.hpp"
#include "qforge/rag/rag.hpp"
#include "qforge/sandbox/executor.hpp"
#include "qforge/task.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qforge::orchestrator {

enum class Strategy { plain, cot, scot, rag };
enum class Verdict { syntactic_fail, semantic_fail, pass };

std::string_view to_string(Strategy s);
std::string_view to_string(Verdict v);
Strategy strategy_from_string(std::string_view s);
Verdict verdict_from_string(std::string_view s);

struct PipelineConfig {
    int max_passes = 3;
    Strategy strategy = Strategy::plain;
    int samples_n = 1;
    backend::SamplingParams sampling;
    std::size_t retrieval_k = 0;
    sandbox::ExecutorConfig executor;
    std::string backend = "http";
    /// Concurrent tasks in run_batch; 0 means the number of logical CPUs.
    std::size_t workers = 0;

    void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
/// Fields absent from `j` keep their current values.
void from_json(const nlohmann::json& j, PipelineConfig& c);

struct Attempt {
    int pass_index = 1;
    std::string prompt_used;
    std::string code;
    sandbox::ExecutionResult execution;
    Verdict verdict = Verdict::syntactic_fail;
    /// Failure description handed to the next pass; absent on pass.
    std::optional<sandbox::ParsedError> feedback;
};

struct TaskError {
    std::string code;
    std::string message;
};

struct TaskReport {
    std::string task_id;
    std::vector<Attempt> attempts;
    Verdict final_verdict = Verdict::syntactic_fail;
    int passes_used = 0;
    /// Set only on batch records for tasks that hit an infrastructure error;
    /// such records carry no attempts.
    std::optional<TaskError> error;
};

struct ReportOptions {
    /// Durations vary run to run; dropping them makes reports byte-stable.
    bool include_timing = true;
};

nlohmann::json to_json(const Attempt& a, const ReportOptions& options = {});
nlohmann::json to_json(const TaskReport& r, const ReportOptions& options = {});
nlohmann::json to_json(const std::vector<TaskReport>& reports, const ReportOptions& options = {});
TaskReport task_report_from_json(const nlohmann::json& j);

/// Outcome of a checker run against a successful execution.
struct CheckOutcome {
    bool passed = true;
    std::string detail;  ///< mismatch description when !passed
};

Verdict classify_verdict(const sandbox::ExecutionResult& execution, const std::optional<CheckerSpec>& checker,
                         std::optional<bool> checker_outcome);

/// Read-only resources shared by every task of a run.
struct PipelineResources {
    std::shared_ptr<backend::Backend> backend;
    std::shared_ptr<sandbox::Executor> executor;
    std::shared_ptr<const rag::VectorIndex> index;
    std::shared_ptr<const rag::Embedder> embedder;
    std::vector<prompting::CotExemplar> exemplars;
};

class Pipeline {
public:
    Pipeline(PipelineConfig config, PipelineResources resources);

    /// Generate, execute, classify and repair until a pass or the budget runs out.
    TaskReport run_task(const GenerationTask& task) const;
    /// One report per task in input order; per-task errors become error records.
    std::vector<TaskReport> run_batch(const std::vector<GenerationTask>& tasks) const;

    /// Pass-1 prompt for the configured strategy.
    std::string initial_prompt(const GenerationTask& task) const;
    /// Executes `code` and applies the task's checker.
    std::pair<sandbox::ExecutionResult, std::optional<CheckOutcome>> evaluate(const GenerationTask& task,
                                                                               const std::string& code) const;
    /// Calls the backend, mapping transport failures to backend_unreachable.
    backend::CompletionResponse call_backend(const backend::CompletionRequest& request) const;

    const PipelineConfig& config() const { return config_; }

private:
    PipelineConfig config_;
    PipelineResources resources_;
};

} // namespace qforge::orchestrator
