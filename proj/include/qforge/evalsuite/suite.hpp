#pragma once

#include "qforge/backend/scripted.hpp"
#include "qforge/orchestrator/pipeline.hpp"
#include "qforge/task.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qforge::evalsuite {

struct TestCase {
    std::string id;
    std::string prompt;
    Category category = Category::basic;
    CheckerSpec checker;
    std::optional<std::string> reference_solution;

    GenerationTask task() const { return {id, prompt, category, checker}; }
};

void to_json(nlohmann::json& j, const TestCase& t);
void from_json(const nlohmann::json& j, TestCase& t);

/// One TestCase per line; blank lines are skipped. Ids must be unique.
std::vector<TestCase> load_suite(const std::string& path);
std::vector<TestCase> parse_suite(std::string_view jsonl);

/// 1 - C(n-c, k) / C(n, k). Exact integer binomials when they fit in a
/// double's mantissa, otherwise the product 1 - prod_{i<k} (n-c-i)/(n-i).
double pass_at_k(std::int64_t n, std::int64_t c, std::int64_t k);

/// {1, 5, 10} when samples_n >= 10, otherwise {1}.
std::vector<int> reported_k(int samples_n);

struct CaseResult {
    std::string id;
    Category category = Category::basic;
    int n = 0;
    int c = 0;
    int syntactic_ok = 0;
    std::vector<orchestrator::Verdict> verdicts;
    std::map<int, double> pass_at_k;
    std::optional<orchestrator::TaskError> error;
};

struct SuiteReport {
    std::string strategy;
    std::map<Category, int> category_counts;
    double syntactic_accuracy = 0;
    double semantic_accuracy = 0;
    std::map<int, double> pass_at_k;
    int samples_n = 1;
    std::uint64_t seed = 0;
    int failed_cases = 0;
    std::vector<CaseResult> cases;
};

nlohmann::json to_json(const SuiteReport& r);
SuiteReport suite_report_from_json(const nlohmann::json& j);

/// Draws samples_n pass-1 completions per case and classifies each one.
/// Cases are independent and may run concurrently; a case that hits an
/// infrastructure error is recorded with the error and left out of the
/// accuracy and pass@k aggregates.
SuiteReport run_suite(const std::vector<TestCase>& suite, const orchestrator::Pipeline& pipeline, std::uint64_t seed);

struct ProportionReport {
    std::map<Category, int> counts;
    std::map<Category, double> fractions;
    std::vector<std::string> warnings;
};

/// Target shares of the basic / intermediate / advanced tiers.
inline const std::map<Category, double> target_proportions = {
    {Category::basic, 0.47}, {Category::intermediate, 0.24}, {Category::advanced, 0.29}};
inline constexpr double proportion_tolerance = 0.02;

ProportionReport validate_suite(const std::vector<TestCase>& suite);

/// Backend that answers every case with its reference solution.
std::shared_ptr<backend::ScriptedBackend> reference_backend(const std::vector<TestCase>& suite);

std::string render_table(const std::vector<SuiteReport>& reports);
/// Grouped bars of syntactic and semantic accuracy per report.
std::string render_svg(const std::vector<SuiteReport>& reports);

} // namespace qforge::evalsuite
