#include "qforge/error.hpp"
#include "qforge/evalsuite/suite.hpp"
#include "qforge/rng.hpp"
#include "qforge/text.hpp"

#include <doctest.h>

#include <cstdint>

using namespace qforge;
using namespace qforge::evalsuite;
using orchestrator::Pipeline;
using orchestrator::PipelineConfig;
using orchestrator::PipelineResources;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected qforge::Error");
    return ErrorCode::io_error;
}

// Fraction of k-subsets of n samples (the first c correct) containing a
// correct one, as an exact ratio of subset counts.
std::pair<std::uint64_t, std::uint64_t> enumerate_pass_at_k(int n, int c, int k) {
    std::uint64_t hit = 0, total = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != k) continue;
        ++total;
        if (mask & ((1u << c) - 1)) ++hit;
    }
    return {hit, total};
}

PipelineConfig stub_config(int samples_n = 1) {
    PipelineConfig c;
    c.backend = "scripted";
    c.samples_n = samples_n;
    c.executor.command = {QFORGE_STUB_RUNNER, "{file}", "--timeout", "{timeout}"};
    c.executor.timeout_s = 5;
    c.executor.file_name = "candidate.sh";
    c.workers = 2;
    return c;
}

Pipeline make_pipeline(const PipelineConfig& config, std::shared_ptr<backend::Backend> b) {
    PipelineResources r;
    r.backend = std::move(b);
    r.executor = std::make_shared<sandbox::ProcessExecutor>(config.executor);
    return Pipeline(config, std::move(r));
}

std::vector<TestCase> shell_suite() { return load_suite(std::string(QFORGE_SOURCE_DIR) + "/tests/fixtures/shell_suite.jsonl"); }

} // namespace

TEST_CASE("pass@k spot values") {
    CHECK(pass_at_k(10, 10, 3) == 1.0);
    CHECK(pass_at_k(10, 0, 5) == 0.0);
    CHECK(std::abs(pass_at_k(5, 2, 1) - 0.4) < 1e-12);
    CHECK(std::abs(pass_at_k(3, 1, 2) - 2.0 / 3.0) < 1e-12);
}

TEST_CASE("pass@k equals subset enumeration for n <= 8") {
    for (int n = 1; n <= 8; ++n) {
        for (int c = 0; c <= n; ++c) {
            for (int k = 1; k <= n; ++k) {
                const auto [hit, total] = enumerate_pass_at_k(n, c, k);
                CAPTURE(n);
                CAPTURE(c);
                CAPTURE(k);
                CHECK(pass_at_k(n, c, k) == static_cast<double>(hit) / static_cast<double>(total));
            }
        }
    }
}

TEST_CASE("pass@k is monotone in k and c") {
    Rng rng(2024);
    for (int trial = 0; trial < 5000; ++trial) {
        const auto n = static_cast<std::int64_t>(1 + rng.below(400));
        const auto c = static_cast<std::int64_t>(rng.below(n + 1));
        const auto k = static_cast<std::int64_t>(1 + rng.below(n));
        const double p = pass_at_k(n, c, k);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        if (k < n) CHECK(pass_at_k(n, c, k + 1) >= p);
        if (c < n) CHECK(pass_at_k(n, c + 1, k) >= p);
    }
}

TEST_CASE("pass@k at large n") {
    // 1 - C(n-1, k)/C(n, k) = k/n.
    CHECK(pass_at_k(10000, 1, 5000) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pass_at_k(10000, 1, 1) == doctest::Approx(1e-4).epsilon(1e-12));
    const double p = pass_at_k(10000, 37, 100);
    double miss = 1.0;
    for (int i = 0; i < 100; ++i) miss *= (10000.0 - 37 - i) / (10000.0 - i);
    CHECK(p == doctest::Approx(1 - miss).epsilon(1e-12));
    CHECK(std::isfinite(pass_at_k(10000, 5000, 5000)));
}

TEST_CASE("pass@k argument checks") {
    CHECK(code_of([] { pass_at_k(5, 6, 1); }) == ErrorCode::invalid_args);
    CHECK(code_of([] { pass_at_k(5, -1, 1); }) == ErrorCode::invalid_args);
    CHECK(code_of([] { pass_at_k(5, 2, 0); }) == ErrorCode::invalid_args);
    CHECK(code_of([] { pass_at_k(5, 2, 6); }) == ErrorCode::invalid_args);
    CHECK(code_of([] { pass_at_k(0, 0, 1); }) == ErrorCode::invalid_args);
}

TEST_CASE("reported k values") {
    CHECK(reported_k(1) == std::vector<int>{1});
    CHECK(reported_k(9) == std::vector<int>{1});
    CHECK(reported_k(10) == std::vector<int>{1, 5, 10});
    CHECK(reported_k(20) == std::vector<int>{1, 5, 10});
}

TEST_CASE("shipped suite proportions") {
    const auto suite = load_suite(std::string(QFORGE_SOURCE_DIR) + "/data/suite/default.jsonl");
    CHECK(suite.size() == 17);
    const auto report = validate_suite(suite);
    CHECK(report.counts.at(Category::basic) == 8);
    CHECK(report.counts.at(Category::intermediate) == 4);
    CHECK(report.counts.at(Category::advanced) == 5);
    for (const auto& [category, target] : target_proportions) {
        CHECK(std::abs(report.fractions.at(category) - target) <= proportion_tolerance);
    }
    CHECK(report.warnings.empty());
    for (const auto& tc : suite) {
        CHECK(tc.reference_solution);
        CHECK(tc.reference_solution->find("qiskit") != std::string::npos);
    }
}

TEST_CASE("validate_suite warnings and errors") {
    TestCase one{"b", "p", Category::basic, {CheckerKind::exact_stdout, "x"}, std::nullopt};
    const auto r = validate_suite({one});
    CHECK(r.fractions.at(Category::basic) == 1.0);
    CHECK(r.fractions.at(Category::intermediate) == 0.0);
    CHECK(r.warnings.size() == 3);
    CHECK(code_of([] { validate_suite({}); }) == ErrorCode::no_tasks);
}

TEST_CASE("suite parsing") {
    const auto suite = parse_suite(
        "{\"id\":\"a\",\"prompt\":\"p\",\"category\":\"advanced\",\"checker\":{\"kind\":\"contains_stdout\",\"payload\":\"x\"}}\n\n");
    REQUIRE(suite.size() == 1);
    CHECK(suite[0].category == Category::advanced);
    CHECK_FALSE(suite[0].reference_solution);
    CHECK(nlohmann::json(suite[0]).dump() ==
          "{\"category\":\"advanced\",\"checker\":{\"kind\":\"contains_stdout\",\"payload\":\"x\"},\"id\":\"a\",\"prompt\":\"p\"}");

    const std::string line = "{\"id\":\"a\",\"prompt\":\"p\",\"category\":\"basic\",\"checker\":{\"kind\":\"exact_stdout\",\"payload\":\"x\"}}\n";
    CHECK(code_of([&] { parse_suite(line + line); }) == ErrorCode::invalid_config);
    CHECK(code_of([] { parse_suite("{\"id\":\"a\",\"prompt\":\"p\",\"category\":\"basic\"}"); }) == ErrorCode::invalid_config);
    CHECK(code_of([] { parse_suite("{\"id\":\"a\",\"prompt\":\"p\",\"category\":\"expert\",\"checker\":{\"kind\":\"exact_stdout\",\"payload\":\"x\"}}"); }) ==
          ErrorCode::invalid_config);
    CHECK(code_of([] { parse_suite("{\"id\":\"a\",\"prompt\":\"p\",\"category\":\"basic\",\"checker\":{\"kind\":\"exact_stdout\",\"payload\":\"\"}}"); }) ==
          ErrorCode::invalid_config);
    CHECK(code_of([] { parse_suite("not json"); }) == ErrorCode::invalid_config);
}

TEST_CASE("run_suite with reference solutions passes everything") {
    const auto suite = shell_suite();
    const auto report = run_suite(suite, make_pipeline(stub_config(), reference_backend(suite)), 42);
    CHECK(report.syntactic_accuracy == 1.0);
    CHECK(report.semantic_accuracy == 1.0);
    CHECK(report.pass_at_k.at(1) == 1.0);
    CHECK(report.failed_cases == 0);
    CHECK(report.seed == 42);
    CHECK(report.category_counts.at(Category::basic) == 2);
    CHECK(report.cases.size() == suite.size());
    for (std::size_t i = 0; i < suite.size(); ++i) CHECK(report.cases[i].id == suite[i].id);
}

TEST_CASE("run_suite where every sample runs but fails its checker") {
    const auto suite = shell_suite();
    auto b = std::make_shared<backend::ScriptedBackend>();
    b->set("*", 1, "echo wrong answer\n");
    const auto report = run_suite(suite, make_pipeline(stub_config(3), b), 42);
    CHECK(report.syntactic_accuracy == 1.0);
    CHECK(report.semantic_accuracy == 0.0);
    CHECK(report.pass_at_k.at(1) == 0.0);
}

TEST_CASE("run_suite with a mixed script") {
    TestCase tc{"mix", "Print ok.", Category::intermediate, {CheckerKind::exact_stdout, "ok"}, std::nullopt};
    auto b = std::make_shared<backend::ScriptedBackend>();
    b->set("mix", 1, std::vector<std::string>{"echo ok\n", "echo no\n", "echo ok\n", "exit 3\n"});
    const auto report = run_suite({tc}, make_pipeline(stub_config(4), b), 1);
    const auto& c = report.cases.at(0);
    CHECK(c.n == 4);
    CHECK(c.c == 2);
    CHECK(c.syntactic_ok == 3);
    CHECK(c.pass_at_k.at(1) == pass_at_k(4, 2, 1));
    CHECK(c.pass_at_k.at(1) == 0.5);
    CHECK(report.syntactic_accuracy == 0.75);
    CHECK(report.semantic_accuracy == 0.5);
}

TEST_CASE("semantic accuracy never exceeds syntactic accuracy") {
    const auto suite = shell_suite();
    const std::vector<std::string> pool = {"echo hello\n", "echo 1 2 3\n", "QUBITS=5\n", "exit 1\n",
                                           "echo nope\n", "for i in 1 2 3 4; do echo $((i * i)); done\n"};
    Rng rng(8);
    for (int trial = 0; trial < 4; ++trial) {
        auto b = std::make_shared<backend::ScriptedBackend>();
        for (const auto& tc : suite) {
            std::vector<std::string> candidates;
            for (int s = 0; s < 10; ++s) candidates.push_back(pool[rng.below(pool.size())]);
            b->set(tc.id, 1, candidates);
        }
        auto config = stub_config(10);
        const auto report = run_suite(suite, make_pipeline(config, b), 42);
        CHECK(report.semantic_accuracy <= report.syntactic_accuracy);
        CHECK(report.pass_at_k.size() == 3);
        CHECK(report.pass_at_k.at(1) <= report.pass_at_k.at(5));
        CHECK(report.pass_at_k.at(5) <= report.pass_at_k.at(10));
        const auto back = suite_report_from_json(to_json(report));
        CHECK(to_json(back) == to_json(report));
    }
}

TEST_CASE("per-case infrastructure errors are isolated") {
    const auto suite = shell_suite();
    auto b = reference_backend(suite);
    b->fail("sh_count", ErrorCode::transport_error);
    const auto report = run_suite(suite, make_pipeline(stub_config(), b), 42);
    CHECK(report.failed_cases == 1);
    REQUIRE(report.cases[1].error);
    CHECK(report.cases[1].error->code == "backend_unreachable");
    CHECK(report.semantic_accuracy == 1.0);
    CHECK(code_of([&] { run_suite({}, make_pipeline(stub_config(), b), 42); }) == ErrorCode::no_tasks);
}

TEST_CASE("rendering") {
    SuiteReport a;
    a.strategy = "plain";
    a.syntactic_accuracy = 0.5;
    a.semantic_accuracy = 0.25;
    a.pass_at_k = {{1, 0.25}};
    SuiteReport b = a;
    b.strategy = "rag";
    b.pass_at_k = {{1, 0.5}, {5, 0.75}, {10, 0.875}};
    const auto table = render_table({a, b});
    CHECK(table.find("plain") != std::string::npos);
    CHECK(table.find("50.0%") != std::string::npos);
    CHECK(table.find("0.875") != std::string::npos);
    const auto svg = render_svg({a, b});
    CHECK(text::starts_with(svg, "<svg"));
    CHECK(text::count_occurrences(svg, "<rect") == 6);
    CHECK(svg.find("height=\"100\"") != std::string::npos);  // 50% of a 200px axis
}

TEST_CASE("reference backend needs solutions") {
    TestCase tc{"x", "p", Category::basic, {CheckerKind::exact_stdout, "x"}, std::nullopt};
    CHECK(code_of([&] { reference_backend({tc}); }) == ErrorCode::invalid_config);
}
