#include "qforge/evalsuite/suite.hpp"

#include "qforge/error.hpp"
#include "qforge/parallel.hpp"
#include "qforge/prompting/prompts.hpp"
#include "qforge/text.hpp"

#include <cmath>
#include <cstdio>
#include <set>

namespace qforge::evalsuite {

using orchestrator::Verdict;

void to_json(nlohmann::json& j, const TestCase& t) {
    j = {{"id", t.id}, {"prompt", t.prompt}, {"category", to_string(t.category)}, {"checker", t.checker}};
    if (t.reference_solution) j["reference_solution"] = *t.reference_solution;
}

void from_json(const nlohmann::json& j, TestCase& t) {
    t.id = j.at("id").get<std::string>();
    t.prompt = j.at("prompt").get<std::string>();
    t.category = category_from_string(j.at("category").get<std::string>());
    if (!j.contains("checker")) throw Error(ErrorCode::invalid_config, "test case " + t.id + " has no checker");
    t.checker = j.at("checker").get<CheckerSpec>();
    t.reference_solution.reset();
    if (j.contains("reference_solution") && !j.at("reference_solution").is_null()) {
        t.reference_solution = j.at("reference_solution").get<std::string>();
    }
    if (t.id.empty() || t.prompt.empty()) throw Error(ErrorCode::invalid_config, "test case needs an id and a prompt");
}

std::vector<TestCase> parse_suite(std::string_view jsonl) {
    std::vector<TestCase> suite;
    std::set<std::string> ids;
    std::size_t line_no = 0;
    for (const auto line : text::split_lines(jsonl)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            auto t = nlohmann::json::parse(line).get<TestCase>();
            if (!ids.insert(t.id).second) throw Error(ErrorCode::invalid_config, "duplicate id " + t.id);
            suite.push_back(std::move(t));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::invalid_config, "suite line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(e.code(), "suite line " + std::to_string(line_no) + ": " + e.detail());
        }
    }
    return suite;
}

std::vector<TestCase> load_suite(const std::string& path) { return parse_suite(text::read_file(path)); }

namespace {

// C(n, k) if it is below 2^53, so that it converts to double exactly.
std::optional<std::uint64_t> exact_binomial(std::int64_t n, std::int64_t k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 c = 1;
    for (std::int64_t i = 0; i < k; ++i) {
        c = c * static_cast<unsigned __int128>(n - i) / static_cast<unsigned __int128>(i + 1);
        if (c > (static_cast<unsigned __int128>(1) << 53)) return std::nullopt;
    }
    return static_cast<std::uint64_t>(c);
}

} // namespace

double pass_at_k(std::int64_t n, std::int64_t c, std::int64_t k) {
    if (n < 1 || c < 0 || c > n || k < 1 || k > n) {
        throw Error(ErrorCode::invalid_args, "pass@k needs 0 <= c <= n and 1 <= k <= n (got n=" + std::to_string(n) +
                                                 ", c=" + std::to_string(c) + ", k=" + std::to_string(k) + ")");
    }
    if (n - c < k) return 1.0;
    const auto total = exact_binomial(n, k);
    if (total) {
        const auto misses = *exact_binomial(n - c, k);
        return static_cast<double>(*total - misses) / static_cast<double>(*total);
    }
    double all_miss = 1.0;
    for (std::int64_t i = 0; i < k; ++i) all_miss *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
    return 1.0 - all_miss;
}

std::vector<int> reported_k(int samples_n) { return samples_n >= 10 ? std::vector<int>{1, 5, 10} : std::vector<int>{1}; }

SuiteReport run_suite(const std::vector<TestCase>& suite, const orchestrator::Pipeline& pipeline, std::uint64_t seed) {
    if (suite.empty()) throw Error(ErrorCode::no_tasks, "suite is empty");
    const auto& config = pipeline.config();
    SuiteReport report;
    report.strategy = std::string(orchestrator::to_string(config.strategy));
    report.samples_n = config.samples_n;
    report.seed = seed;
    report.cases.resize(suite.size());

    const auto workers = config.workers == 0 ? default_concurrency() : config.workers;
    parallel_for(suite.size(), workers, [&](std::size_t i) {
        const auto& tc = suite[i];
        auto& result = report.cases[i];
        result.id = tc.id;
        result.category = tc.category;
        try {
            const auto task = tc.task();
            backend::CompletionRequest request;
            request.prompt = pipeline.initial_prompt(task);
            request.params = config.sampling;
            request.params.n = config.samples_n;
            request.tag = tc.id;
            const auto response = pipeline.call_backend(request);
            for (const auto& completion : response.completions) {
                const auto [execution, check] = pipeline.evaluate(task, prompting::extract_code(completion));
                const auto verdict = orchestrator::classify_verdict(
                    execution, task.checker, check ? std::optional<bool>(check->passed) : std::nullopt);
                result.verdicts.push_back(verdict);
            }
            result.n = static_cast<int>(result.verdicts.size());
            for (auto v : result.verdicts) {
                result.c += v == Verdict::pass;
                result.syntactic_ok += v != Verdict::syntactic_fail;
            }
            for (int k : reported_k(config.samples_n)) result.pass_at_k[k] = pass_at_k(result.n, result.c, k);
        } catch (const Error& e) {
            result = CaseResult{tc.id, tc.category, 0, 0, 0, {}, {},
                                orchestrator::TaskError{std::string(qforge::to_string(e.code())), e.detail()}};
        }
    });

    long samples = 0, syntactic = 0, semantic = 0;
    int completed = 0;
    for (const auto& tc : suite) ++report.category_counts[tc.category];
    for (const auto& r : report.cases) {
        if (r.error) {
            ++report.failed_cases;
            continue;
        }
        ++completed;
        samples += r.n;
        syntactic += r.syntactic_ok;
        semantic += r.c;
        for (const auto& [k, v] : r.pass_at_k) report.pass_at_k[k] += v;
    }
    if (samples > 0) {
        report.syntactic_accuracy = static_cast<double>(syntactic) / static_cast<double>(samples);
        report.semantic_accuracy = static_cast<double>(semantic) / static_cast<double>(samples);
    }
    for (auto& [k, v] : report.pass_at_k) v /= completed;
    return report;
}

nlohmann::json to_json(const SuiteReport& r) {
    nlohmann::json counts = nlohmann::json::object();
    for (auto c : {Category::basic, Category::intermediate, Category::advanced}) {
        const auto it = r.category_counts.find(c);
        counts[std::string(to_string(c))] = it == r.category_counts.end() ? 0 : it->second;
    }
    auto k_map = [](const std::map<int, double>& m) {
        nlohmann::json j = nlohmann::json::object();
        for (const auto& [k, v] : m) j[std::to_string(k)] = v;
        return j;
    };
    nlohmann::json cases = nlohmann::json::array();
    for (const auto& c : r.cases) {
        nlohmann::json verdicts = nlohmann::json::array();
        for (auto v : c.verdicts) verdicts.push_back(orchestrator::to_string(v));
        nlohmann::json jc = {{"id", c.id},          {"category", to_string(c.category)}, {"n", c.n}, {"c", c.c},
                             {"syntactic_ok", c.syntactic_ok}, {"verdicts", verdicts},  {"pass_at_k", k_map(c.pass_at_k)}};
        if (c.error) jc["error"] = {{"code", c.error->code}, {"message", c.error->message}};
        cases.push_back(jc);
    }
    return {{"strategy", r.strategy},
            {"category_counts", counts},
            {"syntactic_accuracy", r.syntactic_accuracy},
            {"semantic_accuracy", r.semantic_accuracy},
            {"pass_at_k", k_map(r.pass_at_k)},
            {"samples_n", r.samples_n},
            {"seed", r.seed},
            {"failed_cases", r.failed_cases},
            {"cases", cases}};
}

SuiteReport suite_report_from_json(const nlohmann::json& j) {
    SuiteReport r;
    r.strategy = j.at("strategy").get<std::string>();
    for (const auto& [name, count] : j.at("category_counts").items()) {
        r.category_counts[category_from_string(name)] = count.get<int>();
    }
    r.syntactic_accuracy = j.at("syntactic_accuracy").get<double>();
    r.semantic_accuracy = j.at("semantic_accuracy").get<double>();
    for (const auto& [k, v] : j.at("pass_at_k").items()) r.pass_at_k[std::stoi(k)] = v.get<double>();
    r.samples_n = j.at("samples_n").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.failed_cases = j.value("failed_cases", 0);
    for (const auto& jc : j.value("cases", nlohmann::json::array())) {
        CaseResult c;
        c.id = jc.at("id").get<std::string>();
        c.category = category_from_string(jc.at("category").get<std::string>());
        c.n = jc.at("n").get<int>();
        c.c = jc.at("c").get<int>();
        c.syntactic_ok = jc.at("syntactic_ok").get<int>();
        for (const auto& v : jc.at("verdicts")) c.verdicts.push_back(orchestrator::verdict_from_string(v.get<std::string>()));
        for (const auto& [k, v] : jc.at("pass_at_k").items()) c.pass_at_k[std::stoi(k)] = v.get<double>();
        if (jc.contains("error")) {
            c.error = orchestrator::TaskError{jc["error"].at("code").get<std::string>(), jc["error"].at("message").get<std::string>()};
        }
        r.cases.push_back(std::move(c));
    }
    return r;
}

ProportionReport validate_suite(const std::vector<TestCase>& suite) {
    if (suite.empty()) throw Error(ErrorCode::no_tasks, "suite is empty");
    ProportionReport out;
    for (const auto& [category, target] : target_proportions) out.counts[category] = 0;
    for (const auto& tc : suite) ++out.counts[tc.category];
    for (const auto& [category, target] : target_proportions) {
        const double share = static_cast<double>(out.counts[category]) / static_cast<double>(suite.size());
        out.fractions[category] = share;
        if (std::abs(share - target) > proportion_tolerance + 1e-12) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s share is %.1f%%, expected %.0f%% +/- %.0f points",
                          std::string(to_string(category)).c_str(), 100 * share, 100 * target,
                          100 * proportion_tolerance);
            out.warnings.emplace_back(buf);
        }
    }
    return out;
}

std::shared_ptr<backend::ScriptedBackend> reference_backend(const std::vector<TestCase>& suite) {
    auto b = std::make_shared<backend::ScriptedBackend>();
    for (const auto& tc : suite) {
        if (!tc.reference_solution) {
            throw Error(ErrorCode::invalid_config, "case " + tc.id + " has no reference solution");
        }
        b->set(tc.id, 1, *tc.reference_solution);
    }
    return b;
}

std::string render_table(const std::vector<SuiteReport>& reports) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-10s %6s %9s %9s %8s %8s %8s\n", "strategy", "cases", "syntactic", "semantic",
                  "pass@1", "pass@5", "pass@10");
    out += buf;
    for (const auto& r : reports) {
        auto k = [&](int key) -> std::string {
            const auto it = r.pass_at_k.find(key);
            if (it == r.pass_at_k.end()) return "-";
            char b[32];
            std::snprintf(b, sizeof b, "%.3f", it->second);
            return b;
        };
        std::snprintf(buf, sizeof buf, "%-10s %6zu %8.1f%% %8.1f%% %8s %8s %8s\n", r.strategy.c_str(), r.cases.size(),
                      100 * r.syntactic_accuracy, 100 * r.semantic_accuracy, k(1).c_str(), k(5).c_str(),
                      k(10).c_str());
        out += buf;
    }
    return out;
}

std::string render_svg(const std::vector<SuiteReport>& reports) {
    const int group_w = 120, bar_w = 40, chart_h = 200, left = 50, top = 20;
    const int width = left + group_w * static_cast<int>(std::max<std::size_t>(reports.size(), 1)) + 20;
    const int height = top + chart_h + 60;
    std::string out;
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" font-family=\"sans-serif\" "
                  "font-size=\"12\">\n",
                  width, height);
    out += buf;
    for (int pct = 0; pct <= 100; pct += 25) {
        const int y = top + chart_h - pct * chart_h / 100;
        std::snprintf(buf, sizeof buf,
                      "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" stroke=\"#ddd\"/>\n"
                      "<text x=\"%d\" y=\"%d\" text-anchor=\"end\">%d%%</text>\n",
                      left, y, width - 10, y, left - 5, y + 4, pct);
        out += buf;
    }
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const int x0 = left + 10 + static_cast<int>(i) * group_w;
        const double values[2] = {reports[i].syntactic_accuracy, reports[i].semantic_accuracy};
        const char* colors[2] = {"#4c78a8", "#f58518"};
        for (int b = 0; b < 2; ++b) {
            const int h = static_cast<int>(std::lround(values[b] * chart_h));
            std::snprintf(buf, sizeof buf, "<rect x=\"%d\" y=\"%d\" width=\"%d\" height=\"%d\" fill=\"%s\"/>\n",
                          x0 + b * (bar_w + 5), top + chart_h - h, bar_w, h, colors[b]);
            out += buf;
        }
        std::snprintf(buf, sizeof buf, "<text x=\"%d\" y=\"%d\" text-anchor=\"middle\">%s</text>\n",
                      x0 + bar_w + 2, top + chart_h + 18, reports[i].strategy.c_str());
        out += buf;
    }
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%d\" y=\"%d\" width=\"10\" height=\"10\" fill=\"#4c78a8\"/>"
                  "<text x=\"%d\" y=\"%d\">syntactic</text>\n"
                  "<rect x=\"%d\" y=\"%d\" width=\"10\" height=\"10\" fill=\"#f58518\"/>"
                  "<text x=\"%d\" y=\"%d\">semantic</text>\n</svg>\n",
                  left, height - 22, left + 14, height - 13, left + 90, height - 22, left + 104, height - 13);
    out += buf;
    return out;
}

} // namespace qforge::evalsuite
