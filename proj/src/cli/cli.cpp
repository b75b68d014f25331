#include "qforge/cli/cli.hpp"

#include "qforge/backend/cassette.hpp"
#include "qforge/backend/http.hpp"
#include "qforge/backend/scripted.hpp"
#include "qforge/dataprep/dataprep.hpp"
#include "qforge/orchestrator/pipeline.hpp"
#include "qforge/prompting/exemplar.hpp"
#include "qforge/qec/decoder.hpp"
#include "qforge/qec/estimator.hpp"
#include "qforge/qec/layout.hpp"
#include "qforge/qec/topology.hpp"
#include "qforge/rag/rag.hpp"
#include "qforge/rng.hpp"
#include "qforge/sandbox/executor.hpp"
#include "qforge/text.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace qforge::cli {

using nlohmann::json;

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::backend_unreachable:
    case ErrorCode::executor_failure:
    case ErrorCode::index_missing:
    case ErrorCode::transport_error:
    case ErrorCode::auth_error:
    case ErrorCode::cassette_miss:
    case ErrorCode::malformed_response:
    case ErrorCode::io_error:
        return exit_infrastructure;
    default:
        return exit_usage;
    }
}

std::shared_ptr<backend::Backend> make_backend(const std::string& spec, const std::vector<evalsuite::TestCase>* suite) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "scripted") {
        if (arg == "allpass") {
            if (!suite) throw Error(ErrorCode::invalid_config, "scripted:allpass needs a suite");
            return evalsuite::reference_backend(*suite);
        }
        if (arg.empty()) throw Error(ErrorCode::invalid_config, "scripted backend needs a script file");
        json script;
        try {
            script = json::parse(text::read_file(arg));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::invalid_config, "script " + arg + ": " + e.what());
        }
        return backend::ScriptedBackend::from_json(script);
    }
    if (kind == "http" && arg.empty()) {
        return std::make_shared<backend::HttpBackend>(backend::HttpBackendConfig::from_env());
    }
    if (kind == "record" && !arg.empty()) {
        auto inner = std::make_shared<backend::HttpBackend>(backend::HttpBackendConfig::from_env());
        return std::make_shared<backend::CassetteBackend>(inner, arg, backend::CassetteMode::record);
    }
    if (kind == "replay" && !arg.empty()) {
        return std::make_shared<backend::CassetteBackend>(nullptr, arg, backend::CassetteMode::replay);
    }
    throw Error(ErrorCode::invalid_config, "unknown backend '" + spec + "'");
}

std::string render_histograms_svg(const std::vector<std::pair<std::string, qec::Histogram>>& panels) {
    constexpr int panel_w = 260, panel_h = 220, axis_h = 150, top = 30;
    std::uint64_t max_count = 1;
    for (const auto& [name, h] : panels) {
        for (const auto& [bits, count] : h) max_count = std::max(max_count, count);
    }
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << panel_w * static_cast<int>(panels.size())
      << "\" height=\"" << panel_h << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& [name, h] = panels[p];
        const int x0 = static_cast<int>(p) * panel_w;
        s << "<text x=\"" << x0 + panel_w / 2 << "\" y=\"16\" text-anchor=\"middle\" font-size=\"12\">" << name
          << "</text>\n";
        const int bars = std::max<int>(1, static_cast<int>(h.size()));
        const int bar_w = std::max(4, (panel_w - 40) / bars - 4);
        int i = 0;
        for (const auto& [bits, count] : h) {
            const int height = static_cast<int>(static_cast<double>(axis_h) * static_cast<double>(count) /
                                                static_cast<double>(max_count) + 0.5);
            const int x = x0 + 20 + i * (bar_w + 4);
            s << "<rect x=\"" << x << "\" y=\"" << top + axis_h - height << "\" width=\"" << bar_w << "\" height=\""
              << height << "\" fill=\"#4472c4\"/>\n";
            s << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << top + axis_h + 12 << "\" text-anchor=\"middle\""
              << " transform=\"rotate(60 " << x + bar_w / 2 << " " << top + axis_h + 12 << ")\">" << bits << "</text>\n";
            ++i;
        }
    }
    s << "</svg>\n";
    return s.str();
}

namespace {

struct Globals {
    std::uint64_t seed = default_seed;
    std::string config_path;
    int verbose = 0;
    std::string out_path;
    bool omit_timing = false;
    json config = json::object();
    CLI::Option* seed_opt = nullptr;
    CLI::Option* omit_opt = nullptr;
};

class Context {
public:
    Context(Globals& g, std::ostream& out, std::ostream& err) : g_(g), out_(out), err_(err) {}

    void log(const std::string& msg) const {
        if (g_.verbose > 0) err_ << "[qforge] " << msg << "\n";
    }

    /// JSON to --out with `human` on stdout, or the JSON itself on stdout.
    void emit(const json& j, const std::string& human) const {
        if (g_.out_path.empty()) {
            out_ << j.dump(2) << "\n";
            return;
        }
        text::write_file(g_.out_path, j.dump(2) + "\n");
        out_ << human;
        if (!human.empty() && human.back() != '\n') out_ << "\n";
    }

    void emit_lines(const std::string& jsonl, const std::string& human) const {
        if (g_.out_path.empty()) {
            out_ << jsonl;
            return;
        }
        text::write_file(g_.out_path, jsonl);
        out_ << human << "\n";
    }

    /// Value from the config file section `section.key` unless the flag was given.
    template <typename T>
    void merge(const CLI::Option* opt, const char* section, const char* key, T& value) const {
        if (opt && opt->count() > 0) return;
        const json* node = &g_.config;
        if (section) {
            if (!node->contains(section)) return;
            node = &(*node)[section];
        }
        if (!node->is_object() || !node->contains(key)) return;
        try {
            value = (*node)[key].get<T>();
        } catch (const json::exception& e) {
            throw Error(ErrorCode::invalid_config, std::string("config key ") + (section ? section : "") + "." + key +
                                                       ": " + e.what());
        }
    }

    Globals& g() const { return g_; }

private:
    Globals& g_;
    std::ostream& out_;
    std::ostream& err_;
};

std::string format_fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// ---- pipeline commands -----------------------------------------------------

struct PipelineFlags {
    std::string backend = "http";
    std::string strategy = "plain";
    int passes = 3;
    int samples = 1;
    std::size_t k = 0;
    std::string runner;
    double timeout = 30.0;
    std::size_t workers = 0;
    std::string index = default_index_path;
    std::string exemplars = default_exemplar_path;
    std::map<std::string, CLI::Option*> opts;
};

void add_pipeline_options(CLI::App* app, PipelineFlags& f) {
    f.opts["backend"] = app->add_option("--backend", f.backend, "scripted:allpass | scripted:<file> | http | record:<file> | replay:<file>");
    f.opts["strategy"] = app->add_option("--strategy", f.strategy, "plain | cot | scot | rag")
                             ->check(CLI::IsMember({"plain", "cot", "scot", "rag"}));
    f.opts["passes"] = app->add_option("--passes", f.passes, "Pass budget")->check(CLI::PositiveNumber);
    f.opts["samples"] = app->add_option("--samples", f.samples, "Completions per case")->check(CLI::PositiveNumber);
    f.opts["k"] = app->add_option("--k", f.k, "Retrieved chunks for the rag strategy (default 4)");
    f.opts["runner"] = app->add_option("--runner", f.runner, "Runner command template, e.g. \"qforge-runner {file} --timeout {timeout}\"");
    f.opts["timeout"] = app->add_option("--timeout", f.timeout, "Execution time limit in seconds")->check(CLI::PositiveNumber);
    f.opts["workers"] = app->add_option("--workers", f.workers, "Concurrent tasks (0 = CPUs)");
    f.opts["index"] = app->add_option("--index", f.index, "Vector index for the rag strategy");
    f.opts["exemplars"] = app->add_option("--exemplars", f.exemplars, "Exemplar root holding cot/ and scot/");
}

orchestrator::PipelineConfig pipeline_config(const Context& ctx, PipelineFlags& f) {
    orchestrator::PipelineConfig config;
    if (ctx.g().config.contains("pipeline")) {
        try {
            orchestrator::from_json(ctx.g().config["pipeline"], config);
        } catch (const json::exception& e) {
            throw Error(ErrorCode::invalid_config, std::string("config pipeline: ") + e.what());
        }
    }
    ctx.merge(f.opts["index"], "paths", "index", f.index);
    ctx.merge(f.opts["exemplars"], "paths", "exemplars", f.exemplars);
    if (f.opts["backend"]->count()) config.backend = f.backend;
    if (f.opts["strategy"]->count()) config.strategy = orchestrator::strategy_from_string(f.strategy);
    if (f.opts["passes"]->count()) config.max_passes = f.passes;
    if (f.opts["samples"]->count()) config.samples_n = f.samples;
    if (f.opts["k"]->count()) config.retrieval_k = f.k;
    if (f.opts["timeout"]->count()) config.executor.timeout_s = f.timeout;
    if (f.opts["workers"]->count()) config.workers = f.workers;
    if (f.opts["runner"]->count()) {
        std::vector<std::string> argv;
        std::istringstream words(f.runner);
        for (std::string w; words >> w;) argv.push_back(w);
        config.executor.command = argv;
    }
    if (config.strategy == orchestrator::Strategy::rag && config.retrieval_k == 0) config.retrieval_k = rag::default_k;
    return config;
}

orchestrator::Pipeline build_pipeline(const Context& ctx, const orchestrator::PipelineConfig& config,
                                      const PipelineFlags& f, const std::vector<evalsuite::TestCase>* suite) {
    orchestrator::PipelineResources r;
    r.backend = make_backend(config.backend, suite);
    r.executor = std::make_shared<sandbox::ProcessExecutor>(config.executor);
    using orchestrator::Strategy;
    if (config.strategy == Strategy::rag) {
        std::error_code ec;
        if (!std::filesystem::exists(f.index, ec)) {
            throw Error(ErrorCode::index_missing, "no index at " + f.index + " (run `qforge rag index` first)");
        }
        auto index = std::make_shared<rag::VectorIndex>(rag::VectorIndex::load(f.index));
        r.embedder = std::make_shared<rag::HashedBagOfWords>(index->dimension);
        r.index = std::move(index);
    }
    if (config.strategy == Strategy::cot || config.strategy == Strategy::scot) {
        r.exemplars = prompting::load_exemplar_store(f.exemplars + "/" + std::string(orchestrator::to_string(config.strategy)));
    }
    ctx.log("backend " + r.backend->id() + ", strategy " + std::string(orchestrator::to_string(config.strategy)));
    return orchestrator::Pipeline(config, std::move(r));
}

struct GenerateFlags {
    PipelineFlags pipeline;
    std::string prompt;
    std::string task_path;
    std::string suite;
    std::string case_id;
    std::string id = "task";
};

int cmd_generate(const Context& ctx, GenerateFlags& f) {
    const auto config = pipeline_config(ctx, f.pipeline);
    std::vector<evalsuite::TestCase> suite;
    GenerationTask task;
    if (!f.case_id.empty()) {
        if (f.suite.empty()) f.suite = default_suite_path;
        suite = evalsuite::load_suite(f.suite);
        const auto it = std::find_if(suite.begin(), suite.end(), [&](const auto& c) { return c.id == f.case_id; });
        if (it == suite.end()) throw Error(ErrorCode::invalid_config, "no case '" + f.case_id + "' in " + f.suite);
        task = it->task();
    } else if (!f.task_path.empty()) {
        try {
            task = json::parse(text::read_file(f.task_path)).get<GenerationTask>();
        } catch (const json::exception& e) {
            throw Error(ErrorCode::invalid_config, "task " + f.task_path + ": " + e.what());
        }
    } else if (!f.prompt.empty()) {
        task.id = f.id;
        task.prompt = f.prompt;
    } else {
        throw Error(ErrorCode::invalid_config, "generate needs --prompt, --task or --case");
    }
    const auto pipeline = build_pipeline(ctx, config, f.pipeline, suite.empty() ? nullptr : &suite);
    const auto report = pipeline.run_task(task);
    orchestrator::ReportOptions options;
    options.include_timing = !ctx.g().omit_timing;
    std::string human = "task " + report.task_id + ": " + std::string(orchestrator::to_string(report.final_verdict)) +
                        " after " + std::to_string(report.passes_used) + " pass(es)\n";
    if (!report.attempts.empty()) human += report.attempts.back().code;
    ctx.emit(orchestrator::to_json(report, options), human);
    return exit_ok;
}

struct EvalFlags {
    PipelineFlags pipeline;
    std::string suite = default_suite_path;
    CLI::Option* suite_opt = nullptr;
};

int cmd_eval(const Context& ctx, EvalFlags& f) {
    ctx.merge(f.suite_opt, "paths", "suite", f.suite);
    const auto config = pipeline_config(ctx, f.pipeline);
    const auto suite = evalsuite::load_suite(f.suite);
    for (const auto& w : evalsuite::validate_suite(suite).warnings) ctx.log("warning: " + w);
    const auto pipeline = build_pipeline(ctx, config, f.pipeline, &suite);
    const auto start = std::chrono::steady_clock::now();
    const auto report = evalsuite::run_suite(suite, pipeline, ctx.g().seed);
    ctx.log("evaluated " + std::to_string(suite.size()) + " cases in " +
            std::to_string(std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count()) +
            " ms");
    ctx.emit(evalsuite::to_json(report), evalsuite::render_table({report}));
    return exit_ok;
}

// ---- rag -------------------------------------------------------------------

struct RagFlags {
    std::string corpus = default_corpus_path;
    std::string index = default_index_path;
    std::size_t chunk_size = rag::default_chunk_size;
    std::size_t overlap = rag::default_overlap;
    std::size_t dimension = 512;
    std::string query;
    std::size_t k = rag::default_k;
    CLI::Option* corpus_opt = nullptr;
    CLI::Option* index_opt = nullptr;
    CLI::Option* query_index_opt = nullptr;
};

int cmd_rag_index(const Context& ctx, RagFlags& f) {
    ctx.merge(f.corpus_opt, "paths", "corpus", f.corpus);
    ctx.merge(f.index_opt, "paths", "index", f.index);
    const auto docs = rag::load_documents(f.corpus);
    const rag::HashedBagOfWords embedder(f.dimension);
    const auto index = rag::VectorIndex::build(docs, embedder, f.chunk_size, f.overlap);
    index.save(f.index);
    const json j = {{"index", f.index},
                    {"documents", docs.size()},
                    {"chunks", index.chunks.size()},
                    {"dimension", index.dimension},
                    {"embedder", index.embedder_id},
                    {"chunk_size", f.chunk_size},
                    {"overlap", f.overlap}};
    ctx.emit(j, "indexed " + std::to_string(docs.size()) + " documents into " + std::to_string(index.chunks.size()) +
                    " chunks at " + f.index);
    return exit_ok;
}

int cmd_rag_query(const Context& ctx, RagFlags& f) {
    ctx.merge(f.query_index_opt, "paths", "index", f.index);
    std::error_code ec;
    if (!std::filesystem::exists(f.index, ec)) throw Error(ErrorCode::index_missing, "no index at " + f.index);
    const auto index = rag::VectorIndex::load(f.index);
    const rag::HashedBagOfWords embedder(index.dimension);
    const auto hits = rag::retrieve(index, f.query, f.k, embedder);
    json results = json::array();
    std::string human;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        const auto& h = hits[i];
        results.push_back({{"rank", i + 1},
                           {"id", h.chunk.id},
                           {"source", h.chunk.source},
                           {"corpus", rag::to_string(h.chunk.corpus)},
                           {"score", h.score},
                           {"text", h.chunk.text}});
        human += std::to_string(i + 1) + ". " + format_fixed(h.score, 4) + "  " + h.chunk.source + " #" +
                 std::to_string(h.chunk.id) + "\n";
    }
    ctx.emit({{"query", f.query}, {"k", f.k}, {"results", results}}, human);
    return exit_ok;
}

// ---- dataprep --------------------------------------------------------------

struct DataprepFlags {
    std::string corpus;
    std::string metadata;
    std::string cutoff = dataprep::format_date(dataprep::default_cutoff);
    std::string pattern = dataprep::default_import_pattern;
    std::string in;
    std::size_t chunk_tokens = 1024;
    double rate = 0.1;
    std::size_t target = 0;
    double official_weight = dataprep::default_official_weight;
    CLI::Option* corpus_opt = nullptr;
};

std::string to_jsonl(const std::vector<json>& rows) {
    std::string out;
    for (const auto& r : rows) out += r.dump() + "\n";
    return out;
}

std::string chunks_jsonl(const std::vector<dataprep::TrainChunk>& chunks) {
    std::vector<json> rows(chunks.begin(), chunks.end());
    return to_jsonl(rows);
}

int cmd_dataprep_filter(const Context& ctx, DataprepFlags& f) {
    ctx.merge(f.corpus_opt, "paths", "training_corpus", f.corpus);
    if (f.corpus.empty()) throw Error(ErrorCode::invalid_config, "dataprep filter needs --corpus");
    const auto files = dataprep::load_corpus(f.corpus, f.metadata);
    const auto kept = dataprep::filter_corpus(files, dataprep::parse_date(f.cutoff), f.pattern);
    std::vector<json> rows(kept.begin(), kept.end());
    ctx.emit_lines(to_jsonl(rows), "kept " + std::to_string(kept.size()) + " of " + std::to_string(files.size()) +
                                       " files updated after " + f.cutoff);
    return exit_ok;
}

int cmd_dataprep_split(const Context& ctx, DataprepFlags& f) {
    std::vector<dataprep::CorpusFile> files;
    const auto contents = text::read_file(f.in);
    std::size_t line_no = 0;
    for (const auto line : text::split_lines(contents)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            files.push_back(json::parse(line).get<dataprep::CorpusFile>());
        } catch (const json::exception& e) {
            throw Error(ErrorCode::invalid_config, f.in + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    const auto chunks = dataprep::make_chunks(files, f.chunk_tokens);
    ctx.emit_lines(chunks_jsonl(chunks), "split " + std::to_string(files.size()) + " files into " +
                                             std::to_string(chunks.size()) + " chunks (" +
                                             std::to_string(dataprep::count_tokens(chunks)) + " tokens)");
    return exit_ok;
}

int cmd_dataprep_fim(const Context& ctx, DataprepFlags& f) {
    const auto chunks = dataprep::read_chunks_jsonl(f.in);
    const auto out = dataprep::fim_transform_all(chunks, ctx.g().seed, f.rate);
    const auto applied = std::count_if(out.begin(), out.end(), [](const auto& c) { return c.fim_applied; });
    ctx.emit_lines(chunks_jsonl(out), "FIM applied to " + std::to_string(applied) + " of " +
                                          std::to_string(out.size()) + " chunks");
    return exit_ok;
}

int cmd_dataprep_upsample(const Context& ctx, DataprepFlags& f) {
    const auto chunks = dataprep::read_chunks_jsonl(f.in);
    auto rng = Rng::substream(ctx.g().seed, "dataprep.upsample");
    const auto out = dataprep::upsample(chunks, f.official_weight, f.target, rng);
    ctx.emit_lines(chunks_jsonl(out), "upsampled " + std::to_string(dataprep::count_tokens(chunks)) + " to " +
                                          std::to_string(dataprep::count_tokens(out)) + " tokens (" +
                                          std::to_string(out.size()) + " chunks)");
    return exit_ok;
}

// ---- qec -------------------------------------------------------------------

struct QecFlags {
    int d = 3;
    double p = 0.001;
    double q = 0.0;
    std::size_t rounds = 0;
    std::size_t trials = 10000;
    std::size_t threads = 0;
    std::string history;
    int space_weight = 1;
    int time_weight = 1;
    bool no_fallback = false;
    int n = 3;
    double p_noisy = 0.05;
    double p_low = 0.01;
    std::size_t shots = 10000;
    std::string svg;
    std::string topology_file;
    std::string grid;
    int chain = 0;
};

json bits_json(const qec::BitVector& v) {
    json a = json::array();
    for (auto b : v) a.push_back(static_cast<int>(b));
    return a;
}

qec::BitVector bits_from_json(const json& j, std::size_t expected, const char* what) {
    auto v = j.get<std::vector<int>>();
    if (v.size() != expected) {
        throw Error(ErrorCode::inconsistent_history, std::string(what) + " needs " + std::to_string(expected) + " bits");
    }
    qec::BitVector out;
    for (int b : v) {
        if (b != 0 && b != 1) throw Error(ErrorCode::inconsistent_history, std::string(what) + " bits must be 0 or 1");
        out.push_back(static_cast<std::uint8_t>(b));
    }
    return out;
}

int cmd_qec_layout(const Context& ctx, QecFlags& f) {
    const auto layout = qec::build_layout(f.d);
    json data = json::array();
    for (const auto& dq : layout.data_qubits) data.push_back({dq.row, dq.col});
    auto checks = [](const std::vector<qec::Stabilizer>& v) {
        json a = json::array();
        for (const auto& s : v) a.push_back({{"face", {s.face_row, s.face_col}}, {"support", s.support}});
        return a;
    };
    const json j = {{"d", layout.distance},
                    {"data_qubits", data},
                    {"x_stabilizers", checks(layout.x_stabilizers)},
                    {"z_stabilizers", checks(layout.z_stabilizers)},
                    {"logical_x", layout.logical_x},
                    {"logical_z", layout.logical_z}};
    ctx.emit(j, "d=" + std::to_string(f.d) + ": " + std::to_string(layout.num_data()) + " data qubits, " +
                    std::to_string(layout.x_stabilizers.size()) + " X checks, " +
                    std::to_string(layout.z_stabilizers.size()) + " Z checks");
    return exit_ok;
}

int cmd_qec_decode(const Context& ctx, QecFlags& f) {
    json h;
    try {
        h = json::parse(text::read_file(f.history));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_config, "history " + f.history + ": " + e.what());
    }
    const int d = h.value("d", f.d);
    auto config = qec::make_decoder_config(qec::build_layout(d), f.space_weight, f.time_weight);
    config.greedy_fallback = !f.no_fallback;
    const auto& layout = *config.layout;
    qec::SyndromeHistory history;
    try {
        for (const auto& r : h.at("rounds")) {
            history.rounds.push_back({bits_from_json(r.at("x_checks"), layout.x_stabilizers.size(), "x_checks"),
                                      bits_from_json(r.at("z_checks"), layout.z_stabilizers.size(), "z_checks")});
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::inconsistent_history, e.what());
    }
    const auto c = qec::decode(history, config);
    const json j = {{"d", d},
                    {"rounds", history.rounds.size()},
                    {"x_corrections", bits_json(c.x_corrections)},
                    {"z_corrections", bits_json(c.z_corrections)},
                    {"matching_weight", c.matching_weight},
                    {"used_fallback", c.used_fallback}};
    auto count = [](const qec::BitVector& v) { return std::count(v.begin(), v.end(), 1); };
    ctx.emit(j, "decoded " + std::to_string(history.rounds.size()) + " round(s): " + std::to_string(count(c.x_corrections)) +
                    " X and " + std::to_string(count(c.z_corrections)) + " Z corrections, matching weight " +
                    std::to_string(c.matching_weight) + (c.used_fallback ? " (greedy fallback)" : ""));
    return exit_ok;
}

int cmd_qec_rate(const Context& ctx, QecFlags& f) {
    const qec::NoiseModel model{f.p, f.q};
    const std::size_t rounds = f.rounds ? f.rounds : static_cast<std::size_t>(std::max(f.d, 1));
    const auto e = qec::logical_error_rate(f.d, model, rounds, f.trials, ctx.g().seed, {f.threads});
    const json j = {{"d", e.distance},
                    {"p", e.noise.p},
                    {"q", e.noise.q},
                    {"rounds", e.rounds},
                    {"trials", e.trials},
                    {"seed", ctx.g().seed},
                    {"failures", e.failures},
                    {"decode_errors", e.decode_errors},
                    {"fallback_trials", e.fallback_trials},
                    {"logical_error_rate", e.estimate},
                    {"ci", {{"low", e.ci.low}, {"high", e.ci.high}, {"level", 0.95}}}};
    ctx.emit(j, "d=" + std::to_string(e.distance) + " p=" + format_fixed(f.p, 4) + " q=" + format_fixed(f.q, 4) +
                    " rounds=" + std::to_string(e.rounds) + ": logical error rate " + format_fixed(e.estimate, 6) +
                    " [" + format_fixed(e.ci.low, 6) + ", " + format_fixed(e.ci.high, 6) + "] over " +
                    std::to_string(e.trials) + " trials");
    return exit_ok;
}

int cmd_qec_demo(const Context& ctx, QecFlags& f) {
    const auto circuit = qec::deutsch_jozsa_constant(f.n);
    const std::string zeros(static_cast<std::size_t>(f.n), '0');
    struct Run {
        const char* name;
        double p;
    };
    const std::vector<Run> runs = {{"ideal", 0.0}, {"noisy", f.p_noisy}, {"corrected", f.p_low}};
    json hist = json::object(), zero = json::object();
    std::vector<std::pair<std::string, qec::Histogram>> panels;
    std::string human;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto h = qec::pauli_frame_simulate(circuit, {runs[i].p, 0.0}, f.shots, mix_seed(ctx.g().seed, "qec.demo", i));
        const auto it = h.find(zeros);
        const double frac = it == h.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(f.shots);
        hist[runs[i].name] = h;
        zero[runs[i].name] = frac;
        panels.emplace_back(std::string(runs[i].name) + " (p=" + format_fixed(runs[i].p, 3) + ")", h);
        human += std::string(runs[i].name) + ": p=" + format_fixed(runs[i].p, 3) + ", " + zeros + " fraction " +
                 format_fixed(frac, 4) + "\n";
    }
    if (!f.svg.empty()) text::write_file(f.svg, render_histograms_svg(panels));
    const json j = {{"n", f.n},
                    {"shots", f.shots},
                    {"seed", ctx.g().seed},
                    {"p_noisy", f.p_noisy},
                    {"p_corrected", f.p_low},
                    {"histograms", hist},
                    {"zero_fraction", zero}};
    ctx.emit(j, human);
    return exit_ok;
}

int cmd_qec_topology(const Context& ctx, QecFlags& f) {
    qec::DeviceTopology topology;
    const int sources = !f.topology_file.empty() + !f.grid.empty() + (f.chain > 0);
    if (sources != 1) throw Error(ErrorCode::invalid_config, "give exactly one of --file, --grid WxH, --chain N");
    if (!f.topology_file.empty()) {
        try {
            topology = qec::DeviceTopology::from_json(json::parse(text::read_file(f.topology_file)));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::invalid_config, "topology " + f.topology_file + ": " + e.what());
        }
    } else if (!f.grid.empty()) {
        int w = 0, h = 0;
        char x = 0, extra = 0;
        if (std::sscanf(f.grid.c_str(), "%d%c%d%c", &w, &x, &h, &extra) != 3 || x != 'x' || w < 1 || h < 1) {
            throw Error(ErrorCode::invalid_config, "--grid expects WxH, got '" + f.grid + "'");
        }
        topology = qec::DeviceTopology::grid(w, h);
    } else {
        topology = qec::DeviceTopology::chain(f.chain);
    }
    const auto config = qec::generate_decoder_for_topology(topology);
    const int d = config.layout->distance;
    json embedding = nullptr;
    if (config.embedding) {
        embedding = {{"data", config.embedding->data_to_device},
                     {"x_ancillas", config.embedding->x_ancilla_to_device},
                     {"z_ancillas", config.embedding->z_ancilla_to_device}};
    }
    const json j = {{"d", d},
                    {"device_qubits", topology.qubits.size()},
                    {"space_weight", config.space_weight},
                    {"time_weight", config.time_weight},
                    {"exact_defect_limit", config.exact_defect_limit},
                    {"greedy_fallback", config.greedy_fallback},
                    {"embedding", embedding}};
    ctx.emit(j, "decoder for d=" + std::to_string(d) + " on a " + std::to_string(topology.qubits.size()) +
                    "-qubit device");
    return exit_ok;
}

// ---- report ----------------------------------------------------------------

struct ReportFlags {
    std::vector<std::string> inputs;
    std::string svg;
};

int cmd_report(const Context& ctx, ReportFlags& f) {
    std::vector<evalsuite::SuiteReport> reports;
    for (const auto& path : f.inputs) {
        try {
            reports.push_back(evalsuite::suite_report_from_json(json::parse(text::read_file(path))));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::invalid_config, "report " + path + ": " + e.what());
        }
    }
    if (!f.svg.empty()) text::write_file(f.svg, evalsuite::render_svg(reports));
    json summary = json::array();
    for (const auto& r : reports) {
        json k = json::object();
        for (const auto& [kk, v] : r.pass_at_k) k["pass@" + std::to_string(kk)] = v;
        summary.push_back({{"strategy", r.strategy},
                           {"cases", r.cases.size()},
                           {"syntactic_accuracy", r.syntactic_accuracy},
                           {"semantic_accuracy", r.semantic_accuracy},
                           {"pass_at_k", k}});
    }
    ctx.emit({{"reports", summary}}, evalsuite::render_table(reports));
    return exit_ok;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"qforge: quantum code generation, evaluation and error-correction toolkit", "qforge"};
    app.fallthrough();
    app.require_subcommand(1);
    Globals g;
    g.seed_opt = app.add_option("--seed", g.seed, "Root seed for every random stream")->capture_default_str();
    app.add_option("--config", g.config_path, "JSON config merged under explicit flags");
    app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");
    app.add_option("--out", g.out_path, "Write the JSON artifact here instead of stdout");
    g.omit_opt = app.add_flag("--omit-timing", g.omit_timing, "Drop wall-clock fields for byte-stable artifacts");

    GenerateFlags gen;
    auto* generate = app.add_subcommand("generate", "Run one task through the generate-execute-repair loop");
    add_pipeline_options(generate, gen.pipeline);
    generate->add_option("--prompt", gen.prompt, "Task prompt");
    generate->add_option("--id", gen.id, "Task id used with --prompt");
    generate->add_option("--task", gen.task_path, "Task JSON {id, prompt, category, checker}");
    generate->add_option("--suite", gen.suite, "Suite to take --case from");
    generate->add_option("--case", gen.case_id, "Suite case id");

    EvalFlags ev;
    auto* eval = app.add_subcommand("eval", "Evaluate a suite and write a report");
    add_pipeline_options(eval, ev.pipeline);
    ev.suite_opt = eval->add_option("--suite", ev.suite, "Suite JSONL")->capture_default_str();

    RagFlags rf;
    auto* rag_cmd = app.add_subcommand("rag", "Retrieval index");
    rag_cmd->require_subcommand(1);
    auto* rag_index = rag_cmd->add_subcommand("index", "Chunk, embed and save a corpus");
    rf.corpus_opt = rag_index->add_option("--corpus", rf.corpus, "Corpus directory")->capture_default_str();
    rf.index_opt = rag_index->add_option("--index", rf.index, "Index file")->capture_default_str();
    rag_index->add_option("--chunk-size", rf.chunk_size, "Chunk length in code points")->capture_default_str();
    rag_index->add_option("--overlap", rf.overlap, "Overlap in code points")->capture_default_str();
    rag_index->add_option("--dim", rf.dimension, "Embedding dimension")->capture_default_str();
    auto* rag_query = rag_cmd->add_subcommand("query", "Top-k chunks for a query");
    rf.query_index_opt = rag_query->add_option("--index", rf.index, "Index file")->capture_default_str();
    rag_query->add_option("--q", rf.query, "Query text")->required();
    rag_query->add_option("--k", rf.k, "Results")->capture_default_str();

    DataprepFlags df;
    auto* dp = app.add_subcommand("dataprep", "Training-corpus preparation");
    dp->require_subcommand(1);
    auto* dp_filter = dp->add_subcommand("filter", "Keep recent files that import the quantum library");
    df.corpus_opt = dp_filter->add_option("--corpus", df.corpus, "Directory of .py and .ipynb files");
    dp_filter->add_option("--metadata", df.metadata, "JSON {path: {last_updated, official}}")->required();
    dp_filter->add_option("--cutoff", df.cutoff, "Keep files updated strictly after this date")->capture_default_str();
    dp_filter->add_option("--pattern", df.pattern, "Import regex (ECMAScript)");
    auto* dp_split = dp->add_subcommand("split", "Split filtered files into tiles and token-bounded chunks");
    dp_split->add_option("--in", df.in, "CorpusFile JSONL from `dataprep filter`")->required();
    dp_split->add_option("--chunk-tokens", df.chunk_tokens, "Max whitespace tokens per chunk")->capture_default_str();
    auto* dp_fim = dp->add_subcommand("fim", "Fill-in-the-middle transformation");
    dp_fim->add_option("--in", df.in, "TrainChunk JSONL")->required();
    dp_fim->add_option("--rate", df.rate, "Fraction of chunks transformed")->capture_default_str();
    auto* dp_up = dp->add_subcommand("upsample", "Weighted duplication up to a token target");
    dp_up->add_option("--in", df.in, "TrainChunk JSONL")->required();
    dp_up->add_option("--target", df.target, "Target token count")->required();
    dp_up->add_option("--official-weight", df.official_weight, "Sampling weight of official chunks")->capture_default_str();

    QecFlags qf;
    auto* qec_cmd = app.add_subcommand("qec", "Surface-code simulation and decoding");
    qec_cmd->require_subcommand(1);
    auto* q_layout = qec_cmd->add_subcommand("layout", "Rotated surface-code layout");
    q_layout->add_option("--d", qf.d, "Code distance")->capture_default_str();
    auto* q_decode = qec_cmd->add_subcommand("decode", "Decode a syndrome history");
    q_decode->add_option("--d", qf.d, "Code distance unless the history names one")->capture_default_str();
    q_decode->add_option("--history", qf.history, "JSON {d?, rounds: [{x_checks, z_checks}]}")->required();
    q_decode->add_option("--space-weight", qf.space_weight)->capture_default_str();
    q_decode->add_option("--time-weight", qf.time_weight)->capture_default_str();
    q_decode->add_flag("--no-fallback", qf.no_fallback, "Fail with too_many_defects instead of greedy matching");
    auto* q_rate = qec_cmd->add_subcommand("rate", "Monte Carlo logical error rate");
    q_rate->add_option("--d", qf.d, "Code distance")->capture_default_str();
    q_rate->add_option("--p", qf.p, "Depolarizing probability per qubit per round")->capture_default_str();
    q_rate->add_option("--q", qf.q, "Syndrome readout flip probability")->capture_default_str();
    q_rate->add_option("--rounds", qf.rounds, "Noisy rounds (default d)");
    q_rate->add_option("--trials", qf.trials, "Monte Carlo trials")->capture_default_str();
    q_rate->add_option("--threads", qf.threads, "Worker threads (0 = CPUs)");
    auto* q_demo = qec_cmd->add_subcommand("demo", "Deutsch-Jozsa outcome histograms under noise");
    q_demo->add_option("--n", qf.n, "Qubits")->capture_default_str();
    q_demo->add_option("--p-noisy", qf.p_noisy, "Error probability of the noisy run")->capture_default_str();
    q_demo->add_option("--p-low", qf.p_low, "Lower error probability of the corrected run")->capture_default_str();
    q_demo->add_option("--shots", qf.shots)->capture_default_str();
    q_demo->add_option("--svg", qf.svg, "Also write the three histograms as SVG");
    auto* q_topo = qec_cmd->add_subcommand("topology", "Decoder for a declared device topology");
    q_topo->add_option("--file", qf.topology_file, "JSON {qubits: [{id, x, y}], edges: [[a, b]]}");
    q_topo->add_option("--grid", qf.grid, "Full W x H grid, e.g. 7x7");
    q_topo->add_option("--chain", qf.chain, "Linear chain of N qubits");

    ReportFlags rp;
    auto* report = app.add_subcommand("report", "Render suite reports as a table and SVG");
    report->add_option("--in", rp.inputs, "SuiteReport JSON files")->required();
    report->add_option("--svg", rp.svg, "SVG output path");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (!g.config_path.empty()) {
            try {
                g.config = json::parse(text::read_file(g.config_path));
            } catch (const json::exception& e) {
                throw Error(ErrorCode::invalid_config, "config " + g.config_path + ": " + e.what());
            }
            if (!g.config.is_object()) throw Error(ErrorCode::invalid_config, "config must be a JSON object");
        }
        Context ctx(g, out, err);
        ctx.merge(g.seed_opt, nullptr, "seed", g.seed);
        ctx.merge(g.omit_opt, nullptr, "omit_timing", g.omit_timing);

        if (*generate) return cmd_generate(ctx, gen);
        if (*eval) return cmd_eval(ctx, ev);
        if (*rag_index) return cmd_rag_index(ctx, rf);
        if (*rag_query) return cmd_rag_query(ctx, rf);
        if (*dp_filter) return cmd_dataprep_filter(ctx, df);
        if (*dp_split) return cmd_dataprep_split(ctx, df);
        if (*dp_fim) return cmd_dataprep_fim(ctx, df);
        if (*dp_up) return cmd_dataprep_upsample(ctx, df);
        if (*q_layout) return cmd_qec_layout(ctx, qf);
        if (*q_decode) return cmd_qec_decode(ctx, qf);
        if (*q_rate) return cmd_qec_rate(ctx, qf);
        if (*q_demo) return cmd_qec_demo(ctx, qf);
        if (*q_topo) return cmd_qec_topology(ctx, qf);
        if (*report) return cmd_report(ctx, rp);
        err << app.help();
        return exit_usage;
    } catch (const Error& e) {
        err << "qforge: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const json::exception& e) {
        err << "qforge: invalid JSON input: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::exception& e) {
        err << "qforge: " << e.what() << "\n";
        return exit_infrastructure;
    }
}

} // namespace qforge::cli
