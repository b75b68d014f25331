#include "qforge/dataprep/dataprep.hpp"
#include "qforge/error.hpp"
#include "qforge/text.hpp"

#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>

using namespace qforge;
using namespace qforge::dataprep;

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

CorpusFile source(std::string date, std::string body, bool official = false) {
    CorpusFile f;
    f.path = "f.py";
    f.kind = FileKind::source;
    f.last_updated = parse_date(date);
    f.official = official;
    f.text = std::move(body);
    return f;
}

CorpusFile notebook(std::vector<Cell> cells) {
    CorpusFile f;
    f.path = "n.ipynb";
    f.kind = FileKind::notebook;
    f.last_updated = parse_date("2024-06-01");
    f.cells = std::move(cells);
    return f;
}

// Smallest [lo, hi] holding at least 99% of Binomial(n, p) mass, with at
// most 0.5% excluded on each side. Computed from log-pmf sums.
std::pair<int, int> binomial_99_interval(int n, double p) {
    std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
    for (int x = 0; x <= n; ++x) {
        pmf[x] = std::exp(std::lgamma(n + 1.0) - std::lgamma(x + 1.0) - std::lgamma(n - x + 1.0) + x * std::log(p) +
                          (n - x) * std::log1p(-p));
    }
    int lo = 0;
    double below = 0.0;
    while (below + pmf[lo] <= 0.005) below += pmf[lo++];
    int hi = n;
    double above = 0.0;
    while (above + pmf[hi] <= 0.005) above += pmf[hi--];
    return {lo, hi};
}

std::string random_text(Rng& rng, std::size_t max_len) {
    static const std::vector<std::string> atoms = {"a", "b", "Z", " ", "\n", "\t", "qc.h(0)", "é", "量子", "🙂", "#", "()"};
    const auto len = rng.below(max_len + 1);
    std::string out;
    for (std::size_t i = 0; i < len; ++i) out += atoms[rng.below(atoms.size())];
    return out;
}

std::string temp_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("qforge_dataprep_" + std::to_string(::getpid()) + "_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
}

} // namespace

TEST_CASE("dates") {
    CHECK(format_date(parse_date("2024-02-01")) == "2024-02-01");
    CHECK(format_date(parse_date("2024-06-01T12:30:00Z")) == "2024-06-01");
    CHECK(parse_date("2024-02-02") > default_cutoff);
    CHECK(code_of([] { parse_date("2024-2-1"); }) == ErrorCode::invalid_config);
    CHECK(code_of([] { parse_date("2023-02-30"); }) == ErrorCode::invalid_config);
    CHECK(code_of([] { parse_date("abcd-ef-gh"); }) == ErrorCode::invalid_config);
}

TEST_CASE("filter by date and import") {
    const std::string imp = "from qiskit import QuantumCircuit\nqc = QuantumCircuit(2)\n";
    CHECK(filter_corpus({source("2024-01-15", imp)}).empty());
    CHECK(filter_corpus({source("2024-06-01", "import numpy as np\nprint('qiskit')\n")}).empty());
    CHECK(filter_corpus({source("2024-06-01", imp)}).size() == 1);
    // Strictly after the cutoff.
    CHECK(filter_corpus({source("2024-02-01", imp)}).empty());
    CHECK(filter_corpus({source("2024-02-02", imp)}).size() == 1);

    CHECK(filter_corpus({source("2024-06-01", "import qiskit\n")}).size() == 1);
    CHECK(filter_corpus({source("2024-06-01", "x = 1\n    import qiskit.quantum_info as qi\n")}).size() == 1);
    CHECK(filter_corpus({source("2024-06-01", "from qiskit.circuit.library import QFT\n")}).size() == 1);
    CHECK(filter_corpus({source("2024-06-01", "import qiskitty\n")}).empty());
    CHECK(filter_corpus({source("2024-06-01", "# see docs: from qiskit import x\n")}).empty());

    // Notebook imports count only inside code cells.
    auto md_only = notebook({{CellKind::text, "import qiskit"}, {CellKind::code, "x = 1"}});
    CHECK(filter_corpus({md_only}).empty());
    auto code = notebook({{CellKind::text, "intro"}, {CellKind::code, "from qiskit import transpile"}});
    CHECK(filter_corpus({code}).size() == 1);

    CHECK(filter_corpus({source("2024-01-15", imp)}, parse_date("2023-12-31")).size() == 1);
    CHECK(filter_corpus({source("2024-06-01", "import cirq\n")}, default_cutoff, R"(import\s+cirq)").size() == 1);
    CHECK(code_of([] { filter_corpus({}, default_cutoff, "("); }) == ErrorCode::invalid_config);
}

TEST_CASE("filter is idempotent and order preserving") {
    Rng rng(3);
    const std::vector<std::string> bodies = {"import qiskit\n", "from qiskit import Aer\n", "import os\n", "x=1\n"};
    std::vector<CorpusFile> files;
    for (int i = 0; i < 300; ++i) {
        auto f = source("2024-01-" + std::string(i % 2 ? "10" : "20"), bodies[rng.below(bodies.size())]);
        if (rng.below(2)) f.last_updated = parse_date("2024-0" + std::to_string(1 + rng.below(9)) + "-15");
        f.path = "file" + std::to_string(i) + ".py";
        files.push_back(f);
    }
    const auto once = filter_corpus(files);
    const auto twice = filter_corpus(once);
    REQUIRE(once.size() == twice.size());
    CHECK(!once.empty());
    for (std::size_t i = 0; i < once.size(); ++i) CHECK(nlohmann::json(once[i]) == nlohmann::json(twice[i]));
    for (std::size_t i = 1; i < once.size(); ++i) {
        CHECK(std::stoi(once[i - 1].path.substr(4)) < std::stoi(once[i].path.substr(4)));
    }
}

TEST_CASE("notebook splitting") {
    CHECK(split_notebook(notebook({{CellKind::text, "intro"}, {CellKind::code, "x=1"}})) ==
          std::vector<std::string>{"<jupyter_text>intro", "<jupyter_code>x=1"});
    CHECK(split_notebook(notebook({{CellKind::code, ""}})).empty());
    CHECK(split_notebook(notebook({{CellKind::code, "  \n"}, {CellKind::text, "b"}})) ==
          std::vector<std::string>{"<jupyter_text>b"});
    CHECK(code_of([] { split_notebook(source("2024-06-01", "x")); }) == ErrorCode::malformed_notebook);
    NotebookSentinels custom{"<C>", "<T>"};
    CHECK(split_notebook(notebook({{CellKind::code, "y"}}), custom) == std::vector<std::string>{"<C>y"});
}

TEST_CASE("notebook parsing") {
    const auto cells = parse_notebook(
        R"({"cells":[{"cell_type":"markdown","source":["# Title\n","text"]},)"
        R"({"cell_type":"code","source":"import qiskit","outputs":[]},{"cell_type":"raw","source":[]}]})");
    REQUIRE(cells.size() == 3);
    CHECK(cells[0].kind == CellKind::text);
    CHECK(cells[0].text == "# Title\ntext");
    CHECK(cells[1].kind == CellKind::code);
    CHECK(cells[1].text == "import qiskit");
    CHECK(cells[2].text.empty());
    CHECK(code_of([] { parse_notebook("{"); }) == ErrorCode::malformed_notebook);
    CHECK(code_of([] { parse_notebook("{}"); }) == ErrorCode::malformed_notebook);
    CHECK(code_of([] { parse_notebook(R"({"cells":[{"source":"x"}]})"); }) == ErrorCode::malformed_notebook);
    CHECK(code_of([] { parse_notebook(R"({"cells":[{"cell_type":"widget"}]})"); }) == ErrorCode::malformed_notebook);
    CHECK(code_of([] { parse_notebook(R"({"cells":[{"cell_type":"code","source":[1]}]})"); }) ==
          ErrorCode::malformed_notebook);
}

TEST_CASE("chunking respects the token budget and preserves text") {
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        std::string body;
        const auto lines = rng.below(40);
        for (std::size_t l = 0; l < lines; ++l) {
            const auto words = rng.below(l % 7 == 0 ? 60 : 8);
            for (std::size_t w = 0; w < words; ++w) body += (rng.below(3) ? " w" : "\tx") + std::to_string(w);
            body += "\n";
        }
        const std::size_t max = 1 + rng.below(20);
        const auto chunks = chunk_text(body, max);
        std::string joined;
        std::size_t tokens = 0;
        for (const auto& c : chunks) {
            CHECK(count_tokens(c) >= 1);
            CHECK(count_tokens(c) <= max);
            tokens += count_tokens(c);
            joined += c;
        }
        CHECK(tokens == count_tokens(body));
        // Only whitespace may be lost, and only between chunks.
        CHECK(text::replace_all(text::replace_all(joined, "\n", ""), " ", "") ==
              text::replace_all(text::replace_all(body, "\n", ""), " ", ""));
    }
    CHECK(chunk_text("a b\nc d\ne\n", 4) == std::vector<std::string>{"a b\nc d\n", "e\n"});
    CHECK(chunk_text("a b c d e", 2) == std::vector<std::string>{"a b ", "c d ", "e"});
    CHECK(chunk_text("  \n\n", 3).empty());
    CHECK(code_of([] { chunk_text("x", 0); }) == ErrorCode::invalid_params);
}

TEST_CASE("make_chunks carries provenance") {
    auto nb = notebook({{CellKind::text, "intro"}, {CellKind::code, "x=1"}});
    nb.official = true;
    const auto chunks = make_chunks({source("2024-06-01", "a b c\n"), nb}, 100);
    REQUIRE(chunks.size() == 2);
    CHECK(chunks[0].text == "a b c\n");
    CHECK_FALSE(chunks[0].official);
    CHECK(chunks[1].text == "<jupyter_text>intro\n<jupyter_code>x=1");
    CHECK(chunks[1].source == "n.ipynb");
    CHECK(chunks[1].official);
}

TEST_CASE("FIM examples") {
    const TrainChunk c{"abcdef", "s", false, false};
    const auto t = fim_apply(c, 2, 4);
    CHECK(t.text == "<fim_prefix>ab<fim_suffix>ef<fim_middle>cd");
    CHECK(t.fim_applied);
    CHECK(fim_apply(c, 0, 0).text == "<fim_prefix><fim_suffix>abcdef<fim_middle>");
    CHECK(fim_apply(c, 6, 6).text == "<fim_prefix>abcdef<fim_suffix><fim_middle>");
    CHECK(fim_apply({"aé量b", "", false, false}, 1, 3).text == "<fim_prefix>a<fim_suffix>b<fim_middle>é量");
    CHECK(code_of([&] { fim_apply(c, 4, 2); }) == ErrorCode::invalid_params);
    CHECK(code_of([&] { fim_apply(c, 2, 7); }) == ErrorCode::invalid_params);

    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const auto out = fim_transform(c, rng, 0.0);
        CHECK(out.text == c.text);
        CHECK_FALSE(out.fim_applied);
    }
    for (int i = 0; i < 1000; ++i) CHECK(fim_transform(c, rng, 1.0).fim_applied);
    CHECK(code_of([&] { fim_transform(c, rng, 1.5); }) == ErrorCode::invalid_params);
    CHECK(code_of([&] { fim_transform(c, rng, -0.1); }) == ErrorCode::invalid_params);
    CHECK(code_of([&] { fim_transform(c, rng, std::nan("")); }) == ErrorCode::invalid_params);
}

TEST_CASE("FIM rate and reassembly over 10000 chunks") {
    Rng text_rng(77);
    std::vector<TrainChunk> chunks;
    for (int i = 0; i < 10000; ++i) chunks.push_back({random_text(text_rng, 60) + "x", "s", false, false});
    const auto out = fim_transform_all(chunks, 42, 0.1);
    int applied = 0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].fim_applied) ++applied;
        else CHECK(out[i].text == chunks[i].text);
        CHECK(fim_reassemble(out[i].text) == chunks[i].text);
    }
    const auto [lo, hi] = binomial_99_interval(10000, 0.1);
    CAPTURE(applied);
    CHECK(lo < 1000);
    CHECK(hi > 1000);
    CHECK(applied >= lo);
    CHECK(applied <= hi);

    // Same seed, same output.
    const auto again = fim_transform_all(chunks, 42, 0.1);
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(again[i].text == out[i].text);
}

TEST_CASE("FIM reassembly with forced random cuts") {
    Rng rng(5);
    for (int i = 0; i < 10000; ++i) {
        const TrainChunk c{random_text(rng, 40), "", false, false};
        const auto n = text::codepoint_offsets(c.text).size() - 1;
        auto a = rng.below(n + 1), b = rng.below(n + 1);
        if (a > b) std::swap(a, b);
        CHECK(fim_reassemble(fim_apply(c, a, b).text) == c.text);
    }
    CHECK(fim_reassemble("plain text") == "plain text");
    const FimSentinels custom{"<P>", "<S>", "<M>"};
    CHECK(fim_reassemble(fim_apply({"hello", "", false, false}, 1, 3, custom).text, custom) == "hello");
}

TEST_CASE("upsample bookkeeping") {
    std::vector<TrainChunk> chunks = {{"a b c", "x", false, false}, {"d e", "y", false, true}};
    Rng rng(9);
    CHECK(count_tokens(upsample(chunks, 3.0, 5, rng)) == 5);
    CHECK(upsample(chunks, 3.0, 5, rng).size() == 2);
    CHECK(code_of([&] { upsample(chunks, 3.0, 4, rng); }) == ErrorCode::invalid_target);
    CHECK(code_of([&] { upsample({}, 3.0, 4, rng); }) == ErrorCode::invalid_params);
    CHECK(code_of([&] { upsample(chunks, 0.5, 10, rng); }) == ErrorCode::invalid_params);
    CHECK(code_of([&] { upsample({{"  ", "", false, false}}, 3.0, 1, rng); }) == ErrorCode::invalid_target);

    const auto out = upsample(chunks, 3.0, 100, rng);
    CHECK(out[0].text == chunks[0].text);
    CHECK(out[1].text == chunks[1].text);
    const auto total = count_tokens(out);
    CHECK(total >= 100);
    CHECK(total < 100 + 3);
    std::size_t sum = 0;
    for (const auto& c : out) sum += count_tokens(c.text);
    CHECK(sum == total);

    Rng r1(123), r2(123);
    const auto x = upsample(chunks, 3.0, 1000, r1);
    const auto y = upsample(chunks, 3.0, 1000, r2);
    REQUIRE(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i].text == y[i].text);
}

TEST_CASE("upsample 3M tokens to 9M") {
    std::vector<TrainChunk> chunks;
    Rng rng(21);
    std::size_t max_chunk = 0;
    std::size_t total = 0;
    while (total < 3'000'000) {
        const auto words = 200 + rng.below(1600);
        std::string s;
        s.reserve(words * 2);
        for (std::size_t w = 0; w < words; ++w) s += "q ";
        max_chunk = std::max<std::size_t>(max_chunk, words);
        total += words;
        chunks.push_back({std::move(s), "f", false, rng.below(2) == 0});
    }
    auto up = Rng::substream(42, "dataprep.upsample");
    const auto out = upsample(chunks, default_official_weight, 9'000'000, up);
    const auto tokens = count_tokens(out);
    CHECK(tokens >= 9'000'000);
    CHECK(tokens < 9'000'000 + max_chunk);
}

TEST_CASE("official chunks are drawn with weight 3") {
    std::vector<TrainChunk> chunks;
    for (int i = 0; i < 200; ++i) chunks.push_back({"w w w w w", "f", false, i % 2 == 0});
    Rng rng(31);
    const auto out = upsample(chunks, 3.0, count_tokens(chunks) + 5 * 40000, rng);
    std::size_t official = 0;
    for (std::size_t i = chunks.size(); i < out.size(); ++i) official += out[i].official;
    const double fraction = static_cast<double>(official) / static_cast<double>(out.size() - chunks.size());
    CAPTURE(fraction);
    // Expected 3x / (3x + x) for equal official and community shares.
    CHECK(std::abs(fraction - 0.75) <= 0.02);
}

TEST_CASE("corpus loading and JSONL") {
    const auto dir = temp_dir("corpus");
    std::filesystem::create_directories(dir + "/repo/sub");
    text::write_file(dir + "/repo/a.py", "from qiskit import QuantumCircuit\n");
    text::write_file(dir + "/repo/sub/b.ipynb",
                     R"({"cells":[{"cell_type":"markdown","source":"hi"},{"cell_type":"code","source":["import qiskit\n","x=1"]}]})");
    text::write_file(dir + "/repo/notes.txt", "ignored");
    const auto meta = dir + "/meta.json";
    text::write_file(meta, R"({"a.py":{"last_updated":"2024-01-15","official":true},)"
                           R"("sub/b.ipynb":{"last_updated":"2024-05-05T10:00:00Z"}})");
    const auto files = load_corpus(dir + "/repo", meta);
    REQUIRE(files.size() == 2);
    CHECK(files[0].path == "a.py");
    CHECK(files[0].official);
    CHECK(files[1].kind == FileKind::notebook);
    CHECK(files[1].cells.size() == 2);
    const auto kept = filter_corpus(files);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].path == "sub/b.ipynb");

    const auto back = nlohmann::json(files[1]).get<CorpusFile>();
    CHECK(nlohmann::json(back) == nlohmann::json(files[1]));

    text::write_file(meta, R"({"a.py":{"last_updated":"2024-01-15"}})");
    CHECK(code_of([&] { load_corpus(dir + "/repo", meta); }) == ErrorCode::invalid_config);
    CHECK(code_of([&] { load_corpus(dir + "/missing", meta); }) == ErrorCode::io_error);

    const auto chunks = make_chunks(kept, 8);
    write_chunks_jsonl(dir + "/chunks.jsonl", chunks);
    const auto read = read_chunks_jsonl(dir + "/chunks.jsonl");
    REQUIRE(read.size() == chunks.size());
    for (std::size_t i = 0; i < read.size(); ++i) CHECK(nlohmann::json(read[i]) == nlohmann::json(chunks[i]));
    text::write_file(dir + "/bad.jsonl", "{\"text\":\"\"}\n");
    CHECK(code_of([&] { read_chunks_jsonl(dir + "/bad.jsonl"); }) == ErrorCode::invalid_config);
    std::filesystem::remove_all(dir);
}
