#include "qforge/backend/scripted.hpp"
#include "qforge/error.hpp"
#include "qforge/prompting/prompts.hpp"
#include "qforge/rng.hpp"
#include "qforge/text.hpp"

#include <doctest.h>

#include <set>

using namespace qforge;
using namespace qforge::prompting;

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

CotExemplar sample_exemplar(PromptStyle style = PromptStyle::cot) {
    CotExemplar e;
    e.question = "Build a Bell circuit.";
    e.reasoning_steps = {{"Create two qubits.", std::nullopt}, {"Apply H then CX.", std::nullopt}};
    if (style == PromptStyle::scot) {
        e.reasoning_steps[0].kind = StructureKind::sequence;
        e.reasoning_steps[1].kind = StructureKind::loop;
    }
    e.answer_code = "from qiskit import QuantumCircuit\nqc = QuantumCircuit(2)\nqc.h(0)\nqc.cx(0, 1)";
    e.style = style;
    return e;
}

GenerationTask task(std::string id, std::string prompt) {
    GenerationTask t;
    t.id = std::move(id);
    t.prompt = std::move(prompt);
    return t;
}

std::string random_word(Rng& rng, std::size_t max_len) {
    static const std::string alphabet = "abcdefgh ~`{}[]:QStep\n";
    std::string w;
    const auto n = 1 + rng.below(max_len);
    for (std::size_t i = 0; i < n; ++i) w += alphabet[rng.below(alphabet.size())];
    return w;
}

} // namespace

TEST_CASE("exemplar parses the documented grammar") {
    const std::string text = "Q: Make a GHZ state\n"
                             "on three qubits.\n"
                             "Step 1: Create the circuit.\n"
                             "\n"
                             "Step 2: Chain CNOTs.\n"
                             "```python\n"
                             "qc = QuantumCircuit(3)\n"
                             "\n"
                             "qc.h(0)\n"
                             "```\n\n";
    const auto e = parse_exemplar(text);
    CHECK(e.question == "Make a GHZ state\non three qubits.");
    REQUIRE(e.reasoning_steps.size() == 2);
    CHECK(e.reasoning_steps[1].text == "Chain CNOTs.");
    CHECK_FALSE(e.reasoning_steps[0].kind);
    CHECK(e.answer_code == "qc = QuantumCircuit(3)\n\nqc.h(0)");
    CHECK(e.style == PromptStyle::cot);

    const auto s = parse_exemplar("Q: x\nStep 1 [branch]: check\nStep 2 [loop]: repeat\n```python\npass\n```\n");
    CHECK(s.style == PromptStyle::scot);
    CHECK(s.reasoning_steps[0].kind == StructureKind::branch);
    CHECK(s.reasoning_steps[1].kind == StructureKind::loop);
}

TEST_CASE("exemplar parser rejects deviations") {
    const std::vector<std::string> bad = {
        "",
        "Here is some prose about quantum circuits with no markers at all.",
        "Q: q\n```python\nx\n```\n",
        "Q: q\nStep 1: a\n",
        "Q: q\nStep 2: a\n```python\nx\n```\n",
        "Q: q\nStep 1: a\nStep 1: b\n```python\nx\n```\n",
        "Q: q\nStep 1: a\nStep 2 [loop]: b\n```python\nx\n```\n",
        "Q: q\nStep 1 [recursion]: a\n```python\nx\n```\n",
        "Q: q\nStep 1: a\n```python\nx\n",
        "Q: q\nStep 1: a\n```python\nx\n```\ntrailing prose\n",
        "Q: q\nStep 1:\n```python\nx\n```\n",
        "Q: q\nStep 1: a\n```python\n\n```\n",
        "Intro\nQ: q\nStep 1: a\n```python\nx\n```\n",
    };
    for (const auto& t : bad) {
        CAPTURE(t);
        CHECK(code_of([&] { parse_exemplar(t); }) == ErrorCode::parse_failure);
    }
}

TEST_CASE("format and parse reach a fixpoint") {
    Rng rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        CotExemplar e;
        e.style = rng.bernoulli(0.5) ? PromptStyle::scot : PromptStyle::cot;
        e.question = "Q" + std::to_string(trial) + " " + text::replace_all(random_word(rng, 30), "\n", " ");
        const auto steps = 1 + rng.below(6);
        for (std::size_t s = 0; s < steps; ++s) {
            ReasoningStep step{"do " + text::replace_all(random_word(rng, 20), "\n", " "), std::nullopt};
            if (e.style == PromptStyle::scot) step.kind = static_cast<StructureKind>(rng.below(3));
            e.reasoning_steps.push_back(step);
        }
        e.answer_code = "x = 1\n" + random_word(rng, 40) + "\nprint(x)";
        const auto once = format_exemplar(e);
        const auto parsed = parse_exemplar(once);
        CHECK(format_exemplar(parsed) == once);
        CHECK(parsed.answer_code == e.answer_code);
        CHECK(parsed.style == e.style);
    }
}

TEST_CASE("code containing backtick fences survives formatting") {
    auto e = sample_exemplar();
    e.answer_code = "doc = '''\n```\ninner\n```\n'''\nprint(doc)";
    const auto text = format_exemplar(e);
    CHECK(text::starts_with(text::split_lines(text)[3], "````python"));
    CHECK(parse_exemplar(text).answer_code == e.answer_code);
}

TEST_CASE("shipped exemplar stores") {
    const auto cot = load_exemplar_store(std::string(QFORGE_SOURCE_DIR) + "/data/exemplars/cot");
    const auto scot = load_exemplar_store(std::string(QFORGE_SOURCE_DIR) + "/data/exemplars/scot");
    CHECK(cot.size() == 5);
    CHECK(scot.size() == 5);
    for (const auto& e : cot) CHECK(e.style == PromptStyle::cot);
    for (const auto& e : scot) CHECK(e.style == PromptStyle::scot);
    CHECK(code_of([] { load_exemplar_store("/nonexistent/exemplars"); }) == ErrorCode::io_error);
}

TEST_CASE("repair prompt contains task, code and error once, in order") {
    const std::string prompt = "Build a Bell circuit";
    const std::string code = "from qiskit import execute\nqc = QuantumCircuit(2)";
    const sandbox::ParsedError error{"ImportError", "cannot import name 'execute'", sandbox::Frame{"c.py", 1}};
    const auto out = build_repair_prompt(prompt, code, error);
    CHECK(text::count_occurrences(out, prompt) == 1);
    CHECK(text::count_occurrences(out, code) == 1);
    CHECK(text::count_occurrences(out, error.message) == 1);
    const auto a = out.find(prompt), b = out.find(code), c = out.find(error.message);
    CHECK(a < b);
    CHECK(b < c);
    CHECK(out.find("ImportError") != std::string::npos);

    CHECK(code_of([&] { build_repair_prompt(prompt, code, {"ImportError", "", std::nullopt}); }) ==
          ErrorCode::empty_input);
    CHECK(code_of([&] { build_repair_prompt("", code, error); }) == ErrorCode::empty_input);
    CHECK(code_of([&] { build_repair_prompt(prompt, "", error); }) == ErrorCode::empty_input);
}

TEST_CASE("repair prompt escapes its own delimiters") {
    const std::string prompt = "Print ~~~ literally";
    const std::string code = "s = '''\n~~~\nTask:\n~~~~~\nProgram:\n'''\nprint(s)";
    const sandbox::ParsedError error{"ValueError", "bad ~~~ input", std::nullopt};
    const auto out = build_repair_prompt(prompt, code, error);
    CHECK(text::count_occurrences(out, code) == 1);
    CHECK(text::count_occurrences(out, prompt) == 1);
    CHECK(text::count_occurrences(out, error.message) == 1);
    // The fence is strictly longer than any tilde run inside the sections.
    CHECK(out.find("\n~~~~~~\n") != std::string::npos);
    CHECK(text::count_occurrences(out, "\n~~~~~~\n") == 6);
}

TEST_CASE("distinct code and error pairs give distinct repair prompts") {
    Rng rng(11);
    std::set<std::pair<std::string, std::string>> inputs;
    std::set<std::string> outputs;
    for (int i = 0; i < 500; ++i) {
        const auto code = random_word(rng, 12);
        const auto message = random_word(rng, 12);
        if (!inputs.emplace(code, message).second) continue;
        outputs.insert(build_repair_prompt("task", code, {"E", message, std::nullopt}));
    }
    CHECK(outputs.size() == inputs.size());
}

TEST_CASE("cot prompt structure") {
    const auto t = task("t1", "Prepare a GHZ state.");
    SUBCASE("one exemplar") {
        const auto out = build_cot_prompt(t, {sample_exemplar()}, PromptStyle::cot);
        CHECK(text::count_occurrences(out, "Example ") == 1);
        CHECK(text::count_occurrences(out, "\nQ: ") + text::starts_with(out, "Q: ") == 2);
        CHECK(out.find("Let's think step by step") != std::string::npos);
        CHECK(out.find("Q: Prepare a GHZ state.") > out.find("Example 1:"));
        CHECK(out.find("Let's think step by step") > out.find("Q: Prepare a GHZ state."));
    }
    SUBCASE("five exemplars keep their order") {
        std::vector<CotExemplar> ex;
        for (int i = 0; i < 5; ++i) {
            auto e = sample_exemplar();
            e.question = "Question number " + std::to_string(i);
            ex.push_back(e);
        }
        const auto out = build_cot_prompt(t, ex, PromptStyle::cot);
        std::size_t last = 0;
        for (int i = 0; i < 5; ++i) {
            const auto pos = out.find("Question number " + std::to_string(i));
            REQUIRE(pos != std::string::npos);
            CHECK(pos > last);
            last = pos;
        }
    }
    SUBCASE("scot labels steps") {
        const auto out = build_cot_prompt(t, {sample_exemplar(PromptStyle::scot)}, PromptStyle::scot);
        CHECK(out.find("Step 1 [sequence]: Create two qubits.") != std::string::npos);
        CHECK(out.find("Step 2 [loop]: Apply H then CX.") != std::string::npos);
    }
    CHECK(code_of([&] { build_cot_prompt(t, {sample_exemplar(PromptStyle::scot)}, PromptStyle::cot); }) ==
          ErrorCode::style_mismatch);
    CHECK(code_of([&] { build_cot_prompt(t, {}, PromptStyle::cot); }) == ErrorCode::no_exemplars);
}

TEST_CASE("generate_cot_exemplar") {
    const auto t = task("t7", "Teleport a qubit.");
    const std::string good = "Q: Teleport a qubit.\nStep 1: Share a Bell pair.\nStep 2: Measure and correct.\n"
                             "```python\nqc = QuantumCircuit(3, 2)\n```\n";
    backend::ScriptedBackend b;
    b.set("exemplar:t7", 1, good);
    const auto e = generate_cot_exemplar(t, {sample_exemplar()}, b);
    CHECK(e.question == "Teleport a qubit.");
    CHECK(e.reasoning_steps.size() == 2);
    CHECK(e.answer_code == "qc = QuantumCircuit(3, 2)");

    backend::ScriptedBackend prose;
    prose.set("exemplar:t7", 1, "Sure! First you share a Bell pair, then you measure.");
    CHECK(code_of([&] { generate_cot_exemplar(t, {sample_exemplar()}, prose); }) == ErrorCode::parse_failure);

    // The reply must follow the seeds' style.
    backend::ScriptedBackend wrong_style;
    wrong_style.set("exemplar:t7", 1, good);
    CHECK(code_of([&] { generate_cot_exemplar(t, {sample_exemplar(PromptStyle::scot)}, wrong_style); }) ==
          ErrorCode::parse_failure);

    CHECK(code_of([&] { generate_cot_exemplar(t, {}, b); }) == ErrorCode::no_exemplars);

    backend::ScriptedBackend down;
    down.fail("exemplar:t7", ErrorCode::transport_error);
    CHECK(code_of([&] { generate_cot_exemplar(t, {sample_exemplar()}, down); }) == ErrorCode::transport_error);
}

TEST_CASE("templates render only known placeholders") {
    const PromptTemplate t{"x", "{task_prompt} uses {not_a_placeholder} and {code}"};
    CHECK(t.render({{"task_prompt", "A"}, {"code", "{task_prompt}"}}) == "A uses {not_a_placeholder} and {task_prompt}");
    CHECK(code_of([&] { t.render({{"task_prompt", "A"}}); }) == ErrorCode::invalid_config);

    const auto plain = build_plain_prompt(task("p", "Make a circuit"));
    CHECK(text::starts_with(plain, "Make a circuit"));
    for (const auto& name : placeholder_names()) CHECK(plain.find("{" + name + "}") == std::string::npos);
}

TEST_CASE("extract_code") {
    CHECK(extract_code("Here:\n```python\nprint(1)\n```\nDone") == "print(1)\n");
    CHECK(extract_code("```\na\n```\n```python\nb\n```") == "a\n");
    CHECK(extract_code("print(2)") == "print(2)");
    CHECK(extract_code("````python\nx = '```'\n```\ny\n````") == "x = '```'\n```\ny\n");
    CHECK(extract_code("```python\nunterminated") == "unterminated\n");
}
