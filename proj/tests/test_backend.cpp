#include "qforge/backend/cassette.hpp"
#include "qforge/backend/http.hpp"
#include "qforge/backend/scripted.hpp"
#include "qforge/error.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <thread>

using namespace qforge;
using namespace qforge::backend;

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

CompletionRequest request(std::string prompt, std::optional<std::string> tag = std::nullopt, int n = 1) {
    CompletionRequest r;
    r.prompt = std::move(prompt);
    r.tag = std::move(tag);
    r.params.n = n;
    return r;
}

class StubTransport final : public HttpTransport {
public:
    std::function<HttpResponse(const HttpRequest&)> handler;
    std::atomic<int> calls{0};
    HttpRequest last;

    HttpResponse post(const HttpRequest& r) override {
        ++calls;
        last = r;
        return handler(r);
    }
};

HttpBackendConfig fast_config() {
    HttpBackendConfig c{"http://example.invalid/v1/", "secret", "tiny-model", {}};
    c.retry.initial_backoff = std::chrono::milliseconds(1);
    return c;
}

std::string choices_body(const std::vector<std::pair<int, std::string>>& choices) {
    nlohmann::json j;
    j["choices"] = nlohmann::json::array();
    for (const auto& [i, t] : choices) j["choices"].push_back({{"index", i}, {"text", t}});
    return j.dump();
}

std::string temp_path(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("qforge_test_" + std::to_string(::getpid()) + "_" + name);
    std::filesystem::remove(p);
    return p.string();
}

} // namespace

TEST_CASE("scripted backend serves canned completions") {
    ScriptedBackend b;
    b.set("t1", 1, "print(1)");
    const auto r = b.complete(request("anything", "t1"));
    CHECK(r.completions == std::vector<std::string>{"print(1)"});
    CHECK(r.backend_id == "scripted");
}

TEST_CASE("scripted backend broadcasts a single entry to n completions") {
    ScriptedBackend b;
    b.set("t1", 1, "print(1)");
    const auto r = b.complete(request("p", "t1", 5));
    CHECK(r.completions == std::vector<std::string>(5, "print(1)"));
}

TEST_CASE("scripted backend advances passes per tag and wraps around") {
    ScriptedBackend b;
    b.set("t1", 1, "first").set("t1", 2, "second");
    b.set("t2", 1, std::vector<std::string>{"a", "b"});
    CHECK(b.complete(request("p", "t1")).completions[0] == "first");
    CHECK(b.complete(request("p", "t2", 3)).completions == std::vector<std::string>{"a", "b", "a"});
    CHECK(b.complete(request("p", "t1")).completions[0] == "second");
    CHECK(b.complete(request("p", "t1")).completions[0] == "first");
    CHECK(b.calls() == 4);
    CHECK(code_of([&] { b.complete(request("p", "missing")); }) == ErrorCode::invalid_config);
    CHECK(code_of([&] { b.set("t3", 2, "gap"); }) == ErrorCode::invalid_config);
}

TEST_CASE("scripted backend from JSON, wildcard and failures") {
    auto b = ScriptedBackend::from_json(nlohmann::json::parse(
        R"({"t1": ["x", ["y1", "y2"]], "*": ["fallback"], "down": {"error": "transport_error"}})"));
    CHECK(b->complete(request("p", "t1")).completions[0] == "x");
    CHECK(b->complete(request("p", "t1", 2)).completions == std::vector<std::string>{"y1", "y2"});
    CHECK(b->complete(request("p", "other")).completions[0] == "fallback");
    CHECK(code_of([&] { b->complete(request("p", "down")); }) == ErrorCode::transport_error);
    CHECK(code_of([&] { b->complete(request("p", "t1", 0)); }) == ErrorCode::invalid_params);
}

TEST_CASE("http backend speaks the completions wire format") {
    auto transport = std::make_shared<StubTransport>();
    transport->handler = [](const HttpRequest&) {
        return HttpResponse{200, choices_body({{1, "second"}, {0, "first"}})};
    };
    HttpBackend b(fast_config(), transport);
    const auto r = b.complete(request("Build a Bell circuit", "t", 2));
    CHECK(r.completions == std::vector<std::string>{"first", "second"});
    CHECK(transport->last.url == "http://example.invalid/v1/completions");
    const auto body = nlohmann::json::parse(transport->last.body);
    CHECK(body["model"] == "tiny-model");
    CHECK(body["prompt"] == "Build a Bell circuit");
    CHECK(body["n"] == 2);
    bool auth = false;
    for (const auto& [k, v] : transport->last.headers) auth = auth || (k == "Authorization" && v == "Bearer secret");
    CHECK(auth);
}

TEST_CASE("http backend errors") {
    auto transport = std::make_shared<StubTransport>();
    HttpBackend b(fast_config(), transport);

    transport->handler = [](const HttpRequest&) -> HttpResponse { throw TransportFailure("connection refused"); };
    CHECK(code_of([&] { b.complete(request("p")); }) == ErrorCode::transport_error);
    CHECK(transport->calls == 3);

    transport->calls = 0;
    transport->handler = [](const HttpRequest&) { return HttpResponse{503, "busy"}; };
    CHECK(code_of([&] { b.complete(request("p")); }) == ErrorCode::transport_error);
    CHECK(transport->calls == 3);

    transport->calls = 0;
    transport->handler = [&](const HttpRequest&) {
        return transport->calls < 2 ? HttpResponse{500, ""} : HttpResponse{200, choices_body({{0, "ok"}})};
    };
    CHECK(b.complete(request("p")).completions[0] == "ok");
    CHECK(transport->calls == 2);

    transport->calls = 0;
    transport->handler = [](const HttpRequest&) { return HttpResponse{401, "nope"}; };
    CHECK(code_of([&] { b.complete(request("p")); }) == ErrorCode::auth_error);
    CHECK(transport->calls == 1);

    transport->handler = [](const HttpRequest&) { return HttpResponse{200, "not json"}; };
    CHECK(code_of([&] { b.complete(request("p")); }) == ErrorCode::malformed_response);

    // n-contract: never silently truncated.
    transport->handler = [](const HttpRequest&) { return HttpResponse{200, choices_body({{0, "only one"}})}; };
    CHECK(code_of([&] { b.complete(request("p", std::nullopt, 3)); }) == ErrorCode::malformed_response);
}

TEST_CASE("http backend config from environment") {
    ::unsetenv(env_api_base);
    ::unsetenv(env_model);
    CHECK(code_of([] { HttpBackendConfig::from_env(); }) == ErrorCode::invalid_config);
    ::setenv(env_api_base, "http://localhost:1/v1", 1);
    ::setenv(env_model, "m", 1);
    ::setenv(env_api_key, "k", 1);
    const auto c = HttpBackendConfig::from_env();
    CHECK(c.api_base == "http://localhost:1/v1");
    CHECK(c.model == "m");
    CHECK(c.api_key == "k");
    ::unsetenv(env_api_base);
    ::unsetenv(env_model);
    ::unsetenv(env_api_key);
}

TEST_CASE("http backend against a local server") {
    httplib::Server server;
    server.Post("/v1/completions", [](const httplib::Request& req, httplib::Response& res) {
        const auto body = nlohmann::json::parse(req.body);
        std::vector<std::pair<int, std::string>> choices;
        for (int i = 0; i < body["n"].get<int>(); ++i) choices.emplace_back(i, "completion " + std::to_string(i));
        res.set_content(choices_body(choices), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpBackendConfig c = fast_config();
    c.api_base = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    HttpBackend b(c);
    const auto r = b.complete(request("hi", std::nullopt, 3));
    CHECK(r.completions == std::vector<std::string>{"completion 0", "completion 1", "completion 2"});

    server.stop();
    worker.join();

    // Nothing listening any more: retries exhaust into transport_error.
    CHECK(code_of([&] { b.complete(request("hi")); }) == ErrorCode::transport_error);
}

TEST_CASE("cassette key is stable and sensitive to every field") {
    const auto base = request("p", "t", 2);
    CHECK(cassette_key(base) == cassette_key(base));
    CHECK(cassette_key(base).size() == 64);
    auto other = base;
    other.prompt = "q";
    CHECK(cassette_key(other) != cassette_key(base));
    other = base;
    other.tag = "u";
    CHECK(cassette_key(other) != cassette_key(base));
    other = base;
    other.params.temperature = 0.5;
    CHECK(cassette_key(other) != cassette_key(base));
}

TEST_CASE("cassette replay is byte-identical and makes no network calls") {
    const auto path = temp_path("cassette.jsonl");
    auto transport = std::make_shared<StubTransport>();
    int counter = 0;
    transport->handler = [&](const HttpRequest& r) {
        const auto n = nlohmann::json::parse(r.body)["n"].get<int>();
        std::vector<std::pair<int, std::string>> choices;
        for (int i = 0; i < n; ++i) choices.emplace_back(i, "answer " + std::to_string(counter++));
        return HttpResponse{200, choices_body(choices)};
    };
    auto http = std::make_shared<HttpBackend>(fast_config(), transport);

    std::vector<CompletionRequest> session = {request("a", "t1"), request("b", "t2", 3), request("a", "t1")};
    std::vector<std::string> recorded;
    {
        CassetteBackend rec(http, path, CassetteMode::record);
        for (const auto& r : session) recorded.push_back(nlohmann::json(rec.complete(r)).dump());
    }
    CHECK(transport->calls == 3);

    transport->calls = 0;
    CassetteBackend replay(http, path, CassetteMode::replay);
    for (std::size_t i = 0; i < session.size(); ++i) {
        CHECK(nlohmann::json(replay.complete(session[i])).dump() == recorded[i]);
    }
    CHECK(transport->calls == 0);
    CHECK(code_of([&] { replay.complete(request("never recorded")); }) == ErrorCode::cassette_miss);

    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    const auto record = nlohmann::json::parse(line);
    CHECK(record.contains("key"));
    CHECK(record.contains("request"));
    CHECK(record.contains("response"));
    CHECK(record.contains("timestamp"));
    std::filesystem::remove(path);
}

TEST_CASE("scripted backend is safe under concurrent calls") {
    ScriptedBackend b;
    b.set("*", 1, "x");
    std::vector<std::jthread> threads;
    std::atomic<int> ok{0};
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 100; ++i) {
                if (b.complete(request("p", "tag" + std::to_string(t), 2)).completions.size() == 2) ++ok;
            }
        });
    }
    threads.clear();
    CHECK(ok == 800);
    CHECK(b.calls() == 800);
}
