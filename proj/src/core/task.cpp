#include "qforge/task.hpp"

#include "qforge/error.hpp"

namespace qforge {

std::string_view to_string(Category c) {
    switch (c) {
    case Category::basic: return "basic";
    case Category::intermediate: return "intermediate";
    case Category::advanced: return "advanced";
    }
    return "basic";
}

std::string_view to_string(CheckerKind k) {
    switch (k) {
    case CheckerKind::exact_stdout: return "exact_stdout";
    case CheckerKind::contains_stdout: return "contains_stdout";
    case CheckerKind::assertion_script: return "assertion_script";
    }
    return "exact_stdout";
}

Category category_from_string(std::string_view s) {
    for (auto c : {Category::basic, Category::intermediate, Category::advanced}) {
        if (to_string(c) == s) return c;
    }
    throw Error(ErrorCode::invalid_config, "unknown category '" + std::string(s) + "'");
}

CheckerKind checker_kind_from_string(std::string_view s) {
    for (auto k : {CheckerKind::exact_stdout, CheckerKind::contains_stdout, CheckerKind::assertion_script}) {
        if (to_string(k) == s) return k;
    }
    throw Error(ErrorCode::invalid_config, "unknown checker kind '" + std::string(s) + "'");
}

void to_json(nlohmann::json& j, const CheckerSpec& c) {
    j = {{"kind", to_string(c.kind)}, {"payload", c.payload}};
}

void from_json(const nlohmann::json& j, CheckerSpec& c) {
    c.kind = checker_kind_from_string(j.at("kind").get<std::string>());
    c.payload = j.at("payload").get<std::string>();
    if (c.payload.empty()) throw Error(ErrorCode::invalid_config, "checker payload must be nonempty");
}

void to_json(nlohmann::json& j, const GenerationTask& t) {
    j = {{"id", t.id}, {"prompt", t.prompt}, {"category", to_string(t.category)}};
    if (t.checker) j["checker"] = *t.checker;
}

void from_json(const nlohmann::json& j, GenerationTask& t) {
    t.id = j.at("id").get<std::string>();
    t.prompt = j.at("prompt").get<std::string>();
    t.category = category_from_string(j.value("category", std::string("basic")));
    if (j.contains("checker") && !j.at("checker").is_null()) t.checker = j.at("checker").get<CheckerSpec>();
    else t.checker.reset();
}

} // namespace qforge
