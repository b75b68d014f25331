#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace qforge {

enum class Category { basic, intermediate, advanced };
enum class CheckerKind { exact_stdout, contains_stdout, assertion_script };

std::string_view to_string(Category c);
std::string_view to_string(CheckerKind k);
Category category_from_string(std::string_view s);
CheckerKind checker_kind_from_string(std::string_view s);

struct CheckerSpec {
    CheckerKind kind = CheckerKind::exact_stdout;
    std::string payload;
};

struct GenerationTask {
    std::string id;
    std::string prompt;
    Category category = Category::basic;
    std::optional<CheckerSpec> checker;
};

void to_json(nlohmann::json& j, const CheckerSpec& c);
void from_json(const nlohmann::json& j, CheckerSpec& c);
void to_json(nlohmann::json& j, const GenerationTask& t);
void from_json(const nlohmann::json& j, GenerationTask& t);

} // namespace qforge
