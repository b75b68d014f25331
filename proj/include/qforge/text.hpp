#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace qforge::text {

/// Byte offsets of every UTF-8 code point start, plus text.size() as the
/// final entry. Invalid sequences advance one byte at a time.
std::vector<std::size_t> codepoint_offsets(std::string_view text);

std::string_view trim(std::string_view s);
std::string_view trim_right(std::string_view s);

std::vector<std::string_view> split_lines(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);

std::size_t count_occurrences(std::string_view haystack, std::string_view needle);

/// Replaces every occurrence of `from` with `to`.
std::string replace_all(std::string_view s, std::string_view from, std::string_view to);

/// Last `max_chars` bytes of s, moved forward to a code point boundary.
std::string tail(std::string_view s, std::size_t max_chars);

/// Whitespace-delimited word count.
std::size_t word_count(std::string_view s);

std::string base64_encode(std::string_view bytes);
/// Throws std::invalid_argument on malformed input.
std::string base64_decode(std::string_view encoded);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

} // namespace qforge::text
