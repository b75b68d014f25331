#pragma once

#include "qforge/rng.hpp"

#include <json.hpp>

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qforge::dataprep {

/// Calendar date parsed from "YYYY-MM-DD"; a trailing "T..." time part is ignored.
std::chrono::year_month_day parse_date(std::string_view s);
std::string format_date(std::chrono::year_month_day d);

inline constexpr std::chrono::year_month_day default_cutoff{std::chrono::year{2024}, std::chrono::month{2},
                                                            std::chrono::day{1}};

/// Matches `import qiskit...` and `from qiskit... import` at the start of a line.
inline constexpr const char* default_import_pattern =
    R"((^|\n)[ \t]*(import[ \t]+qiskit\b|from[ \t]+qiskit(\.[A-Za-z_][A-Za-z0-9_.]*)?[ \t]+import\b))";

enum class FileKind { source, notebook };
enum class CellKind { code, text };

std::string_view to_string(FileKind k);
std::string_view to_string(CellKind k);

struct Cell {
    CellKind kind = CellKind::code;
    std::string text;
};

/// Source files carry `text`; notebooks carry `cells`.
struct CorpusFile {
    std::string path;
    FileKind kind = FileKind::source;
    std::chrono::year_month_day last_updated{};
    bool official = false;
    std::string text;
    std::vector<Cell> cells;

    /// The text searched by the import filter: source text, or the code cells
    /// of a notebook joined by newlines.
    std::string searchable_text() const;
};

void to_json(nlohmann::json& j, const CorpusFile& f);
void from_json(const nlohmann::json& j, CorpusFile& f);

struct TrainChunk {
    std::string text;
    std::string source;
    bool fim_applied = false;
    bool official = false;
};

void to_json(nlohmann::json& j, const TrainChunk& c);
void from_json(const nlohmann::json& j, TrainChunk& c);

/// Token unit for all accounting: whitespace-delimited words.
std::size_t count_tokens(std::string_view text);
std::size_t count_tokens(const std::vector<TrainChunk>& chunks);

/// Keeps files updated strictly after `cutoff` whose searchable text matches
/// `import_pattern` (ECMAScript regex). Order is preserved.
std::vector<CorpusFile> filter_corpus(const std::vector<CorpusFile>& files,
                                      std::chrono::year_month_day cutoff = default_cutoff,
                                      const std::string& import_pattern = default_import_pattern);

struct NotebookSentinels {
    std::string code = "<jupyter_code>";
    std::string text = "<jupyter_text>";
};

/// One tile per non-blank cell, in document order, prefixed by its kind's
/// sentinel. Throws malformed_notebook for source files.
std::vector<std::string> split_notebook(const CorpusFile& nb, const NotebookSentinels& sentinels = {});

/// Parses .ipynb JSON (cell "source" as a string or list of lines). Markdown
/// and raw cells become text cells. Throws malformed_notebook.
std::vector<Cell> parse_notebook(std::string_view json_text);

/// Splits text into chunks of at most `max_tokens` tokens, cutting at line
/// boundaries where possible. Whitespace inside a chunk is preserved and
/// whitespace-only chunks are dropped.
std::vector<std::string> chunk_text(std::string_view text, std::size_t max_tokens);

/// Chunks every file: source text directly, notebooks as their tiles joined
/// by newlines.
std::vector<TrainChunk> make_chunks(const std::vector<CorpusFile>& files, std::size_t max_tokens,
                                    const NotebookSentinels& sentinels = {});

struct FimSentinels {
    std::string prefix = "<fim_prefix>";
    std::string suffix = "<fim_suffix>";
    std::string middle = "<fim_middle>";
};

/// PSM rearrangement with cuts at code point indices i <= j.
TrainChunk fim_apply(const TrainChunk& chunk, std::size_t i, std::size_t j, const FimSentinels& s = {});

/// With probability `fim_rate` draws two uniform cut points over the code
/// point positions [0, len] and applies fim_apply; otherwise returns the
/// chunk unchanged. Throws invalid_params unless 0 <= fim_rate <= 1.
TrainChunk fim_transform(const TrainChunk& chunk, Rng& rng, double fim_rate, const FimSentinels& s = {});

/// Transforms each chunk with its own substream (seed, "dataprep.fim", index).
std::vector<TrainChunk> fim_transform_all(const std::vector<TrainChunk>& chunks, std::uint64_t seed,
                                          double fim_rate, const FimSentinels& s = {});

/// Inverse of fim_apply: restores prefix + middle + suffix. Returns the text
/// unchanged when it is not in PSM form. Assumes the original text did not
/// contain the sentinel strings.
std::string fim_reassemble(std::string_view text, const FimSentinels& s = {});

inline constexpr double default_official_weight = 3.0;

/// Returns the input followed by chunks drawn with replacement, official
/// chunks weighted by `official_weight`, until the total token count reaches
/// `target_tokens`. Chunks without tokens are never drawn. Throws
/// invalid_params for an empty input or weight < 1 and invalid_target when
/// the target is below the current count or cannot be reached.
std::vector<TrainChunk> upsample(const std::vector<TrainChunk>& chunks, double official_weight,
                                 std::size_t target_tokens, Rng& rng);

/// Reads *.py and *.ipynb files below `dir`; dates and official flags come
/// from a metadata JSON object mapping relative paths to
/// {"last_updated": "YYYY-MM-DD", "official": bool}. A file without metadata
/// is invalid_config. Paths are returned sorted.
std::vector<CorpusFile> load_corpus(const std::string& dir, const std::string& metadata_path);

std::vector<TrainChunk> read_chunks_jsonl(const std::string& path);
void write_chunks_jsonl(const std::string& path, const std::vector<TrainChunk>& chunks);

} // namespace qforge::dataprep
