#include "qforge/dataprep/dataprep.hpp"

#include "qforge/error.hpp"
#include "qforge/parallel.hpp"
#include "qforge/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <regex>

namespace qforge::dataprep {

namespace {

int parse_int(std::string_view s, std::string_view whole) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(ErrorCode::invalid_config, "bad date '" + std::string(whole) + "', expected YYYY-MM-DD");
    }
    return v;
}

} // namespace

std::chrono::year_month_day parse_date(std::string_view s) {
    const auto date = s.substr(0, std::min(s.find('T'), s.size()));
    if (date.size() != 10 || date[4] != '-' || date[7] != '-') {
        throw Error(ErrorCode::invalid_config, "bad date '" + std::string(s) + "', expected YYYY-MM-DD");
    }
    const std::chrono::year_month_day d{std::chrono::year{parse_int(date.substr(0, 4), s)},
                                        std::chrono::month{static_cast<unsigned>(parse_int(date.substr(5, 2), s))},
                                        std::chrono::day{static_cast<unsigned>(parse_int(date.substr(8, 2), s))}};
    if (!d.ok()) throw Error(ErrorCode::invalid_config, "invalid calendar date '" + std::string(s) + "'");
    return d;
}

std::string format_date(std::chrono::year_month_day d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

std::string_view to_string(FileKind k) { return k == FileKind::source ? "source" : "notebook"; }
std::string_view to_string(CellKind k) { return k == CellKind::code ? "code" : "text"; }

std::string CorpusFile::searchable_text() const {
    if (kind == FileKind::source) return text;
    std::string out;
    for (const auto& c : cells) {
        if (c.kind != CellKind::code) continue;
        out += c.text;
        out += '\n';
    }
    return out;
}

void to_json(nlohmann::json& j, const CorpusFile& f) {
    j = {{"path", f.path},
         {"kind", to_string(f.kind)},
         {"last_updated", format_date(f.last_updated)},
         {"official", f.official}};
    if (f.kind == FileKind::source) {
        j["text"] = f.text;
    } else {
        auto cells = nlohmann::json::array();
        for (const auto& c : f.cells) cells.push_back({{"kind", to_string(c.kind)}, {"text", c.text}});
        j["cells"] = std::move(cells);
    }
}

void from_json(const nlohmann::json& j, CorpusFile& f) {
    f.path = j.at("path").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "source" && kind != "notebook") throw Error(ErrorCode::invalid_config, "unknown file kind '" + kind + "'");
    f.kind = kind == "source" ? FileKind::source : FileKind::notebook;
    f.last_updated = parse_date(j.at("last_updated").get<std::string>());
    f.official = j.value("official", false);
    f.text.clear();
    f.cells.clear();
    if (f.kind == FileKind::source) {
        f.text = j.at("text").get<std::string>();
        return;
    }
    for (const auto& c : j.at("cells")) {
        const auto ck = c.at("kind").get<std::string>();
        if (ck != "code" && ck != "text") throw Error(ErrorCode::malformed_notebook, "unknown cell kind '" + ck + "'");
        f.cells.push_back({ck == "code" ? CellKind::code : CellKind::text, c.at("text").get<std::string>()});
    }
}

void to_json(nlohmann::json& j, const TrainChunk& c) {
    j = {{"text", c.text}, {"source", c.source}, {"fim_applied", c.fim_applied}, {"official", c.official}};
}

void from_json(const nlohmann::json& j, TrainChunk& c) {
    c.text = j.at("text").get<std::string>();
    if (c.text.empty()) throw Error(ErrorCode::invalid_config, "chunk text must be nonempty");
    c.source = j.value("source", "");
    c.fim_applied = j.value("fim_applied", false);
    c.official = j.value("official", false);
}

std::size_t count_tokens(std::string_view s) { return text::word_count(s); }

std::size_t count_tokens(const std::vector<TrainChunk>& chunks) {
    std::size_t total = 0;
    for (const auto& c : chunks) total += count_tokens(c.text);
    return total;
}

std::vector<CorpusFile> filter_corpus(const std::vector<CorpusFile>& files, std::chrono::year_month_day cutoff,
                                      const std::string& import_pattern) {
    std::regex re;
    try {
        re = std::regex(import_pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
        throw Error(ErrorCode::invalid_config, "bad import pattern: " + std::string(e.what()));
    }
    std::vector<char> keep(files.size(), 0);
    parallel_for(files.size(), default_concurrency(), [&](std::size_t i) {
        const auto& f = files[i];
        keep[i] = f.last_updated > cutoff && std::regex_search(f.searchable_text(), re);
    });
    std::vector<CorpusFile> out;
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (keep[i]) out.push_back(files[i]);
    }
    return out;
}

std::vector<std::string> split_notebook(const CorpusFile& nb, const NotebookSentinels& sentinels) {
    if (nb.kind != FileKind::notebook) throw Error(ErrorCode::malformed_notebook, nb.path + " is not a notebook");
    std::vector<std::string> tiles;
    for (const auto& c : nb.cells) {
        if (text::trim(c.text).empty()) continue;
        tiles.push_back((c.kind == CellKind::code ? sentinels.code : sentinels.text) + c.text);
    }
    return tiles;
}

std::vector<Cell> parse_notebook(std::string_view json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::malformed_notebook, e.what());
    }
    if (!j.is_object() || !j.contains("cells") || !j["cells"].is_array()) {
        throw Error(ErrorCode::malformed_notebook, "notebook has no cells array");
    }
    std::vector<Cell> cells;
    for (const auto& c : j["cells"]) {
        if (!c.is_object() || !c.contains("cell_type") || !c["cell_type"].is_string()) {
            throw Error(ErrorCode::malformed_notebook, "cell without cell_type");
        }
        const auto type = c["cell_type"].get<std::string>();
        Cell cell;
        if (type == "code") cell.kind = CellKind::code;
        else if (type == "markdown" || type == "raw") cell.kind = CellKind::text;
        else throw Error(ErrorCode::malformed_notebook, "unknown cell_type '" + type + "'");
        const auto& src = c.contains("source") ? c["source"] : nlohmann::json("");
        if (src.is_string()) {
            cell.text = src.get<std::string>();
        } else if (src.is_array()) {
            for (const auto& line : src) {
                if (!line.is_string()) throw Error(ErrorCode::malformed_notebook, "cell source must hold strings");
                cell.text += line.get<std::string>();
            }
        } else {
            throw Error(ErrorCode::malformed_notebook, "cell source must be a string or list");
        }
        cells.push_back(std::move(cell));
    }
    return cells;
}

std::vector<std::string> chunk_text(std::string_view s, std::size_t max_tokens) {
    if (max_tokens == 0) throw Error(ErrorCode::invalid_params, "max_tokens must be positive");
    std::vector<std::string> out;
    std::string current;
    std::size_t current_tokens = 0;
    auto flush = [&] {
        if (current_tokens > 0) out.push_back(std::move(current));
        current.clear();
        current_tokens = 0;
    };
    std::size_t pos = 0;
    while (pos < s.size()) {
        const auto nl = s.find('\n', pos);
        const auto end = nl == std::string_view::npos ? s.size() : nl + 1;
        const auto line = s.substr(pos, end - pos);
        pos = end;
        const auto tokens = count_tokens(line);
        if (tokens <= max_tokens) {
            if (current_tokens + tokens > max_tokens) flush();
            current += line;
            current_tokens += tokens;
            continue;
        }
        // A line longer than a whole chunk is cut before every max_tokens-th word.
        flush();
        std::vector<std::size_t> starts;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const bool space = std::isspace(static_cast<unsigned char>(line[i]));
            if (!space && (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1])))) starts.push_back(i);
        }
        std::size_t piece_start = 0;
        for (std::size_t w = max_tokens; w < starts.size(); w += max_tokens) {
            out.emplace_back(line.substr(piece_start, starts[w] - piece_start));
            piece_start = starts[w];
        }
        current = std::string(line.substr(piece_start));
        current_tokens = count_tokens(current);
    }
    flush();
    return out;
}

std::vector<TrainChunk> make_chunks(const std::vector<CorpusFile>& files, std::size_t max_tokens,
                                    const NotebookSentinels& sentinels) {
    if (max_tokens == 0) throw Error(ErrorCode::invalid_params, "max_tokens must be positive");
    std::vector<std::vector<TrainChunk>> per_file(files.size());
    parallel_for(files.size(), default_concurrency(), [&](std::size_t i) {
        const auto& f = files[i];
        std::string body;
        if (f.kind == FileKind::source) {
            body = f.text;
        } else {
            for (const auto& tile : split_notebook(f, sentinels)) {
                if (!body.empty() && body.back() != '\n') body += '\n';
                body += tile;
            }
        }
        for (auto& piece : chunk_text(body, max_tokens)) {
            per_file[i].push_back({std::move(piece), f.path, false, f.official});
        }
    });
    std::vector<TrainChunk> out;
    for (auto& v : per_file) std::move(v.begin(), v.end(), std::back_inserter(out));
    return out;
}

TrainChunk fim_apply(const TrainChunk& chunk, std::size_t i, std::size_t j, const FimSentinels& s) {
    const auto offsets = text::codepoint_offsets(chunk.text);
    const std::size_t n = offsets.size() - 1;
    if (i > j || j > n) {
        throw Error(ErrorCode::invalid_params, "FIM cuts need i <= j <= " + std::to_string(n));
    }
    const std::string_view t = chunk.text;
    const auto a = offsets[i], b = offsets[j];
    TrainChunk out = chunk;
    out.text = s.prefix;
    out.text.append(t.substr(0, a));
    out.text += s.suffix;
    out.text.append(t.substr(b));
    out.text += s.middle;
    out.text.append(t.substr(a, b - a));
    out.fim_applied = true;
    return out;
}

TrainChunk fim_transform(const TrainChunk& chunk, Rng& rng, double fim_rate, const FimSentinels& s) {
    if (!(fim_rate >= 0.0 && fim_rate <= 1.0)) throw Error(ErrorCode::invalid_params, "fim_rate must lie in [0, 1]");
    if (!rng.bernoulli(fim_rate)) return chunk;
    const std::size_t positions = text::codepoint_offsets(chunk.text).size();
    auto i = static_cast<std::size_t>(rng.below(positions));
    auto j = static_cast<std::size_t>(rng.below(positions));
    if (i > j) std::swap(i, j);
    return fim_apply(chunk, i, j, s);
}

std::vector<TrainChunk> fim_transform_all(const std::vector<TrainChunk>& chunks, std::uint64_t seed, double fim_rate,
                                          const FimSentinels& s) {
    if (!(fim_rate >= 0.0 && fim_rate <= 1.0)) throw Error(ErrorCode::invalid_params, "fim_rate must lie in [0, 1]");
    std::vector<TrainChunk> out(chunks.size());
    parallel_for(chunks.size(), default_concurrency(), [&](std::size_t i) {
        auto rng = Rng::substream(seed, "dataprep.fim", i);
        out[i] = fim_transform(chunks[i], rng, fim_rate, s);
    });
    return out;
}

std::string fim_reassemble(std::string_view t, const FimSentinels& s) {
    if (!text::starts_with(t, s.prefix)) return std::string(t);
    const auto suffix_at = t.find(s.suffix, s.prefix.size());
    if (suffix_at == std::string_view::npos) return std::string(t);
    const auto middle_at = t.find(s.middle, suffix_at + s.suffix.size());
    if (middle_at == std::string_view::npos) return std::string(t);
    std::string out(t.substr(s.prefix.size(), suffix_at - s.prefix.size()));
    out.append(t.substr(middle_at + s.middle.size()));
    out.append(t.substr(suffix_at + s.suffix.size(), middle_at - suffix_at - s.suffix.size()));
    return out;
}

std::vector<TrainChunk> upsample(const std::vector<TrainChunk>& chunks, double official_weight,
                                 std::size_t target_tokens, Rng& rng) {
    if (chunks.empty()) throw Error(ErrorCode::invalid_params, "upsample needs at least one chunk");
    if (!(official_weight >= 1.0)) throw Error(ErrorCode::invalid_params, "official_weight must be >= 1");
    std::size_t total = count_tokens(chunks);
    if (target_tokens < total) {
        throw Error(ErrorCode::invalid_target, "target " + std::to_string(target_tokens) +
                                                   " is below the current token count " + std::to_string(total));
    }
    std::vector<TrainChunk> out = chunks;
    if (target_tokens == total) return out;

    std::vector<std::size_t> eligible;
    std::vector<std::size_t> tokens;
    std::vector<double> cumulative;
    double weight_sum = 0.0;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        const auto t = count_tokens(chunks[i].text);
        if (t == 0) continue;
        weight_sum += chunks[i].official ? official_weight : 1.0;
        eligible.push_back(i);
        tokens.push_back(t);
        cumulative.push_back(weight_sum);
    }
    if (eligible.empty()) throw Error(ErrorCode::invalid_target, "no chunk carries tokens, target is unreachable");

    while (total < target_tokens) {
        const double u = rng.uniform() * weight_sum;
        auto k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        k = std::min(k, eligible.size() - 1);
        out.push_back(chunks[eligible[k]]);
        total += tokens[k];
    }
    return out;
}

std::vector<CorpusFile> load_corpus(const std::string& dir, const std::string& metadata_path) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::io_error, "corpus directory not found: " + dir);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(text::read_file(metadata_path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::invalid_config, "metadata " + metadata_path + ": " + e.what());
    }
    if (!meta.is_object()) throw Error(ErrorCode::invalid_config, "metadata must be a JSON object");

    std::vector<fs::path> paths;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (ext == ".py" || ext == ".ipynb") paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());

    std::vector<CorpusFile> files(paths.size());
    parallel_for(paths.size(), default_concurrency(), [&](std::size_t i) {
        auto& f = files[i];
        f.path = fs::relative(paths[i], dir).generic_string();
        if (!meta.contains(f.path)) throw Error(ErrorCode::invalid_config, "no metadata for " + f.path);
        const auto& m = meta[f.path];
        try {
            f.last_updated = parse_date(m.at("last_updated").get<std::string>());
            f.official = m.value("official", false);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::invalid_config, "metadata for " + f.path + ": " + e.what());
        }
        auto contents = text::read_file(paths[i].string());
        if (paths[i].extension() == ".ipynb") {
            f.kind = FileKind::notebook;
            try {
                f.cells = parse_notebook(contents);
            } catch (const Error& e) {
                throw Error(e.code(), f.path + ": " + e.detail());
            }
        } else {
            f.kind = FileKind::source;
            f.text = std::move(contents);
        }
    });
    std::sort(files.begin(), files.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    return files;
}

std::vector<TrainChunk> read_chunks_jsonl(const std::string& path) {
    std::vector<TrainChunk> out;
    std::size_t line_no = 0;
    const auto contents = text::read_file(path);
    for (const auto line : text::split_lines(contents)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(nlohmann::json::parse(line).get<TrainChunk>());
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::invalid_config, path + " line " + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(e.code(), path + " line " + std::to_string(line_no) + ": " + e.detail());
        }
    }
    return out;
}

void write_chunks_jsonl(const std::string& path, const std::vector<TrainChunk>& chunks) {
    std::string out;
    for (const auto& c : chunks) {
        out += nlohmann::json(c).dump();
        out += '\n';
    }
    text::write_file(path, out);
}

} // namespace qforge::dataprep
