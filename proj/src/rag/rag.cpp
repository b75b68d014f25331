#include "qforge/rag/rag.hpp"

#include "qforge/error.hpp"
#include "qforge/text.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace qforge::rag {

std::string_view to_string(Corpus c) { return c == Corpus::api_docs ? "api_docs" : "algorithm_guides"; }

Corpus corpus_from_string(std::string_view s) {
    if (s == "api_docs") return Corpus::api_docs;
    if (s == "algorithm_guides") return Corpus::algorithm_guides;
    throw Error(ErrorCode::invalid_params, "unknown corpus '" + std::string(s) + "'");
}

std::vector<DocumentChunk> chunk_corpus(const std::vector<SourceDocument>& documents, std::size_t chunk_size,
                                        std::size_t overlap) {
    if (chunk_size == 0 || overlap >= chunk_size) {
        throw Error(ErrorCode::invalid_params, "need chunk_size > overlap >= 0");
    }
    const std::size_t step = chunk_size - overlap;
    std::vector<DocumentChunk> out;
    for (const auto& doc : documents) {
        const auto offsets = text::codepoint_offsets(doc.text);
        const std::size_t n = offsets.size() - 1;
        for (std::size_t start = 0; start < n; start += step) {
            const std::size_t end = std::min(start + chunk_size, n);
            DocumentChunk c;
            c.id = out.size();
            c.source = doc.path;
            c.corpus = doc.corpus;
            c.text = doc.text.substr(offsets[start], offsets[end] - offsets[start]);
            out.push_back(std::move(c));
            if (end == n) break;
        }
    }
    return out;
}

HashedBagOfWords::HashedBagOfWords(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw Error(ErrorCode::invalid_params, "embedding dimension must be positive");
}

std::string HashedBagOfWords::id() const { return "hashed-bow-" + std::to_string(dimension_); }

std::vector<float> HashedBagOfWords::embed(std::string_view s) const {
    std::vector<double> counts(dimension_, 0.0);
    auto word_char = [](unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; };
    std::size_t i = 0;
    while (i < s.size()) {
        if (!word_char(static_cast<unsigned char>(s[i]))) {
            ++i;
            continue;
        }
        std::uint64_t h = 14695981039346656037ull;
        while (i < s.size() && word_char(static_cast<unsigned char>(s[i]))) {
            const auto c = static_cast<unsigned char>(s[i]);
            h ^= c < 0x80 ? static_cast<unsigned char>(std::tolower(c)) : c;
            h *= 1099511628211ull;
            ++i;
        }
        counts[h % dimension_] += 1.0;
    }
    double norm = 0;
    for (double c : counts) norm += c * c;
    norm = std::sqrt(norm);
    std::vector<float> v(dimension_, 0.0f);
    if (norm > 0) {
        for (std::size_t d = 0; d < dimension_; ++d) v[d] = static_cast<float>(counts[d] / norm);
    }
    return v;
}

std::vector<DocumentChunk> embed_chunks(std::vector<DocumentChunk> chunks, const Embedder& embedder) {
    for (auto& c : chunks) {
        c.embedding = embedder.embed(c.text);
        if (c.embedding.size() != embedder.dimension()) {
            throw Error(ErrorCode::dimension_mismatch, "embedder " + embedder.id() + " returned " +
                                                           std::to_string(c.embedding.size()) + " values for chunk " +
                                                           std::to_string(c.id) + ", expected " +
                                                           std::to_string(embedder.dimension()));
        }
    }
    return chunks;
}

VectorIndex VectorIndex::build(const std::vector<SourceDocument>& documents, const Embedder& embedder,
                               std::size_t chunk_size, std::size_t overlap) {
    VectorIndex index;
    index.dimension = embedder.dimension();
    index.embedder_id = embedder.id();
    index.chunks = embed_chunks(chunk_corpus(documents, chunk_size, overlap), embedder);
    return index;
}

void VectorIndex::validate() const {
    if (dimension == 0) throw Error(ErrorCode::dimension_mismatch, "index dimension is zero");
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        if (chunks[i].id != i) throw Error(ErrorCode::invalid_params, "chunk ids must be dense from 0");
        if (chunks[i].embedding.size() != dimension) {
            throw Error(ErrorCode::dimension_mismatch, "chunk " + std::to_string(i) + " has a wrong-sized embedding");
        }
        if (chunks[i].text.empty()) throw Error(ErrorCode::invalid_params, "chunk text must be nonempty");
    }
}

namespace {

constexpr char magic[4] = {'Q', 'F', 'R', 'G'};

template <typename T>
void put(std::string& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

void put_string(std::string& out, std::string_view s) {
    if (s.size() > 0xFFFFFFFFu) throw Error(ErrorCode::invalid_params, "string too long for index format");
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.append(s);
}

class Reader {
public:
    explicit Reader(std::string data) : data_(std::move(data)) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T value = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            value |= static_cast<T>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(T);
        return value;
    }
    std::string get_string() {
        const auto n = get<std::uint32_t>();
        need(n);
        auto s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::string_view raw(std::size_t n) {
        need(n);
        std::string_view s(data_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) throw Error(ErrorCode::io_error, "index file is truncated");
    }
    std::string data_;
    std::size_t pos_ = 0;
};

} // namespace

void VectorIndex::save(const std::string& path) const {
    validate();
    std::string out(magic, sizeof magic);
    put<std::uint32_t>(out, version);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(dimension));
    put_string(out, embedder_id);
    put<std::uint64_t>(out, chunks.size());
    for (const auto& c : chunks) {
        put<std::uint64_t>(out, c.id);
        put<std::uint8_t>(out, static_cast<std::uint8_t>(c.corpus));
        put_string(out, c.source);
        put_string(out, c.text);
        for (float f : c.embedding) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(f));
    }
    text::write_file(path, out);
}

VectorIndex VectorIndex::load(const std::string& path) {
    Reader in(text::read_file(path));
    if (in.raw(sizeof magic) != std::string_view(magic, sizeof magic)) {
        throw Error(ErrorCode::io_error, path + " is not a qforge index");
    }
    VectorIndex index;
    index.version = in.get<std::uint32_t>();
    if (index.version != format_version) {
        throw Error(ErrorCode::io_error, "unsupported index version " + std::to_string(index.version));
    }
    index.dimension = in.get<std::uint32_t>();
    index.embedder_id = in.get_string();
    const auto count = in.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
        DocumentChunk c;
        c.id = in.get<std::uint64_t>();
        const auto corpus = in.get<std::uint8_t>();
        if (corpus > 1) throw Error(ErrorCode::io_error, "bad corpus tag in index");
        c.corpus = static_cast<Corpus>(corpus);
        c.source = in.get_string();
        c.text = in.get_string();
        c.embedding.resize(index.dimension);
        for (auto& f : c.embedding) f = std::bit_cast<float>(in.get<std::uint32_t>());
        index.chunks.push_back(std::move(c));
    }
    if (!in.done()) throw Error(ErrorCode::io_error, "trailing bytes in index file");
    index.validate();
    return index;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += double(a[i]) * double(b[i]);
        na += double(a[i]) * double(a[i]);
        nb += double(b[i]) * double(b[i]);
    }
    if (na == 0 || nb == 0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<ScoredChunk> retrieve(const VectorIndex& index, const std::vector<float>& query, std::size_t k) {
    if (index.chunks.empty()) throw Error(ErrorCode::empty_index, "index has no chunks");
    if (k == 0) throw Error(ErrorCode::invalid_params, "k must be at least 1");
    if (query.size() != index.dimension) {
        throw Error(ErrorCode::dimension_mismatch, "query has " + std::to_string(query.size()) +
                                                       " dimensions, index has " + std::to_string(index.dimension));
    }
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(index.chunks.size());
    for (std::size_t i = 0; i < index.chunks.size(); ++i) scored.emplace_back(cosine(query, index.chunks[i].embedding), i);
    const auto take = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                      [&](const auto& a, const auto& b) {
                          if (a.first != b.first) return a.first > b.first;
                          return index.chunks[a.second].id < index.chunks[b.second].id;
                      });
    std::vector<ScoredChunk> out;
    for (std::size_t i = 0; i < take; ++i) out.push_back({index.chunks[scored[i].second], scored[i].first});
    return out;
}

std::vector<ScoredChunk> retrieve(const VectorIndex& index, std::string_view query, std::size_t k,
                                  const Embedder& embedder) {
    if (embedder.id() != index.embedder_id) {
        throw Error(ErrorCode::invalid_config,
                    "index was built with " + index.embedder_id + ", query embedder is " + embedder.id());
    }
    return retrieve(index, embedder.embed(query), k);
}

std::string escape_header(std::string_view chunk_text) {
    return text::replace_all(chunk_text, context_header, "Context\\:");
}

std::string augment_prompt(const std::string& prompt, const std::vector<ScoredChunk>& results) {
    if (results.empty()) return prompt;
    std::string out(context_header);
    out += "\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& c = results[i].chunk;
        out += "--- [" + std::to_string(i + 1) + "] " + c.source + "\n";
        out += escape_header(c.text);
        if (out.back() != '\n') out += "\n";
    }
    out += "\n" + prompt;
    return out;
}

std::vector<SourceDocument> load_documents(const std::string& dir, Corpus fallback) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::io_error, "corpus directory not found: " + dir);
    std::vector<SourceDocument> docs;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = entry.path().extension().string();
        if (ext != ".md" && ext != ".txt" && ext != ".rst" && ext != ".py") continue;
        const auto rel = fs::relative(entry.path(), dir);
        SourceDocument d;
        d.path = rel.generic_string();
        d.text = text::read_file(entry.path().string());
        const auto top = rel.begin()->string();
        d.corpus = top == "api_docs" ? Corpus::api_docs : top == "algorithm_guides" ? Corpus::algorithm_guides : fallback;
        if (!d.text.empty()) docs.push_back(std::move(d));
    }
    std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    return docs;
}

} // namespace qforge::rag
