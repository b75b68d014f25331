#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace qforge::rag {

enum class Corpus : std::uint8_t { api_docs = 0, algorithm_guides = 1 };

std::string_view to_string(Corpus c);
Corpus corpus_from_string(std::string_view s);

struct SourceDocument {
    std::string path;
    std::string text;
    Corpus corpus = Corpus::api_docs;
};

struct DocumentChunk {
    std::uint64_t id = 0;
    std::string source;
    Corpus corpus = Corpus::api_docs;
    std::string text;
    std::vector<float> embedding;
};

inline constexpr std::size_t default_chunk_size = 1000;
inline constexpr std::size_t default_overlap = 200;
inline constexpr std::size_t default_k = 4;

/// Fixed windows of `chunk_size` code points advancing by chunk_size - overlap.
/// The last window of a document ends at its final code point and may be short.
/// Ids are assigned densely from 0 across all documents in input order.
std::vector<DocumentChunk> chunk_corpus(const std::vector<SourceDocument>& documents, std::size_t chunk_size,
                                        std::size_t overlap);

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dimension() const = 0;
    virtual std::string id() const = 0;
    virtual std::vector<float> embed(std::string_view text) const = 0;
};

/// Lower-cased word counts hashed (FNV-1a) into `dimension` buckets, L2-normalised.
/// Words are maximal runs of ASCII letters, digits, '_' and non-ASCII bytes.
class HashedBagOfWords final : public Embedder {
public:
    explicit HashedBagOfWords(std::size_t dimension = 512);
    std::size_t dimension() const override { return dimension_; }
    std::string id() const override;
    std::vector<float> embed(std::string_view text) const override;

private:
    std::size_t dimension_;
};

/// Embeds every chunk; throws dimension_mismatch if the embedder returns a
/// vector of any other length than its declared dimension.
std::vector<DocumentChunk> embed_chunks(std::vector<DocumentChunk> chunks, const Embedder& embedder);

struct VectorIndex {
    static constexpr std::uint32_t format_version = 1;

    std::uint32_t version = format_version;
    std::size_t dimension = 0;
    std::string embedder_id;
    std::vector<DocumentChunk> chunks;

    static VectorIndex build(const std::vector<SourceDocument>& documents, const Embedder& embedder,
                             std::size_t chunk_size = default_chunk_size, std::size_t overlap = default_overlap);
    /// Checks dimension, id density and embedding sizes.
    void validate() const;

    /// Binary layout, all integers little-endian:
    ///   "QFRG" u32 version  u32 dimension  u32 len + embedder_id  u64 count
    ///   per chunk: u64 id  u8 corpus  u32 len + source  u32 len + text  dimension x f32
    void save(const std::string& path) const;
    static VectorIndex load(const std::string& path);
};

struct ScoredChunk {
    DocumentChunk chunk;
    double score = 0;
};

/// Exact cosine ranking: descending score, ties by ascending id.
std::vector<ScoredChunk> retrieve(const VectorIndex& index, const std::vector<float>& query, std::size_t k);
/// Embeds the query with `embedder`, which must match the index's embedder id.
std::vector<ScoredChunk> retrieve(const VectorIndex& index, std::string_view query, std::size_t k,
                                  const Embedder& embedder);

double cosine(const std::vector<float>& a, const std::vector<float>& b);

inline constexpr std::string_view context_header = "Context:";

/// Prepends the chunk texts in rank order under a single context header.
/// Header text inside a chunk is escaped; no results leaves the prompt unchanged.
std::string augment_prompt(const std::string& prompt, const std::vector<ScoredChunk>& results);
std::string escape_header(std::string_view chunk_text);

/// Reads *.md, *.txt, *.rst and *.py files under `dir`. Files below a
/// top-level "api_docs" or "algorithm_guides" directory take that corpus;
/// all others take `fallback`. Paths are relative to `dir`, sorted.
std::vector<SourceDocument> load_documents(const std::string& dir, Corpus fallback = Corpus::api_docs);

} // namespace qforge::rag
