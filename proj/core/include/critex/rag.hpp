#pragma once

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace critex::rag {

/// One retrieval chunk. Chunks never cross an "Article N" heading and
/// ordinals are contiguous per document.
struct Chunk {
    std::string doc_id;
    int ordinal = 0;
    std::string text;
    std::vector<std::string> heading_path;
    int token_count = 0;  // whitespace-word budget tokens
};

struct ChunkOptions {
    int token_budget = 512;
    int overlap = 64;
};

/// Structure-aware splitting of Markdown: breaks at article/paragraph
/// headings, merges paragraphs up to the token budget with overlap
/// inside an article. A document without structure falls back to one
/// chunk. Empty-bodied headings produce no chunk.
std::vector<Chunk> chunk_document(const std::string& markdown, const std::string& doc_id,
                                  const ChunkOptions& options = {});

// ---------------------------------------------------------------------
// Sparse scoring
// ---------------------------------------------------------------------

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// Okapi BM25 with the +1-smoothed Robertson/Sparck Jones idf:
/// idf = ln(1 + (N - df + 0.5) / (df + 0.5)).
class Bm25Index {
  public:
    Bm25Index(const std::vector<Chunk>& chunks, Bm25Params params = {});

    double score(const std::string& query, int ordinal) const;
    /// Ordinals ranked by descending score; zero-score chunks excluded.
    std::vector<int> ranked(const std::string& query, int top_k) const;
    std::size_t size() const { return doc_tokens_.size(); }
    const Bm25Params& params() const { return params_; }

  private:
    Bm25Params params_;
    std::vector<std::map<std::string, int>> doc_tokens_;  // per-chunk term frequencies
    std::vector<int> doc_lengths_;
    std::map<std::string, int> doc_freq_;
    double avg_length_ = 0;
};

// ---------------------------------------------------------------------
// Dense scoring
// ---------------------------------------------------------------------

using TokenVectors = std::vector<std::vector<float>>;

/// Per-token embedding service. Absent backend means sparse-only mode.
class EmbeddingBackend {
  public:
    virtual ~EmbeddingBackend() = default;
    virtual int dimension() const = 0;
    virtual std::vector<TokenVectors> embed(const std::vector<std::string>& texts) = 0;
};

/// Factory for the remote per-token embedding endpoint.
std::unique_ptr<EmbeddingBackend> make_http_embedding_backend(const std::string& base_url);

/// Late-interaction MaxSim: sum over query token vectors of the maximum
/// dot product against any document token vector.
double max_sim(const TokenVectors& query, const TokenVectors& document);

// ---------------------------------------------------------------------
// Fusion and retrieval
// ---------------------------------------------------------------------

inline constexpr int kDefaultRrfK = 60;

struct RetrievalResult {
    int ordinal = 0;
    int sparse_rank = 0;  // 1-based; 0 when absent from the sparse list
    int dense_rank = 0;   // 1-based; 0 when absent from the dense list
    double fused_score = 0;
    double rerank_score = 0;
};

/// Reciprocal rank fusion: each item scores sum over contributing rank
/// lists of 1 / (k + rank). Ties break by ordinal.
std::vector<std::pair<int, double>> rrf_fuse(const std::vector<std::vector<int>>& rank_lists,
                                             int k_rrf = kDefaultRrfK);

struct EmptyIndex : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Per-document retrieval index: BM25 over chunks plus optional dense
/// token vectors served by an embedding backend (exact search at desk
/// scale).
class DocIndex {
  public:
    DocIndex(std::vector<Chunk> chunks, Bm25Params params = {},
             EmbeddingBackend* embeddings = nullptr);

    const std::vector<Chunk>& chunks() const { return chunks_; }
    const Chunk& chunk(int ordinal) const;
    bool dense_enabled() const { return embeddings_ != nullptr; }

    /// Hybrid retrieval: BM25 and dense lists fused by RRF, candidates
    /// reranked by MaxSim when dense vectors exist. Sparse-only mode
    /// degrades to the fused BM25 ranking. Throws EmptyIndex.
    std::vector<RetrievalResult> retrieve(const std::string& query, int k,
                                          int k_rrf = kDefaultRrfK) const;

    /// Parameters manifest for reproducibility records.
    std::map<std::string, std::string> manifest() const;

  private:
    std::vector<Chunk> chunks_;
    Bm25Index bm25_;
    EmbeddingBackend* embeddings_ = nullptr;
    std::vector<TokenVectors> chunk_vectors_;
};

}  // namespace critex::rag
