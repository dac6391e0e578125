#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "critex/backend.hpp"
#include "critex/celex.hpp"
#include "critex/prompts.hpp"
#include "critex/rag.hpp"
#include "critex/schema.hpp"

namespace critex::enrich {

struct FetchFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConverterFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Downloads a CELEX document as PDF bytes.
class Fetcher {
  public:
    virtual ~Fetcher() = default;
    virtual std::string fetch_pdf(const celex::CelexId& id) = 0;
};

class HttpFetcher : public Fetcher {
  public:
    explicit HttpFetcher(std::string base_url, int timeout_seconds = 60);
    std::string fetch_pdf(const celex::CelexId& id) override;

  private:
    std::string base_url_;
    int timeout_seconds_;
};

/// External PDF-to-Markdown converter invoked as a command template with
/// {input} and {output} placeholders.
class Converter {
  public:
    explicit Converter(std::string command_template) : command_(std::move(command_template)) {}
    void convert(const std::filesystem::path& pdf, const std::filesystem::path& markdown) const;

  private:
    std::string command_;
};

/// Disk cache: cache/<celex>.pdf and cache/<celex>.md. A markdown cache
/// hit skips both fetch and conversion.
class DocumentCache {
  public:
    explicit DocumentCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::optional<std::string> cached_markdown(const std::string& doc_id) const;
    std::filesystem::path markdown_path(const std::string& doc_id) const;
    std::filesystem::path pdf_path(const std::string& doc_id) const;
    void store_markdown(const std::string& doc_id, const std::string& markdown) const;
    const std::filesystem::path& dir() const { return dir_; }

  private:
    std::filesystem::path dir_;
};

/// Fetch + convert with caching. Throws FetchFailed / ConverterFailed.
std::string acquire_document(const celex::CelexId& id, DocumentCache& cache, Fetcher* fetcher,
                             const Converter* converter);

struct LoopState {
    int iteration = 0;  // 1..3
    std::string query;
    std::vector<std::string> gaps;
    double confidence = 0;
};

struct RefineOptions {
    double confidence_threshold = 0.75;
    int max_iterations = 3;
    int top_k = 5;
    int k_rrf = rag::kDefaultRrfK;
};

struct CriterionContext {
    std::string criterion_id;
    std::string criterion_text;
    std::string activity_name;
    std::string objective;
    std::string section;      // e.g. "substantial contribution"
    std::string article_ref;  // article/section named by the criterion, may be empty
    std::string doc_label;    // celex id or internal section label
};

/// Rewrites a criterion into a retrieval-optimized question. The rewrite
/// must not invent article references: the post-check rejects outputs
/// naming articles absent from the criterion, re-asks once, then falls
/// back to the raw criterion text.
std::string rewrite_query(const CriterionContext& ctx, backend::LlmBackend& llm,
                          const prompts::PromptLibrary& lib);

struct RefineResult {
    std::vector<int> relevant_chunks;  // ordinals into the index
    LoopState state;
    int backend_calls = 0;
};

/// Iterative criterion-conditioned retrieval: retrieve, evaluate with the
/// backend, refine the query from reported gaps while confidence stays
/// below threshold, at most three iterations. Returns the best
/// iteration's relevant chunks.
RefineResult refine_loop(const CriterionContext& ctx, const std::string& initial_query,
                         const rag::DocIndex& index, backend::LlmBackend& llm,
                         const prompts::PromptLibrary& lib, const RefineOptions& options = {});

struct QuoteViolation {
    std::string span;    // offending summary span
    std::string reason;  // unquoted_verbatim | quote_too_long
};

/// Deterministic guardrail: every contiguous span of >= min_span_tokens
/// summary tokens appearing verbatim in a chunk must sit inside
/// quotation marks, and no quoted span may exceed max_quote_words.
std::vector<QuoteViolation> check_quote_limits(const std::string& summary,
                                               const std::vector<std::string>& chunk_texts,
                                               int min_span_tokens = 15,
                                               int max_quote_words = 100);

struct SummarizeResult {
    schema::EnrichmentRecord record;
    std::vector<QuoteViolation> violations;  // remaining after the re-ask
    bool re_asked = false;
    int backend_calls = 0;
};

/// Quote-limited summarization of the retrieved chunks. A quote-limit
/// violation triggers exactly one re-ask; persistent violations are kept
/// on the record as notes rather than failing.
SummarizeResult summarize(const CriterionContext& ctx, const std::vector<std::string>& chunk_texts,
                          backend::LlmBackend& llm, const prompts::PromptLibrary& lib);

struct EnrichOptions {
    bool offline = false;
    std::string internal_doc_id = "annex";  // cache key for this-Annex references
    std::filesystem::path index_dir;        // persisted chunk stores; empty = in-memory only
    rag::Bm25Params bm25;
    rag::ChunkOptions chunking;
    RefineOptions refine;
};

/// How a reference routes through enrichment.
enum class SourceRoute { Celex, InternalSection, Paywalled, Skipped };
SourceRoute classify_source(const std::optional<std::string>& celex_id, const std::string& text);

/// Audit record per criterion-source pair, for calibration reports.
struct EnrichmentAudit {
    std::string criterion_id;
    std::string source_label;
    std::string status;
    int iterations = 0;
    double retrieval_confidence = 0;
    double summary_confidence = 0;
};

/// Resolves every must_be_fetched reference and footnote item in the
/// tree into an inline EnrichmentRecord. Network or index failures
/// downgrade to skipped; the batch never aborts.
std::vector<EnrichmentAudit> enrich_tree(schema::CriterionNode& root,
                                         const std::string& activity_name,
                                         const std::string& objective, DocumentCache& cache,
                                         Fetcher* fetcher, const Converter* converter,
                                         backend::LlmBackend& llm,
                                         const prompts::PromptLibrary& lib,
                                         rag::EmbeddingBackend* embeddings,
                                         const EnrichOptions& options);

}  // namespace critex::enrich
