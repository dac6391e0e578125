#include "critex/enrich.hpp"

#include <algorithm>
#include <cstdlib>
#include <regex>
#include <set>

#include "critex/io.hpp"
#include "critex/text.hpp"

namespace critex::enrich {

namespace {

using nlohmann::json;

std::vector<std::string> article_refs_in(const std::string& s) {
    static const std::regex re(R"((Article|Annex|Appendix|Section)\s+([0-9IVXLC]+[0-9a-z]*))");
    std::vector<std::string> out;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
        out.push_back(text::to_lower((*it)[1].str() + " " + (*it)[2].str()));
    }
    return out;
}

}  // namespace

void Converter::convert(const std::filesystem::path& pdf, const std::filesystem::path& markdown) const {
    std::string cmd = text::replace_all(command_, "{input}", pdf.string());
    cmd = text::replace_all(cmd, "{output}", markdown.string());
    int rc = std::system(cmd.c_str());
    if (rc != 0 || !std::filesystem::exists(markdown)) {
        throw ConverterFailed("converter command failed (" + std::to_string(rc) + "): " + cmd);
    }
}

std::filesystem::path DocumentCache::markdown_path(const std::string& doc_id) const {
    return dir_ / (doc_id + ".md");
}

std::filesystem::path DocumentCache::pdf_path(const std::string& doc_id) const {
    return dir_ / (doc_id + ".pdf");
}

std::optional<std::string> DocumentCache::cached_markdown(const std::string& doc_id) const {
    auto path = markdown_path(doc_id);
    if (!std::filesystem::exists(path)) return std::nullopt;
    return io::read_file(path);
}

void DocumentCache::store_markdown(const std::string& doc_id, const std::string& markdown) const {
    io::write_file(markdown_path(doc_id), markdown);
}

std::string acquire_document(const celex::CelexId& id, DocumentCache& cache, Fetcher* fetcher,
                             const Converter* converter) {
    const std::string doc_id = id.render();
    if (auto cached = cache.cached_markdown(doc_id)) return *cached;
    if (!fetcher) throw FetchFailed("no fetcher configured and no cached copy of " + doc_id);

    auto pdf_path = cache.pdf_path(doc_id);
    if (!std::filesystem::exists(pdf_path)) {
        std::string pdf = fetcher->fetch_pdf(id);
        io::write_file(pdf_path, pdf);
    }
    if (!converter) throw ConverterFailed("no converter configured for " + doc_id);
    converter->convert(pdf_path, cache.markdown_path(doc_id));
    return io::read_file(cache.markdown_path(doc_id));
}

std::string rewrite_query(const CriterionContext& ctx, backend::LlmBackend& llm,
                          const prompts::PromptLibrary& lib) {
    backend::CompletionRequest request;
    request.system = lib.render("rag_rewrite_system", {});
    request.user = lib.render("rag_rewrite", {{"query", ctx.criterion_text},
                                              {"activity_name", ctx.activity_name},
                                              {"objective", ctx.objective},
                                              {"criteria_section", ctx.section},
                                              {"article_ref", ctx.article_ref}});

    auto allowed = article_refs_in(ctx.criterion_text);
    auto acceptable = [&](const std::string& question) {
        for (const auto& ref : article_refs_in(question)) {
            if (std::find(allowed.begin(), allowed.end(), ref) == allowed.end()) return false;
        }
        return !text::normalize_ws(question).empty();
    };

    try {
        json reply = backend::complete_json(llm, request);
        std::string question = reply.value("question", std::string{});
        if (acceptable(question)) return text::normalize_ws(question);
        backend::CompletionRequest retry = request;
        retry.user += "\n\nNEVER invent references: only mention Articles/Appendices/Annexes that "
                      "appear in the criterion text. Try again.";
        reply = backend::complete_json(llm, retry);
        question = reply.value("question", std::string{});
        if (acceptable(question)) return text::normalize_ws(question);
    } catch (const std::exception&) {
        // fall through to the raw criterion text
    }
    return text::normalize_ws(ctx.criterion_text);
}

RefineResult refine_loop(const CriterionContext& ctx, const std::string& initial_query,
                         const rag::DocIndex& index, backend::LlmBackend& llm,
                         const prompts::PromptLibrary& lib, const RefineOptions& options) {
    RefineResult result;
    std::string query = initial_query;
    double best_confidence = -1;

    for (int iteration = 1; iteration <= options.max_iterations; ++iteration) {
        auto retrieved = index.retrieve(query, options.top_k, options.k_rrf);

        std::string passages;
        for (const auto& r : retrieved) {
            passages += "[" + std::to_string(r.ordinal) + "] " + index.chunk(r.ordinal).text + "\n";
        }

        double confidence = 0;
        std::vector<int> relevant;
        std::vector<std::string> gaps;
        ++result.backend_calls;
        try {
            backend::CompletionRequest request;
            request.system = lib.render("rag_evaluate_system", {});
            request.user = lib.render("rag_evaluate", {{"criterion", ctx.criterion_text},
                                                       {"celex_id", ctx.doc_label},
                                                       {"passages", passages}});
            json reply = backend::complete_json(llm, request);
            confidence = reply.value("confidence", 0.0);
            for (const auto& p : reply.value("relevant_passages", json::array())) {
                relevant.push_back(p.get<int>());
            }
            for (const auto& g : reply.value("gaps", json::array())) {
                gaps.push_back(g.get<std::string>());
            }
        } catch (const std::exception&) {
            // Evaluation parse failure counts as confidence 0.
            confidence = 0;
        }
        if (relevant.empty()) {
            for (const auto& r : retrieved) relevant.push_back(r.ordinal);
        }

        result.state.iteration = iteration;
        result.state.query = query;
        result.state.gaps = gaps;
        result.state.confidence = confidence;
        if (confidence > best_confidence) {
            best_confidence = confidence;
            result.relevant_chunks = relevant;
        }

        if (confidence >= options.confidence_threshold || iteration == options.max_iterations) break;

        ++result.backend_calls;
        try {
            backend::CompletionRequest request;
            request.system = lib.render("rag_refine_system", {});
            request.user = lib.render("rag_refine",
                                      {{"original_query", query}, {"gaps", text::join(gaps, "; ")}});
            std::string refined = text::normalize_ws(llm.complete(request));
            if (!refined.empty()) query = refined;
        } catch (const std::exception&) {
            // Keep the previous query when refinement fails.
        }
    }
    return result;
}

std::vector<QuoteViolation> check_quote_limits(const std::string& summary,
                                               const std::vector<std::string>& chunk_texts,
                                               int min_span_tokens, int max_quote_words) {
    std::vector<QuoteViolation> violations;
    auto summary_tokens = text::word_tokens_with_offsets(summary);

    // Quoted regions between straight double quotes.
    std::vector<std::pair<std::size_t, std::size_t>> quoted;
    {
        std::size_t open = std::string::npos;
        for (std::size_t i = 0; i < summary.size(); ++i) {
            if (summary[i] != '"') continue;
            if (open == std::string::npos) {
                open = i;
            } else {
                quoted.emplace_back(open, i);
                open = std::string::npos;
            }
        }
    }
    auto in_quotes = [&](std::size_t begin, std::size_t end) {
        return std::any_of(quoted.begin(), quoted.end(), [&](const auto& q) {
            return q.first <= begin && end <= q.second;
        });
    };

    for (const auto& [qb, qe] : quoted) {
        int words = static_cast<int>(text::word_tokens(summary.substr(qb, qe - qb)).size());
        if (words > max_quote_words) {
            violations.push_back({summary.substr(qb, std::min<std::size_t>(qe - qb, 80)),
                                  "quote_too_long"});
        }
    }

    // Longest verbatim overlap with any chunk, per summary start token.
    std::vector<std::vector<std::string>> chunk_token_lists;
    for (const auto& chunk : chunk_texts) chunk_token_lists.push_back(text::word_tokens(chunk));

    std::size_t i = 0;
    while (i < summary_tokens.size()) {
        std::size_t best_len = 0;
        for (const auto& chunk_tokens : chunk_token_lists) {
            for (std::size_t j = 0; j < chunk_tokens.size(); ++j) {
                if (chunk_tokens[j] != summary_tokens[i].token) continue;
                std::size_t len = 0;
                while (i + len < summary_tokens.size() && j + len < chunk_tokens.size() &&
                       summary_tokens[i + len].token == chunk_tokens[j + len]) {
                    ++len;
                }
                best_len = std::max(best_len, len);
            }
        }
        if (best_len >= static_cast<std::size_t>(min_span_tokens)) {
            std::size_t begin = summary_tokens[i].begin;
            std::size_t end = summary_tokens[i + best_len - 1].end;
            if (!in_quotes(begin, end)) {
                violations.push_back({summary.substr(begin, std::min<std::size_t>(end - begin, 80)),
                                      "unquoted_verbatim"});
            }
            i += best_len;
        } else {
            ++i;
        }
    }
    return violations;
}

SummarizeResult summarize(const CriterionContext& ctx, const std::vector<std::string>& chunk_texts,
                          backend::LlmBackend& llm, const prompts::PromptLibrary& lib) {
    SummarizeResult result;
    std::string passages;
    for (std::size_t i = 0; i < chunk_texts.size(); ++i) {
        passages += "[" + std::to_string(i) + "] " + chunk_texts[i] + "\n";
    }

    auto ask = [&](bool remind) {
        backend::CompletionRequest request;
        request.system = lib.render("rag_summarize_system", {});
        request.user = lib.render("rag_summarize", {{"criterion", ctx.criterion_text},
                                                    {"celex_id", ctx.doc_label},
                                                    {"passages", passages}});
        if (remind) {
            request.user += "\n\nYour previous summary violated the quote limit. Quote verbatim "
                            "source spans in quotation marks and keep each direct quote under "
                            "100 words.";
        }
        ++result.backend_calls;
        return backend::complete_json(llm, request);
    };

    auto fill = [&](const json& reply) {
        schema::EnrichmentRecord record;
        record.status = schema::EnrichStatus::Retrieved;
        record.summary = reply.contains("text") ? reply.value("text", std::string{})
                                                : reply.value("summary", std::string{});
        for (const auto& f : reply.value("key_facts", json::array())) {
            record.key_facts.push_back(f.get<std::string>());
        }
        for (const auto& t : reply.value("thresholds", json::array())) {
            record.thresholds.push_back(t.get<std::string>());
        }
        record.confidence = reply.value("confidence", 0.0);
        return record;
    };

    result.record = fill(ask(false));
    auto violations = check_quote_limits(result.record.summary, chunk_texts);
    if (!violations.empty()) {
        // Exactly one re-ask; persistent violations are kept as notes.
        result.re_asked = true;
        result.record = fill(ask(true));
        result.violations = check_quote_limits(result.record.summary, chunk_texts);
    }
    return result;
}

SourceRoute classify_source(const std::optional<std::string>& celex_id, const std::string& text) {
    if (celex_id && !celex_id->empty()) return SourceRoute::Celex;
    static const std::regex standard_re(R"(\b(ISO|EN|IEC)\s*[0-9]{2,})");
    if (std::regex_search(text, standard_re)) return SourceRoute::Paywalled;
    static const std::regex internal_re(R"((of this Annex|of the Annex|this Section|^Section\s+[0-9]))",
                                        std::regex::icase);
    if (std::regex_search(text, internal_re)) return SourceRoute::InternalSection;
    return SourceRoute::Skipped;
}

namespace {

struct EnrichmentEngine {
    DocumentCache& cache;
    Fetcher* fetcher;
    const Converter* converter;
    backend::LlmBackend& llm;
    const prompts::PromptLibrary& lib;
    rag::EmbeddingBackend* embeddings;
    const EnrichOptions& options;
    std::string activity_name;
    std::string objective;
    std::vector<EnrichmentAudit>* audits;

    std::map<std::string, std::shared_ptr<rag::DocIndex>> index_cache;

    std::shared_ptr<rag::DocIndex> index_for(const std::string& doc_id, const std::string& markdown) {
        auto it = index_cache.find(doc_id);
        if (it != index_cache.end()) return it->second;
        auto chunks = rag::chunk_document(markdown, doc_id, options.chunking);
        auto index = std::make_shared<rag::DocIndex>(std::move(chunks), options.bm25, embeddings);
        if (!options.index_dir.empty()) persist_index(doc_id, *index);
        index_cache[doc_id] = index;
        return index;
    }

    // index/<doc>/: chunk store plus a manifest recording every scoring
    // parameter, for reproducibility audits.
    void persist_index(const std::string& doc_id, const rag::DocIndex& index) const {
        try {
            auto dir = options.index_dir / doc_id;
            nlohmann::ordered_json chunk_store = nlohmann::ordered_json::array();
            for (const auto& chunk : index.chunks()) {
                chunk_store.push_back({{"ordinal", chunk.ordinal},
                                       {"heading_path", chunk.heading_path},
                                       {"token_count", chunk.token_count},
                                       {"text", chunk.text}});
            }
            io::write_file(dir / "chunks.json", chunk_store.dump(2) + "\n");
            nlohmann::ordered_json manifest;
            for (const auto& [key, value] : index.manifest()) manifest[key] = value;
            manifest["chunk_budget"] = options.chunking.token_budget;
            manifest["chunk_overlap"] = options.chunking.overlap;
            manifest["rrf_k"] = options.refine.k_rrf;
            io::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
        } catch (const std::exception&) {
            // Index persistence is an audit artifact; never fail the run.
        }
    }

    schema::EnrichmentRecord enrich_one(const std::string& criterion_id,
                                        const std::string& criterion_text,
                                        const std::optional<std::string>& celex_id,
                                        const std::string& source_text) {
        EnrichmentAudit audit;
        audit.criterion_id = criterion_id;
        audit.source_label = celex_id ? *celex_id : source_text;

        schema::EnrichmentRecord record;
        SourceRoute route = classify_source(celex_id, source_text);
        switch (route) {
            case SourceRoute::Paywalled:
                record.status = schema::EnrichStatus::Paywalled;
                audit.status = "paywalled";
                audits->push_back(audit);
                return record;
            case SourceRoute::Skipped:
                record.status = schema::EnrichStatus::Skipped;
                audit.status = "skipped";
                audits->push_back(audit);
                return record;
            case SourceRoute::Celex:
            case SourceRoute::InternalSection:
                break;
        }

        try {
            std::string doc_id;
            std::string markdown;
            if (route == SourceRoute::Celex) {
                auto parsed = celex::CelexId::parse(*celex_id);
                if (!parsed) throw FetchFailed("malformed celex id " + *celex_id);
                doc_id = parsed->render();
                if (options.offline) {
                    auto cached = cache.cached_markdown(doc_id);
                    if (!cached) throw FetchFailed("offline and not cached: " + doc_id);
                    markdown = *cached;
                } else {
                    markdown = acquire_document(*parsed, cache, fetcher, converter);
                }
            } else {
                doc_id = options.internal_doc_id;
                auto cached = cache.cached_markdown(doc_id);
                if (!cached) throw FetchFailed("internal corpus not cached: " + doc_id);
                markdown = *cached;
            }

            auto index = index_for(doc_id, markdown);

            CriterionContext ctx;
            ctx.criterion_id = criterion_id;
            ctx.criterion_text = criterion_text;
            ctx.activity_name = activity_name;
            ctx.objective = objective;
            ctx.section = "technical screening criteria";
            ctx.article_ref = source_text;
            ctx.doc_label = route == SourceRoute::Celex ? doc_id : source_text;

            std::string query = rewrite_query(ctx, llm, lib);
            auto refined = refine_loop(ctx, query, *index, llm, lib, options.refine);

            std::vector<std::string> chunk_texts;
            for (int ordinal : refined.relevant_chunks) {
                if (ordinal >= 0 && ordinal < static_cast<int>(index->chunks().size())) {
                    chunk_texts.push_back(index->chunk(ordinal).text);
                }
            }
            if (chunk_texts.empty()) {
                record.status = schema::EnrichStatus::Skipped;
                audit.status = "skipped";
                audit.iterations = refined.state.iteration;
                audits->push_back(audit);
                return record;
            }

            auto summarized = summarize(ctx, chunk_texts, llm, lib);
            record = summarized.record;
            audit.status = "retrieved";
            audit.iterations = refined.state.iteration;
            audit.retrieval_confidence = refined.state.confidence;
            audit.summary_confidence = record.confidence;
            audits->push_back(audit);
            return record;
        } catch (const std::exception&) {
            record = schema::EnrichmentRecord{};
            record.status = schema::EnrichStatus::Skipped;
            audit.status = "skipped";
            audits->push_back(audit);
            return record;
        }
    }

    void walk(schema::CriterionNode& node) {
        if (node.references) {
            for (auto& source : node.references->sources) {
                if (source.type == schema::RefType::MustBeFetched && !source.enrichment) {
                    source.enrichment = enrich_one(node.criterion_id, node.verbatim_text,
                                                   source.celex_id, source.text);
                }
            }
        }
        for (auto& footnote : node.footnotes) {
            for (auto& item : footnote.items) {
                if (item.type == schema::RefType::MustBeFetched && !item.enrichment) {
                    item.enrichment =
                        enrich_one(node.criterion_id, node.verbatim_text, item.celex_id, item.title);
                }
            }
        }
        for (auto& child : node.sub_criteria) walk(child);
    }
};

}  // namespace

std::vector<EnrichmentAudit> enrich_tree(schema::CriterionNode& root,
                                         const std::string& activity_name,
                                         const std::string& objective, DocumentCache& cache,
                                         Fetcher* fetcher, const Converter* converter,
                                         backend::LlmBackend& llm,
                                         const prompts::PromptLibrary& lib,
                                         rag::EmbeddingBackend* embeddings,
                                         const EnrichOptions& options) {
    std::vector<EnrichmentAudit> audits;
    EnrichmentEngine engine{cache,      fetcher,  converter, llm,    lib,
                            embeddings, options,  activity_name,     objective, &audits,
                            {}};
    engine.walk(root);
    return audits;
}

}  // namespace critex::enrich
