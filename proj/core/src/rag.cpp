#include "critex/rag.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "critex/text.hpp"

namespace critex::rag {

namespace {

int count_budget_tokens(const std::string& s) {
    // Budgeting token = whitespace-delimited word.
    int count = 0;
    bool in_word = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++count;
        }
    }
    return count;
}

bool is_heading_line(const std::string& line, std::string& title, int& level) {
    static const std::regex md_heading(R"(^(#{1,6})\s+(.*)$)");
    static const std::regex article(R"(^Article\s+\d+[a-z]?\s*$)");
    std::smatch m;
    std::string trimmed = text::normalize_ws(line);
    if (std::regex_match(trimmed, m, md_heading)) {
        title = text::normalize_ws(m[2].str());
        level = static_cast<int>(m[1].str().size());
        return true;
    }
    if (std::regex_match(trimmed, m, article)) {
        // Bare "Article N" lines act as deep headings.
        title = trimmed;
        level = 7;
        return true;
    }
    return false;
}

std::vector<std::string> tail_words(const std::string& s, int n) {
    auto words = text::split(text::normalize_ws(s), ' ');
    if (static_cast<int>(words.size()) <= n) return words;
    return {words.end() - n, words.end()};
}

}  // namespace

std::vector<Chunk> chunk_document(const std::string& markdown, const std::string& doc_id,
                                  const ChunkOptions& options) {
    struct Block {
        std::string text;
        std::vector<std::string> heading_path;
    };

    std::vector<Block> blocks;
    std::vector<std::pair<int, std::string>> heading_stack;  // (level, title)
    std::string paragraph;

    auto current_heading_path = [&]() {
        std::vector<std::string> path;
        for (const auto& [_, title] : heading_stack) path.push_back(title);
        return path;
    };
    auto flush_paragraph = [&]() {
        std::string cleaned = text::normalize_ws(paragraph);
        paragraph.clear();
        if (cleaned.empty()) return;
        blocks.push_back(Block{cleaned, current_heading_path()});
    };

    for (const auto& line : text::split(markdown, '\n')) {
        std::string title;
        int level = 0;
        if (is_heading_line(line, title, level)) {
            flush_paragraph();
            while (!heading_stack.empty() && heading_stack.back().first >= level) {
                heading_stack.pop_back();
            }
            heading_stack.emplace_back(level, title);
            continue;
        }
        if (text::normalize_ws(line).empty()) {
            flush_paragraph();
        } else {
            paragraph += line;
            paragraph += " ";
        }
    }
    flush_paragraph();

    if (blocks.empty()) {
        std::string whole = text::normalize_ws(markdown);
        if (whole.empty()) return {};
        return {Chunk{doc_id, 0, whole, {}, count_budget_tokens(whole)}};
    }

    std::vector<Chunk> chunks;
    std::string current;
    std::vector<std::string> current_path;
    auto flush_chunk = [&]() {
        std::string cleaned = text::normalize_ws(current);
        if (!cleaned.empty()) {
            chunks.push_back(Chunk{doc_id, static_cast<int>(chunks.size()), cleaned, current_path,
                                   count_budget_tokens(cleaned)});
        }
        current.clear();
    };

    for (const auto& block : blocks) {
        if (block.heading_path != current_path) {
            // Headings are hard split points; articles and sections never
            // share a chunk.
            flush_chunk();
            current_path = block.heading_path;
        }
        const int combined = count_budget_tokens(current) + count_budget_tokens(block.text);
        if (!current.empty() && combined > options.token_budget) {
            // Budget overflow inside one heading scope: keep an overlap
            // window from the tail of the closing chunk.
            auto overlap = tail_words(current, options.overlap);
            flush_chunk();
            current = text::join(overlap, " ");
            if (!current.empty()) current += " ";
        }
        current += block.text;
        current += " ";
    }
    flush_chunk();
    return chunks;
}

Bm25Index::Bm25Index(const std::vector<Chunk>& chunks, Bm25Params params) : params_(params) {
    double total = 0;
    for (const auto& chunk : chunks) {
        std::map<std::string, int> tf;
        auto tokens = text::word_tokens(chunk.text);
        for (const auto& tok : tokens) ++tf[tok];
        for (const auto& [term, _] : tf) ++doc_freq_[term];
        doc_lengths_.push_back(static_cast<int>(tokens.size()));
        total += static_cast<double>(tokens.size());
        doc_tokens_.push_back(std::move(tf));
    }
    avg_length_ = doc_tokens_.empty() ? 0 : total / static_cast<double>(doc_tokens_.size());
}

double Bm25Index::score(const std::string& query, int ordinal) const {
    if (ordinal < 0 || ordinal >= static_cast<int>(doc_tokens_.size())) return 0;
    const auto& tf = doc_tokens_[static_cast<std::size_t>(ordinal)];
    const double n_docs = static_cast<double>(doc_tokens_.size());
    const double dl = doc_lengths_[static_cast<std::size_t>(ordinal)];
    double total = 0;
    for (const auto& term : text::word_tokens(query)) {
        auto dfit = doc_freq_.find(term);
        if (dfit == doc_freq_.end()) continue;
        auto tfit = tf.find(term);
        if (tfit == tf.end()) continue;
        const double df = dfit->second;
        const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
        const double f = tfit->second;
        const double denom =
            f + params_.k1 * (1.0 - params_.b + params_.b * dl / std::max(avg_length_, 1e-9));
        total += idf * (f * (params_.k1 + 1.0)) / denom;
    }
    return total;
}

std::vector<int> Bm25Index::ranked(const std::string& query, int top_k) const {
    std::vector<std::pair<double, int>> scored;
    for (int i = 0; i < static_cast<int>(doc_tokens_.size()); ++i) {
        double s = score(query, i);
        if (s > 0) scored.emplace_back(-s, i);  // negative for ascending sort
    }
    std::sort(scored.begin(), scored.end());
    std::vector<int> out;
    for (const auto& [_, ordinal] : scored) {
        out.push_back(ordinal);
        if (static_cast<int>(out.size()) >= top_k) break;
    }
    return out;
}

double max_sim(const TokenVectors& query, const TokenVectors& document) {
    double total = 0;
    for (const auto& q : query) {
        double best = 0;
        bool any = false;
        for (const auto& d : document) {
            double dot = 0;
            std::size_t n = std::min(q.size(), d.size());
            for (std::size_t i = 0; i < n; ++i) dot += static_cast<double>(q[i]) * d[i];
            if (!any || dot > best) {
                best = dot;
                any = true;
            }
        }
        if (any) total += best;
    }
    return total;
}

std::vector<std::pair<int, double>> rrf_fuse(const std::vector<std::vector<int>>& rank_lists,
                                             int k_rrf) {
    std::map<int, double> scores;
    for (const auto& list : rank_lists) {
        for (std::size_t rank = 0; rank < list.size(); ++rank) {
            scores[list[rank]] += 1.0 / (static_cast<double>(k_rrf) + static_cast<double>(rank + 1));
        }
    }
    std::vector<std::pair<int, double>> out(scores.begin(), scores.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return out;
}

DocIndex::DocIndex(std::vector<Chunk> chunks, Bm25Params params, EmbeddingBackend* embeddings)
    : chunks_(std::move(chunks)), bm25_(chunks_, params), embeddings_(embeddings) {
    if (embeddings_ && !chunks_.empty()) {
        std::vector<std::string> texts;
        texts.reserve(chunks_.size());
        for (const auto& c : chunks_) texts.push_back(c.text);
        chunk_vectors_ = embeddings_->embed(texts);
    }
}

const Chunk& DocIndex::chunk(int ordinal) const {
    return chunks_.at(static_cast<std::size_t>(ordinal));
}

std::vector<RetrievalResult> DocIndex::retrieve(const std::string& query, int k, int k_rrf) const {
    if (chunks_.empty()) throw EmptyIndex("retrieval over an empty document index");

    const int pool = std::max(k * 3, 10);
    std::vector<int> sparse = bm25_.ranked(query, pool);

    std::vector<int> dense;
    TokenVectors query_vectors;
    if (embeddings_) {
        query_vectors = embeddings_->embed({query}).at(0);
        std::vector<std::pair<double, int>> scored;
        for (int i = 0; i < static_cast<int>(chunks_.size()); ++i) {
            scored.emplace_back(-max_sim(query_vectors, chunk_vectors_[static_cast<std::size_t>(i)]),
                                i);
        }
        std::sort(scored.begin(), scored.end());
        for (const auto& [_, ordinal] : scored) {
            dense.push_back(ordinal);
            if (static_cast<int>(dense.size()) >= pool) break;
        }
    }

    std::vector<std::vector<int>> lists;
    lists.push_back(sparse);
    if (!dense.empty()) lists.push_back(dense);
    auto fused = rrf_fuse(lists, k_rrf);
    if (fused.empty() && !chunks_.empty()) {
        // Degenerate query with no term overlap: fall back to ordinal order.
        for (int i = 0; i < k && i < static_cast<int>(chunks_.size()); ++i) {
            fused.emplace_back(i, 0.0);
        }
    }

    auto rank_of = [](const std::vector<int>& list, int ordinal) -> int {
        auto it = std::find(list.begin(), list.end(), ordinal);
        return it == list.end() ? 0 : static_cast<int>(it - list.begin()) + 1;
    };

    std::vector<RetrievalResult> results;
    for (const auto& [ordinal, fused_score] : fused) {
        RetrievalResult r;
        r.ordinal = ordinal;
        r.sparse_rank = rank_of(sparse, ordinal);
        r.dense_rank = rank_of(dense, ordinal);
        r.fused_score = fused_score;
        if (embeddings_) {
            r.rerank_score = max_sim(query_vectors, chunk_vectors_[static_cast<std::size_t>(ordinal)]);
        }
        results.push_back(r);
        if (static_cast<int>(results.size()) >= std::max(k, 10)) break;
    }
    if (embeddings_) {
        std::stable_sort(results.begin(), results.end(), [](const auto& a, const auto& b) {
            return a.rerank_score > b.rerank_score;
        });
    }
    if (static_cast<int>(results.size()) > k) results.resize(static_cast<std::size_t>(k));
    return results;
}

std::map<std::string, std::string> DocIndex::manifest() const {
    std::map<std::string, std::string> m;
    m["bm25.k1"] = std::to_string(bm25_.params().k1);
    m["bm25.b"] = std::to_string(bm25_.params().b);
    m["tokenizer"] = "lowercase unicode-word split, no stemming";
    m["chunks"] = std::to_string(chunks_.size());
    m["dense"] = embeddings_ ? "per-token embedding backend" : "disabled (sparse-only)";
    return m;
}

}  // namespace critex::rag
