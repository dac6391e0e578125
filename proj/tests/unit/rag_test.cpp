#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "critex/rag.hpp"
#include "critex/text.hpp"

using namespace critex;
using namespace critex::rag;

namespace {

std::vector<Chunk> make_chunks(const std::vector<std::string>& texts) {
    std::vector<Chunk> chunks;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        Chunk c;
        c.doc_id = "doc";
        c.ordinal = static_cast<int>(i);
        c.text = texts[i];
        chunks.push_back(c);
    }
    return chunks;
}

// Independent reference scorer: same k1/b/idf formula, written directly
// from the textbook definition over raw token maps.
double reference_bm25(const std::string& query, const std::vector<std::string>& docs,
                      std::size_t doc, double k1, double b) {
    std::vector<std::map<std::string, int>> tf(docs.size());
    std::vector<int> lengths(docs.size());
    double total_length = 0;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        for (const auto& token : text::word_tokens(docs[d])) ++tf[d][token];
        int len = 0;
        for (const auto& [_, count] : tf[d]) len += count;
        lengths[d] = len;
        total_length += len;
    }
    const double avgdl = total_length / static_cast<double>(docs.size());
    double score = 0;
    for (const auto& term : text::word_tokens(query)) {
        int df = 0;
        for (const auto& per_doc : tf) df += per_doc.count(term) ? 1 : 0;
        if (df == 0) continue;
        auto it = tf[doc].find(term);
        if (it == tf[doc].end()) continue;
        const double n = static_cast<double>(docs.size());
        const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        const double f = it->second;
        score += idf * (f * (k1 + 1.0)) / (f + k1 * (1.0 - b + b * lengths[doc] / avgdl));
    }
    return score;
}

}  // namespace

TEST_CASE("chunking splits at article boundaries") {
    const std::string doc =
        "# Title\n\nArticle 1\n\nFirst article body.\n\nArticle 2\n\nSecond article body.\n\n"
        "Article 3\n\nThird article body.\n";
    auto chunks = chunk_document(doc, "d");
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[0].text == "First article body.");
    CHECK(chunks[1].text == "Second article body.");
    CHECK(chunks[2].heading_path.back() == "Article 3");
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        CHECK(chunks[i].ordinal == static_cast<int>(i));
    }
}

TEST_CASE("paragraphs coalesce within an article up to the token budget") {
    std::string doc = "## Article 7\n\n";
    for (int p = 0; p < 10; ++p) {
        doc += "paragraph " + std::to_string(p) + " has exactly seven budget tokens here.\n\n";
    }
    ChunkOptions options;
    options.token_budget = 512;
    auto chunks = chunk_document(doc, "d", options);
    REQUIRE(chunks.size() == 1);
    CHECK(chunks[0].token_count == 10 * 8);

    // A small budget forces splits with overlap carried forward.
    options.token_budget = 25;
    options.overlap = 5;
    auto split = chunk_document(doc, "d", options);
    CHECK(split.size() > 1);
    for (const auto& chunk : split) {
        CHECK(chunk.heading_path == std::vector<std::string>{"Article 7"});
        CHECK(chunk.token_count <= options.token_budget + options.overlap);
    }
    // Overlap: the tail of one chunk reappears at the head of the next.
    auto first_tokens = text::word_tokens(split[0].text);
    auto second_tokens = text::word_tokens(split[1].text);
    std::vector<std::string> tail(first_tokens.end() - 5, first_tokens.end());
    std::vector<std::string> head(second_tokens.begin(), second_tokens.begin() + 5);
    CHECK(tail == head);
}

TEST_CASE("degenerate markdown falls back to a single chunk; empty headings vanish") {
    auto whole = chunk_document("just unstructured text without headings", "d");
    REQUIRE(whole.size() == 1);
    CHECK(whole[0].ordinal == 0);

    auto empty_section = chunk_document("# A\n\n## Empty\n\n## Full\n\ncontent here\n", "d");
    REQUIRE(empty_section.size() == 1);
    CHECK(empty_section[0].text == "content here");

    CHECK(chunk_document("", "d").empty());
}

TEST_CASE("BM25 matches an independent reference implementation to 1e-9") {
    const std::vector<std::string> docs = {
        "carbon capture and storage of carbon dioxide",
        "renewable energy from solar photovoltaic technology",
        "greenhouse gas emissions from electricity generation",
        "leak detection and repair programmes for methane emissions",
        "energy and climate plans notified to the commission",
    };
    Bm25Params params;
    Bm25Index index(make_chunks(docs), params);
    const char* queries[] = {"carbon storage", "solar energy", "methane leak detection",
                             "climate plans", "electricity emissions", "absent-term"};
    for (const char* query : queries) {
        for (std::size_t d = 0; d < docs.size(); ++d) {
            CHECK(index.score(query, static_cast<int>(d)) ==
                  doctest::Approx(reference_bm25(query, docs, d, params.k1, params.b))
                      .epsilon(1e-12));
        }
    }
}

TEST_CASE("identical query ranks its own chunk first in sparse-only mode") {
    const std::vector<std::string> docs = {
        "transport of captured carbon dioxide by pipeline",
        "underground geological storage in characterised sites",
        "independent verification of monitoring plans",
    };
    DocIndex index(make_chunks(docs));
    auto results = index.retrieve(docs[1], 3);
    REQUIRE(!results.empty());
    CHECK(results[0].ordinal == 1);
    CHECK(results[0].sparse_rank == 1);
    CHECK(results[0].dense_rank == 0);  // sparse-only mode
}

TEST_CASE("RRF hand-computed examples") {
    // Item ranked first in both lists: 2/61.
    auto fused = rrf_fuse({{7, 3}, {7, 5}}, 60);
    REQUIRE(!fused.empty());
    CHECK(fused[0].first == 7);
    CHECK(fused[0].second == doctest::Approx(2.0 / 61.0).epsilon(1e-12));

    // Item present only in one list at rank 3: 1/63.
    auto single = rrf_fuse({{9, 8, 4}}, 60);
    CHECK(single[2].first == 4);
    CHECK(single[2].second == doctest::Approx(1.0 / 63.0).epsilon(1e-12));
}

TEST_CASE("RRF fused ranking equals brute force on randomized corpora") {
    std::mt19937 rng(42);
    for (int round = 0; round < 50; ++round) {
        const int n_chunks = 2 + static_cast<int>(rng() % 19);  // <= 20 chunks
        const int n_lists = 1 + static_cast<int>(rng() % 3);
        std::vector<std::vector<int>> lists(static_cast<std::size_t>(n_lists));
        for (auto& list : lists) {
            std::vector<int> pool(static_cast<std::size_t>(n_chunks));
            for (int i = 0; i < n_chunks; ++i) pool[static_cast<std::size_t>(i)] = i;
            std::shuffle(pool.begin(), pool.end(), rng);
            pool.resize(rng() % static_cast<unsigned>(n_chunks) + 1);
            list = pool;
        }
        const int k_rrf = 60;
        auto fused = rrf_fuse(lists, k_rrf);

        // Brute force recomputation.
        std::map<int, double> brute;
        for (const auto& list : lists) {
            for (std::size_t rank = 0; rank < list.size(); ++rank) {
                brute[list[rank]] += 1.0 / (k_rrf + static_cast<double>(rank + 1));
            }
        }
        REQUIRE(fused.size() == brute.size());
        for (std::size_t i = 0; i < fused.size(); ++i) {
            CHECK(fused[i].second == doctest::Approx(brute[fused[i].first]).epsilon(1e-12));
            if (i > 0) {
                // Non-increasing scores, ties by ordinal.
                CHECK((fused[i - 1].second > fused[i].second ||
                       (fused[i - 1].second == fused[i].second &&
                        fused[i - 1].first < fused[i].first)));
            }
        }
    }
}

TEST_CASE("MaxSim sums per-query-token maxima and never drops when a match is added") {
    TokenVectors query = {{1.0f, 0.0f}, {0.0f, 1.0f}};
    TokenVectors doc = {{0.5f, 0.0f}, {0.0f, 0.25f}};
    CHECK(max_sim(query, doc) == doctest::Approx(0.75));

    std::mt19937 rng(7);
    std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
    for (int round = 0; round < 100; ++round) {
        const int dim = 4;
        auto random_vectors = [&](int count) {
            TokenVectors out;
            for (int i = 0; i < count; ++i) {
                std::vector<float> v(dim);
                for (auto& x : v) x = dist(rng);
                out.push_back(v);
            }
            return out;
        };
        TokenVectors q = random_vectors(1 + static_cast<int>(rng() % 5));
        TokenVectors d = random_vectors(1 + static_cast<int>(rng() % 8));
        const double before = max_sim(q, d);

        // Appending a token vector equal to one of the query tokens can
        // only raise the score.
        TokenVectors extended = d;
        extended.push_back(q[rng() % q.size()]);
        CHECK(max_sim(q, extended) >= before - 1e-12);
    }
}

TEST_CASE("retrieval over an empty index is an error") {
    DocIndex index(std::vector<Chunk>{});
    CHECK_THROWS_AS(index.retrieve("anything", 3), EmptyIndex);
}

TEST_CASE("index manifest records the scoring parameters") {
    DocIndex index(make_chunks({"one chunk"}));
    auto manifest = index.manifest();
    CHECK(manifest.at("bm25.k1").substr(0, 3) == "1.2");
    CHECK(manifest.at("bm25.b").substr(0, 4) == "0.75");
    CHECK(manifest.at("dense") == "disabled (sparse-only)");
}
