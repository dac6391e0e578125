// Live HTTP integrations: chat-completion backend, EUR-Lex registry and
// PDF fetcher, per-token embedding service. None are exercised by the
// offline test suite; interfaces are covered by in-memory doubles.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <regex>

#include "critex/backend.hpp"
#include "critex/io.hpp"
#include "critex/celex.hpp"
#include "critex/enrich.hpp"
#include "critex/rag.hpp"

namespace critex {

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
    // scheme://host[:port] and path prefix
    auto scheme_end = url.find("://");
    std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) return {url, ""};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

namespace io {

std::string http_get(const std::string& url) {
    auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_read_timeout(60, 0);
    auto res = client.Get(path.empty() ? "/" : path);
    if (!res || res->status != 200) {
        throw IoError("GET " + url + " failed: " + (res ? std::to_string(res->status) : "no response"));
    }
    return res->body;
}

}  // namespace io

namespace backend {

HttpChatBackend::HttpChatBackend(std::string base_url, std::string model, std::string api_key,
                                 int timeout_seconds)
    : base_url_(std::move(base_url)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      timeout_seconds_(timeout_seconds) {}

std::string HttpChatBackend::complete(const CompletionRequest& request) {
    count_call();
    auto [origin, prefix] = split_url(base_url_);
    httplib::Client client(origin);
    client.set_read_timeout(timeout_seconds_, 0);
    client.set_connection_timeout(timeout_seconds_, 0);

    nlohmann::json body;
    body["model"] = model_;
    body["temperature"] = 0;
    body["max_tokens"] = request.max_tokens;
    body["messages"] = nlohmann::json::array({
        {{"role", "system"}, {"content", request.system}},
        {{"role", "user"}, {"content", request.user}},
    });
    if (request.json_only) body["response_format"] = {{"type", "json_object"}};

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    auto res = client.Post(prefix + "/v1/chat/completions", headers, body.dump(),
                           "application/json");
    if (!res || res->status != 200) {
        throw BackendError("chat completion failed: " +
                           (res ? std::to_string(res->status) : "no response"));
    }
    auto parsed = nlohmann::json::parse(res->body);
    return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
}

}  // namespace backend

namespace celex {

HttpRegistry::HttpRegistry(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {}

bool HttpRegistry::exists(const CelexId& id) {
    auto [origin, prefix] = split_url(base_url_);
    httplib::Client client(origin);
    client.set_read_timeout(timeout_seconds_, 0);
    client.set_follow_location(true);
    auto res = client.Get(prefix + "/legal-content/EN/TXT/?uri=CELEX:" + id.render());
    if (!res) throw RegistryUnavailable("EUR-Lex unreachable");
    if (res->status >= 500) throw RegistryUnavailable("EUR-Lex " + std::to_string(res->status));
    // A missing document renders an error page without the CELEX marker.
    return res->status == 200 && res->body.find("CELEX:" + id.render()) != std::string::npos;
}

std::optional<CelexId> HttpRegistry::search_title(const std::string& text) {
    auto [origin, prefix] = split_url(base_url_);
    httplib::Client client(origin);
    client.set_read_timeout(timeout_seconds_, 0);
    client.set_follow_location(true);
    httplib::Params params{{"text", text}, {"type", "quick"}};
    auto res = client.Get(prefix + "/search.html", params, httplib::Headers{});
    if (!res) throw RegistryUnavailable("EUR-Lex unreachable");
    static const std::regex celex_re(R"(CELEX[:%3A]+(3\d{4}[RLDH]\d{4}))");
    std::smatch m;
    if (std::regex_search(res->body, m, celex_re)) return CelexId::parse(m[1].str());
    return std::nullopt;
}

}  // namespace celex

namespace enrich {

HttpFetcher::HttpFetcher(std::string base_url, int timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {}

std::string HttpFetcher::fetch_pdf(const celex::CelexId& id) {
    auto [origin, prefix] = split_url(base_url_);
    httplib::Client client(origin);
    client.set_read_timeout(timeout_seconds_, 0);
    client.set_follow_location(true);
    auto res = client.Get(prefix + "/legal-content/EN/TXT/PDF/?uri=CELEX:" + id.render());
    if (!res || res->status != 200) {
        throw FetchFailed("PDF fetch failed for " + id.render() + ": " +
                          (res ? std::to_string(res->status) : "no response"));
    }
    return res->body;
}

}  // namespace enrich

namespace rag {

/// Remote per-token embedding endpoint: POST /embed {"texts": [...]} ->
/// {"dimension": d, "vectors": [[[f,...],...], ...]}.
class HttpEmbeddingBackend : public EmbeddingBackend {
  public:
    HttpEmbeddingBackend(std::string base_url, int timeout_seconds = 60)
        : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {}

    int dimension() const override { return dimension_; }

    std::vector<TokenVectors> embed(const std::vector<std::string>& texts) override {
        auto [origin, prefix] = split_url(base_url_);
        httplib::Client client(origin);
        client.set_read_timeout(timeout_seconds_, 0);
        nlohmann::json body{{"texts", texts}};
        auto res = client.Post(prefix + "/embed", body.dump(), "application/json");
        if (!res || res->status != 200) {
            throw std::runtime_error("embedding service failed");
        }
        auto parsed = nlohmann::json::parse(res->body);
        dimension_ = parsed.value("dimension", 0);
        std::vector<TokenVectors> out;
        for (const auto& per_text : parsed.at("vectors")) {
            TokenVectors vectors;
            for (const auto& token : per_text) {
                vectors.push_back(token.get<std::vector<float>>());
            }
            out.push_back(std::move(vectors));
        }
        return out;
    }

  private:
    std::string base_url_;
    int timeout_seconds_;
    int dimension_ = 0;
};

std::unique_ptr<EmbeddingBackend> make_http_embedding_backend(const std::string& base_url) {
    return std::make_unique<HttpEmbeddingBackend>(base_url);
}

}  // namespace rag

}  // namespace critex
