#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace critex::celex {

enum class DocType { Regulation, Directive, Decision, Recommendation };

char doc_type_letter(DocType t);  // R, L, D, H

/// Sector-3 CELEX identifier; rendered form is exactly "3YYYYTNNNN".
struct CelexId {
    int year = 0;
    DocType doc_type = DocType::Regulation;
    std::string number;  // zero-padded to 4 digits

    std::string render() const;
    static std::optional<CelexId> parse(const std::string& rendered);
    bool operator==(const CelexId&) const = default;
};

enum class YearSource { ModernFirst, OldSecond };
enum class Verification { Unverified, Verified, Failed, FallbackResolved, ManualReview };

struct RepairStep {
    std::string fix;  // type_swap | century_flip | repad
    std::string candidate;
};

struct CitationParse {
    std::string raw_text;
    DocType inferred_type = DocType::Regulation;
    YearSource year_source = YearSource::ModernFirst;
    bool two_digit_year = false;
    CelexId candidate;
    Verification verification = Verification::Unverified;
    std::vector<RepairStep> repairs;
};

struct UnrecognizedCitation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RegistryUnavailable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// True when the text names an EU act this parser understands.
bool looks_like_eu_act(const std::string& text);

/// Deterministic normalization of an EU legal-act citation to a CELEX
/// candidate. Year per format: "YYYY/NNNN" takes the first part, old
/// "NNNN/YYYY" takes the second, two-digit years map via >=50 -> 19YY.
/// Adoption dates ("of 11 December 2018") are ignored. Throws
/// UnrecognizedCitation when no act pattern matches.
CitationParse normalize_citation(const std::string& text);

class RegistryClient {
  public:
    virtual ~RegistryClient() = default;
    virtual bool exists(const CelexId& id) = 0;
    virtual std::optional<CelexId> search_title(const std::string& text) = 0;
};

/// Test/offline registry backed by an accept-set and a title map.
class InMemoryRegistry : public RegistryClient {
  public:
    InMemoryRegistry() = default;
    explicit InMemoryRegistry(std::set<std::string> accept) : accept_(std::move(accept)) {}

    void add(const std::string& rendered) { accept_.insert(rendered); }
    void add_title(const std::string& needle, const std::string& rendered) {
        titles_[needle] = rendered;
    }

    bool exists(const CelexId& id) override;
    std::optional<CelexId> search_title(const std::string& text) override;

    int exists_calls() const { return exists_calls_; }
    int search_calls() const { return search_calls_; }

    static InMemoryRegistry from_json_file(const std::string& path);

  private:
    std::set<std::string> accept_;
    std::map<std::string, std::string> titles_;  // substring -> celex
    int exists_calls_ = 0;
    int search_calls_ = 0;
};

/// EUR-Lex-backed registry. Existence is probed by fetching the CELEX
/// landing page; title search uses the quick-search endpoint.
class HttpRegistry : public RegistryClient {
  public:
    explicit HttpRegistry(std::string base_url, int timeout_seconds = 20);
    bool exists(const CelexId& id) override;
    std::optional<CelexId> search_title(const std::string& text) override;

  private:
    std::string base_url_;
    int timeout_seconds_;
};

/// Verifies the candidate against the registry; on failure applies the
/// fixed repair sequence (type swap, century flip, re-pad), each followed
/// by a re-verification, at most three registry round-trips in the repair
/// loop, then one title-search fallback, then manual review.
CitationParse verify_and_repair(CitationParse parse, RegistryClient& registry);

std::string eur_lex_url(const CelexId& id);

}  // namespace critex::celex
