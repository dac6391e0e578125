#include "critex/celex.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <regex>

#include "critex/io.hpp"

namespace critex::celex {

namespace {

bool year_in_range(int y) { return y >= 1950 && y <= 2049; }

int century_map(int two_digit) { return two_digit >= 50 ? 1900 + two_digit : 2000 + two_digit; }

std::string pad4(int number) {
    std::string s = std::to_string(number);
    while (s.size() < 4) s.insert(s.begin(), '0');
    return s;
}

struct ActMatch {
    DocType type;
    std::size_t keyword_end;
};

// Earliest act keyword in the text decides the document type. Longer
// keywords win at the same position ("Recommendation" over nothing;
// "Regulations" over "Regulation").
std::optional<ActMatch> find_act_keyword(const std::string& text) {
    static const std::pair<const char*, DocType> kKeywords[] = {
        {"Recommendation", DocType::Recommendation},
        {"Regulations", DocType::Regulation},
        {"Regulation", DocType::Regulation},
        {"Directives", DocType::Directive},
        {"Directive", DocType::Directive},
        {"Decision", DocType::Decision},
    };
    std::optional<ActMatch> best;
    std::size_t best_pos = std::string::npos;
    for (const auto& [kw, type] : kKeywords) {
        std::size_t pos = text.find(kw);
        if (pos != std::string::npos && pos < best_pos) {
            best_pos = pos;
            best = ActMatch{type, pos + std::string(kw).size()};
        }
    }
    return best;
}

}  // namespace

char doc_type_letter(DocType t) {
    switch (t) {
        case DocType::Regulation: return 'R';
        case DocType::Directive: return 'L';
        case DocType::Decision: return 'D';
        case DocType::Recommendation: return 'H';
    }
    return '?';
}

std::string CelexId::render() const {
    return "3" + std::to_string(year) + std::string(1, doc_type_letter(doc_type)) + number;
}

std::optional<CelexId> CelexId::parse(const std::string& s) {
    static const std::regex re(R"(^3(\d{4})([RLDH])(\d{4})$)");
    std::smatch m;
    if (!std::regex_match(s, m, re)) return std::nullopt;
    CelexId id;
    id.year = std::stoi(m[1].str());
    switch (m[2].str()[0]) {
        case 'R': id.doc_type = DocType::Regulation; break;
        case 'L': id.doc_type = DocType::Directive; break;
        case 'D': id.doc_type = DocType::Decision; break;
        case 'H': id.doc_type = DocType::Recommendation; break;
    }
    id.number = m[3].str();
    return id;
}

bool looks_like_eu_act(const std::string& text) {
    if (!find_act_keyword(text)) return false;
    static const std::regex number_re(R"(\d{1,4}\s*/\s*\d{1,4})");
    return std::regex_search(text, number_re);
}

CitationParse normalize_citation(const std::string& text) {
    auto act = find_act_keyword(text);
    if (!act) throw UnrecognizedCitation("no act keyword in: " + text);

    // First A/B digit pair after the keyword. Adoption dates never use a
    // slash, so they cannot match.
    static const std::regex number_re(R"((\d{1,4})\s*/\s*(\d{1,4}))");
    std::smatch m;
    std::string tail = text.substr(act->keyword_end);
    if (!std::regex_search(tail, m, number_re)) {
        throw UnrecognizedCitation("no act number pattern in: " + text);
    }
    const int a = std::stoi(m[1].str());
    const int b = std::stoi(m[2].str());
    const bool a4 = m[1].str().size() == 4;
    const bool b4 = m[2].str().size() == 4;
    const bool has_no_prefix =
        std::regex_search(tail.substr(0, static_cast<std::size_t>(m.position(0))),
                          std::regex(R"(\bNo\.?\s*$)"));

    CitationParse parse;
    parse.raw_text = text;
    parse.inferred_type = act->type;

    int year = 0;
    int number = 0;
    if (a4 && year_in_range(a) && !(b4 && year_in_range(b) && has_no_prefix)) {
        // Modern "YYYY/NNNN" (also covers old year-first directives).
        year = a;
        number = b;
        parse.year_source = YearSource::ModernFirst;
    } else if (b4 && year_in_range(b)) {
        // Old number-first form "No NNNN/YYYY".
        year = b;
        number = a;
        parse.year_source = YearSource::OldSecond;
    } else if (!a4 && !b4) {
        // Both short: old regulations put the year second ("338/97"),
        // other act types put it first ("92/43/EEC").
        parse.two_digit_year = true;
        if (act->type == DocType::Regulation) {
            year = century_map(b);
            number = a;
            parse.year_source = YearSource::OldSecond;
        } else {
            year = century_map(a);
            number = b;
            parse.year_source = YearSource::ModernFirst;
        }
    } else if (a4) {
        year = a;
        number = b;
        parse.year_source = YearSource::ModernFirst;
    } else {
        year = b;
        number = a;
        parse.year_source = YearSource::OldSecond;
    }

    parse.candidate = CelexId{year, act->type, pad4(number)};
    return parse;
}

bool InMemoryRegistry::exists(const CelexId& id) {
    ++exists_calls_;
    return accept_.count(id.render()) > 0;
}

std::optional<CelexId> InMemoryRegistry::search_title(const std::string& text) {
    ++search_calls_;
    for (const auto& [needle, rendered] : titles_) {
        if (text.find(needle) != std::string::npos) return CelexId::parse(rendered);
    }
    return std::nullopt;
}

InMemoryRegistry InMemoryRegistry::from_json_file(const std::string& path) {
    auto j = nlohmann::json::parse(io::read_file(path));
    InMemoryRegistry reg;
    for (const auto& id : j.at("accept")) reg.add(id.get<std::string>());
    if (j.contains("titles")) {
        for (const auto& [needle, rendered] : j.at("titles").items()) {
            reg.add_title(needle, rendered.get<std::string>());
        }
    }
    return reg;
}

CitationParse verify_and_repair(CitationParse parse, RegistryClient& registry) {
    if (registry.exists(parse.candidate)) {
        parse.verification = Verification::Verified;
        return parse;
    }

    // Targeted fixes in fixed order; at most three repair round-trips.
    std::vector<std::pair<std::string, CelexId>> fixes;
    {
        CelexId swapped = parse.candidate;
        swapped.doc_type = swapped.doc_type == DocType::Regulation ? DocType::Directive
                           : swapped.doc_type == DocType::Directive
                               ? DocType::Regulation
                               : swapped.doc_type;
        if (!(swapped == parse.candidate)) fixes.emplace_back("type_swap", swapped);
    }
    if (parse.two_digit_year) {
        CelexId flipped = parse.candidate;
        flipped.year = flipped.year >= 2000 ? flipped.year - 100 : flipped.year + 100;
        fixes.emplace_back("century_flip", flipped);
    }
    {
        CelexId repadded = parse.candidate;
        std::string digits = repadded.number;
        digits.erase(0, digits.find_first_not_of('0'));
        if (digits.empty()) digits = "0";
        repadded.number = pad4(std::stoi(digits));
        if (!(repadded == parse.candidate)) fixes.emplace_back("repad", repadded);
    }

    int round_trips = 0;
    for (const auto& [fix, candidate] : fixes) {
        if (round_trips >= 3) break;
        ++round_trips;
        parse.repairs.push_back({fix, candidate.render()});
        if (registry.exists(candidate)) {
            parse.candidate = candidate;
            parse.verification = Verification::Verified;
            return parse;
        }
    }

    if (auto found = registry.search_title(parse.raw_text)) {
        parse.candidate = *found;
        parse.verification = Verification::FallbackResolved;
        return parse;
    }

    parse.verification = Verification::ManualReview;
    return parse;
}

std::string eur_lex_url(const CelexId& id) {
    return "https://eur-lex.europa.eu/legal-content/EN/TXT/?uri=CELEX:" + id.render();
}

}  // namespace critex::celex
