#include "critex/schema.hpp"

#include <cctype>

namespace critex::schema {

namespace {

[[noreturn]] void bad_enum(const char* what, const std::string& s) {
    throw std::invalid_argument(std::string("unknown ") + what + ": '" + s + "'");
}

}  // namespace

std::string to_string(Category v) {
    return v == Category::Quantitative ? "Quantitative" : "Qualitative";
}

std::string to_string(Applicability v) {
    return v == Applicability::Mandatory ? "Mandatory" : "Conditional";
}

std::string to_string(Tag v) {
    switch (v) {
        case Tag::Verification: return "Verification";
        case Tag::Methodology: return "Methodology";
        case Tag::Commitment: return "Commitment";
        case Tag::Assessment: return "Assessment";
        case Tag::Replacement: return "Replacement";
        case Tag::BackgroundInformation: return "BackgroundInformation";
    }
    return {};
}

std::string to_string(EvalLogic v) {
    switch (v) {
        case EvalLogic::And: return "AND";
        case EvalLogic::Or: return "OR";
        case EvalLogic::NOfK: return "N_OF_K";
        case EvalLogic::Leaf: return "LEAF";
    }
    return {};
}

std::string to_string(GroupLogic v) { return v == GroupLogic::And ? "AND" : "OR"; }

std::string to_string(Operator v) {
    switch (v) {
        case Operator::Gt: return ">";
        case Operator::Lt: return "<";
        case Operator::Ge: return ">=";
        case Operator::Le: return "<=";
        case Operator::Eq: return "=";
    }
    return {};
}

std::string to_string(PeriodUnit v) {
    switch (v) {
        case PeriodUnit::Years: return "years";
        case PeriodUnit::Months: return "months";
        case PeriodUnit::Days: return "days";
    }
    return {};
}

std::string to_string(RefType v) {
    return v == RefType::CitationOnly ? "citation_only" : "must_be_fetched";
}

std::string to_string(LinkStatus v) {
    return v == LinkStatus::Provided ? "provided" : "generated";
}

std::string to_string(EnrichStatus v) {
    switch (v) {
        case EnrichStatus::Retrieved: return "retrieved";
        case EnrichStatus::Paywalled: return "paywalled";
        case EnrichStatus::Skipped: return "skipped";
    }
    return {};
}

std::string to_string(ClauseStatus v) {
    return v == ClauseStatus::Affirmation ? "Affirmation" : "Negation";
}

Category category_from_string(const std::string& s) {
    if (s == "Quantitative") return Category::Quantitative;
    if (s == "Qualitative") return Category::Qualitative;
    bad_enum("category", s);
}

Applicability applicability_from_string(const std::string& s) {
    if (s == "Mandatory") return Applicability::Mandatory;
    if (s == "Conditional") return Applicability::Conditional;
    bad_enum("applicability", s);
}

Tag tag_from_string(const std::string& s) {
    if (s == "Verification") return Tag::Verification;
    if (s == "Methodology") return Tag::Methodology;
    if (s == "Commitment") return Tag::Commitment;
    if (s == "Assessment") return Tag::Assessment;
    if (s == "Replacement") return Tag::Replacement;
    if (s == "BackgroundInformation") return Tag::BackgroundInformation;
    bad_enum("tag", s);
}

EvalLogic eval_logic_from_string(const std::string& s) {
    if (s == "AND") return EvalLogic::And;
    if (s == "OR") return EvalLogic::Or;
    if (s == "N_OF_K") return EvalLogic::NOfK;
    if (s == "LEAF") return EvalLogic::Leaf;
    bad_enum("evaluation_logic", s);
}

GroupLogic group_logic_from_string(const std::string& s) {
    if (s == "AND") return GroupLogic::And;
    if (s == "OR") return GroupLogic::Or;
    bad_enum("logic", s);
}

Operator operator_from_string(const std::string& s) {
    if (s == ">") return Operator::Gt;
    if (s == "<") return Operator::Lt;
    if (s == ">=") return Operator::Ge;
    if (s == "<=") return Operator::Le;
    if (s == "=") return Operator::Eq;
    bad_enum("operator", s);
}

PeriodUnit period_unit_from_string(const std::string& s) {
    if (s == "years") return PeriodUnit::Years;
    if (s == "months") return PeriodUnit::Months;
    if (s == "days") return PeriodUnit::Days;
    bad_enum("period unit", s);
}

RefType ref_type_from_string(const std::string& s) {
    if (s == "citation_only") return RefType::CitationOnly;
    if (s == "must_be_fetched") return RefType::MustBeFetched;
    bad_enum("reference type", s);
}

LinkStatus link_status_from_string(const std::string& s) {
    if (s == "provided") return LinkStatus::Provided;
    if (s == "generated") return LinkStatus::Generated;
    bad_enum("link_status", s);
}

EnrichStatus enrich_status_from_string(const std::string& s) {
    if (s == "retrieved") return EnrichStatus::Retrieved;
    if (s == "paywalled") return EnrichStatus::Paywalled;
    if (s == "skipped") return EnrichStatus::Skipped;
    bad_enum("enrichment status", s);
}

ClauseStatus clause_status_from_string(const std::string& s) {
    if (s == "Affirmation") return ClauseStatus::Affirmation;
    if (s == "Negation") return ClauseStatus::Negation;
    bad_enum("clause status", s);
}

bool is_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (int i : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    }
    int month = (s[5] - '0') * 10 + (s[6] - '0');
    int day = (s[8] - '0') * 10 + (s[9] - '0');
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

}  // namespace critex::schema
