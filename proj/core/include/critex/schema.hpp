#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace critex::schema {

enum class Category { Quantitative, Qualitative };
enum class Applicability { Mandatory, Conditional };
enum class Tag {
    Verification,
    Methodology,
    Commitment,
    Assessment,
    Replacement,
    BackgroundInformation,
};
enum class EvalLogic { And, Or, NOfK, Leaf };

/// AND/OR connective on multi-item groups; absent means single item.
enum class GroupLogic { And, Or };

enum class Operator { Gt, Lt, Ge, Le, Eq };
enum class PeriodUnit { Years, Months, Days };

struct Period {
    enum class Kind { Bounded, Lifetime };
    Kind kind = Kind::Bounded;
    int value = 0;             // bounded only
    PeriodUnit unit = PeriodUnit::Years;  // bounded only
    bool operator==(const Period&) const = default;
};

struct QuantItem {
    std::string metric;
    Operator op = Operator::Le;
    double value = 0;
    std::string unit;
    std::optional<Period> period;
    bool operator==(const QuantItem&) const = default;
};

struct QuantThreshold {
    std::optional<GroupLogic> logic;
    std::vector<QuantItem> items;
    bool operator==(const QuantThreshold&) const = default;
};

struct TemporalItem {
    enum class Kind { Deadline, EffectiveFrom, EffectiveUntil, Window, Recurring };
    Kind kind = Kind::Deadline;
    std::string date;    // deadline / effective_from / effective_until
    std::string start;   // window
    std::string end;     // window
    int interval_value = 0;                       // recurring
    PeriodUnit interval_unit = PeriodUnit::Years; // recurring
    bool operator==(const TemporalItem&) const = default;
};

struct TemporalThreshold {
    std::optional<GroupLogic> logic;
    std::vector<TemporalItem> items;
    bool operator==(const TemporalThreshold&) const = default;
};

struct Threshold {
    std::optional<QuantThreshold> quantitative;
    std::optional<TemporalThreshold> temporal;
    bool operator==(const Threshold&) const = default;
};

enum class RefType { CitationOnly, MustBeFetched };
enum class LinkStatus { Provided, Generated };
enum class EnrichStatus { Retrieved, Paywalled, Skipped };

/// Summary et al. are meaningful only when status == Retrieved.
struct EnrichmentRecord {
    EnrichStatus status = EnrichStatus::Skipped;
    std::string summary;
    std::vector<std::string> key_facts;
    std::vector<std::string> thresholds;
    double confidence = 0;
    bool operator==(const EnrichmentRecord&) const = default;
};

struct ReferenceSource {
    std::string text;
    RefType type = RefType::CitationOnly;
    std::string link;
    LinkStatus link_status = LinkStatus::Generated;
    std::optional<std::string> celex_id;
    std::optional<EnrichmentRecord> enrichment;
    bool operator==(const ReferenceSource&) const = default;
};

struct ReferenceSet {
    std::optional<GroupLogic> logic;
    std::vector<ReferenceSource> sources;
    bool operator==(const ReferenceSet&) const = default;
};

enum class ClauseStatus { Affirmation, Negation };

struct DependencyClause {
    std::string criterion_id;
    ClauseStatus status = ClauseStatus::Affirmation;
    bool operator==(const DependencyClause&) const = default;
};

/// min_conditions_to_meet: 1 = OR, clauses.size() = AND.
struct Dependencies {
    std::string condition_summary;
    int min_conditions_to_meet = 1;
    std::vector<DependencyClause> clauses;
    bool operator==(const Dependencies&) const = default;
};

struct FootnoteItem {
    std::string kind;
    std::string title;
    std::optional<std::string> celex_id;
    RefType type = RefType::CitationOnly;
    std::optional<std::string> oj;
    std::optional<EnrichmentRecord> enrichment;
    bool operator==(const FootnoteItem&) const = default;
};

struct FootnoteDefinition {
    std::string term;
    std::string definition;
    bool operator==(const FootnoteDefinition&) const = default;
};

struct Footnote {
    std::string id;
    std::string verbatim;
    std::vector<std::string> categories;
    std::vector<FootnoteItem> items;
    std::vector<FootnoteDefinition> definitions;
    std::vector<std::string> notes;
    bool operator==(const Footnote&) const = default;
};

/// One node of the fixed 13-field criterion schema. threshold, references
/// and dependencies are null when they carry no meaningful data; footnotes
/// is always a list, possibly empty.
struct CriterionNode {
    std::string criterion_id;
    Category category = Category::Qualitative;
    Applicability applicability = Applicability::Mandatory;
    std::vector<Tag> tags;
    std::string verbatim_text;
    std::string rule_summary;
    EvalLogic evaluation_logic = EvalLogic::Leaf;
    std::optional<int> n_required;
    std::optional<Threshold> threshold;
    std::optional<ReferenceSet> references;
    std::optional<Dependencies> dependencies;
    std::vector<CriterionNode> sub_criteria;
    std::vector<Footnote> footnotes;
    bool operator==(const CriterionNode&) const = default;
};

/// One activity file: schema_version "1" plus metadata and the root node.
struct ActivityTree {
    std::string activity_id;
    std::string activity_name;
    std::string objective;
    CriterionNode root;
    bool operator==(const ActivityTree&) const = default;
};

inline constexpr int kFieldCount = 13;

// Enum <-> canonical string. from_* throw std::invalid_argument on
// unknown values: the schema is closed.
std::string to_string(Category v);
std::string to_string(Applicability v);
std::string to_string(Tag v);
std::string to_string(EvalLogic v);
std::string to_string(GroupLogic v);
std::string to_string(Operator v);
std::string to_string(PeriodUnit v);
std::string to_string(RefType v);
std::string to_string(LinkStatus v);
std::string to_string(EnrichStatus v);
std::string to_string(ClauseStatus v);

Category category_from_string(const std::string& s);
Applicability applicability_from_string(const std::string& s);
Tag tag_from_string(const std::string& s);
EvalLogic eval_logic_from_string(const std::string& s);
GroupLogic group_logic_from_string(const std::string& s);
Operator operator_from_string(const std::string& s);
PeriodUnit period_unit_from_string(const std::string& s);
RefType ref_type_from_string(const std::string& s);
LinkStatus link_status_from_string(const std::string& s);
EnrichStatus enrich_status_from_string(const std::string& s);
ClauseStatus clause_status_from_string(const std::string& s);

/// True for ISO YYYY-MM-DD with a plausible month/day.
bool is_iso_date(const std::string& s);

}  // namespace critex::schema
