#include "critex/schema_json.hpp"

#include <cmath>
#include <cstdint>
#include <set>

namespace critex::schema {

namespace {

std::string child_path(const std::string& path, const std::string& key) {
    return path + "/" + key;
}

std::string index_path(const std::string& path, std::size_t i) {
    return path + "/" + std::to_string(i);
}

void require_keys(const json& j, const std::string& path,
                  const std::vector<std::string>& required,
                  const std::vector<std::string>& optional = {}) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    for (const auto& key : required) {
        if (!j.contains(key)) throw SchemaError(child_path(path, key), "missing required field");
    }
    std::set<std::string> known(required.begin(), required.end());
    known.insert(optional.begin(), optional.end());
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) throw SchemaError(child_path(path, key), "unknown field");
    }
}

std::string get_string(const json& j, const std::string& key, const std::string& path) {
    const auto& v = j.at(key);
    if (!v.is_string()) throw SchemaError(child_path(path, key), "expected a string");
    return v.get<std::string>();
}

double get_number(const json& j, const std::string& key, const std::string& path) {
    const auto& v = j.at(key);
    if (!v.is_number()) throw SchemaError(child_path(path, key), "expected a number");
    return v.get<double>();
}

int get_int(const json& j, const std::string& key, const std::string& path) {
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw SchemaError(child_path(path, key), "expected an integer");
    return v.get<int>();
}

template <typename Fn>
auto parse_enum(Fn&& fn, const std::string& value, const std::string& path)
    -> decltype(fn(value)) {
    try {
        return fn(value);
    } catch (const std::invalid_argument& e) {
        throw SchemaError(path, e.what());
    }
}

json logic_to_json(const std::optional<GroupLogic>& logic) {
    if (!logic) return nullptr;
    return to_string(*logic);
}

std::optional<GroupLogic> logic_from_json(const json& j, const std::string& path) {
    if (j.is_null()) return std::nullopt;
    if (!j.is_string()) throw SchemaError(path, "expected AND, OR, or null");
    return parse_enum(group_logic_from_string, j.get<std::string>(), path);
}

json period_to_json(const Period& p) {
    json j = json::object();
    if (p.kind == Period::Kind::Lifetime) {
        j["type"] = "lifetime";
    } else {
        j["type"] = "bounded";
        j["value"] = canonical_number(p.value);
        j["unit"] = to_string(p.unit);
    }
    return j;
}

Period period_from_json(const json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("type")) throw SchemaError(path, "expected a period object");
    Period p;
    std::string type = get_string(j, "type", path);
    if (type == "lifetime") {
        require_keys(j, path, {"type"});
        p.kind = Period::Kind::Lifetime;
    } else if (type == "bounded") {
        require_keys(j, path, {"type", "value", "unit"});
        p.kind = Period::Kind::Bounded;
        p.value = get_int(j, "value", path);
        p.unit = parse_enum(period_unit_from_string, get_string(j, "unit", path),
                            child_path(path, "unit"));
    } else {
        throw SchemaError(child_path(path, "type"), "unknown period type '" + type + "'");
    }
    return p;
}

json quant_item_to_json(const QuantItem& item) {
    json j = json::object();
    j["metric"] = item.metric;
    j["operator"] = to_string(item.op);
    j["value"] = canonical_number(item.value);
    j["unit"] = item.unit;
    j["period"] = item.period ? period_to_json(*item.period) : json(nullptr);
    return j;
}

QuantItem quant_item_from_json(const json& j, const std::string& path) {
    require_keys(j, path, {"metric", "operator", "value", "unit", "period"});
    QuantItem item;
    item.metric = get_string(j, "metric", path);
    item.op = parse_enum(operator_from_string, get_string(j, "operator", path),
                         child_path(path, "operator"));
    item.value = get_number(j, "value", path);
    item.unit = get_string(j, "unit", path);
    if (!j.at("period").is_null()) {
        item.period = period_from_json(j.at("period"), child_path(path, "period"));
    }
    return item;
}

json temporal_item_to_json(const TemporalItem& item) {
    json j = json::object();
    switch (item.kind) {
        case TemporalItem::Kind::Deadline:
            j["type"] = "deadline";
            j["date"] = item.date;
            break;
        case TemporalItem::Kind::EffectiveFrom:
            j["type"] = "effective_from";
            j["date"] = item.date;
            break;
        case TemporalItem::Kind::EffectiveUntil:
            j["type"] = "effective_until";
            j["date"] = item.date;
            break;
        case TemporalItem::Kind::Window:
            j["type"] = "window";
            j["start"] = item.start;
            j["end"] = item.end;
            break;
        case TemporalItem::Kind::Recurring:
            j["type"] = "recurring";
            j["interval_value"] = canonical_number(item.interval_value);
            j["interval_unit"] = to_string(item.interval_unit);
            break;
    }
    return j;
}

void check_date(const std::string& date, const std::string& path) {
    if (!is_iso_date(date)) throw SchemaError(path, "expected an ISO YYYY-MM-DD date");
}

TemporalItem temporal_item_from_json(const json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("type")) {
        throw SchemaError(path, "expected a temporal item object");
    }
    TemporalItem item;
    std::string type = get_string(j, "type", path);
    if (type == "deadline" || type == "effective_from" || type == "effective_until") {
        require_keys(j, path, {"type", "date"});
        item.kind = type == "deadline"        ? TemporalItem::Kind::Deadline
                    : type == "effective_from" ? TemporalItem::Kind::EffectiveFrom
                                               : TemporalItem::Kind::EffectiveUntil;
        item.date = get_string(j, "date", path);
        check_date(item.date, child_path(path, "date"));
    } else if (type == "window") {
        require_keys(j, path, {"type", "start", "end"});
        item.kind = TemporalItem::Kind::Window;
        item.start = get_string(j, "start", path);
        item.end = get_string(j, "end", path);
        check_date(item.start, child_path(path, "start"));
        check_date(item.end, child_path(path, "end"));
    } else if (type == "recurring") {
        require_keys(j, path, {"type", "interval_value", "interval_unit"});
        item.kind = TemporalItem::Kind::Recurring;
        item.interval_value = get_int(j, "interval_value", path);
        item.interval_unit =
            parse_enum(period_unit_from_string, get_string(j, "interval_unit", path),
                       child_path(path, "interval_unit"));
    } else {
        throw SchemaError(child_path(path, "type"), "unknown temporal type '" + type + "'");
    }
    return item;
}

}  // namespace

json threshold_to_json(const Threshold& t) {
    json j = json::object();
    if (t.quantitative) {
        json q = json::object();
        q["logic"] = logic_to_json(t.quantitative->logic);
        q["items"] = json::array();
        for (const auto& item : t.quantitative->items) q["items"].push_back(quant_item_to_json(item));
        j["quantitative"] = q;
    } else {
        j["quantitative"] = nullptr;
    }
    if (t.temporal) {
        json tj = json::object();
        tj["logic"] = logic_to_json(t.temporal->logic);
        tj["items"] = json::array();
        for (const auto& item : t.temporal->items) tj["items"].push_back(temporal_item_to_json(item));
        j["temporal"] = tj;
    } else {
        j["temporal"] = nullptr;
    }
    return j;
}

Threshold threshold_from_json(const json& j, const std::string& path) {
    require_keys(j, path, {"quantitative", "temporal"});
    Threshold t;
    if (!j.at("quantitative").is_null()) {
        const auto& q = j.at("quantitative");
        const std::string qpath = child_path(path, "quantitative");
        require_keys(q, qpath, {"logic", "items"});
        QuantThreshold qt;
        qt.logic = logic_from_json(q.at("logic"), child_path(qpath, "logic"));
        if (!q.at("items").is_array()) throw SchemaError(child_path(qpath, "items"), "expected an array");
        std::size_t i = 0;
        for (const auto& item : q.at("items")) {
            qt.items.push_back(quant_item_from_json(item, index_path(child_path(qpath, "items"), i++)));
        }
        t.quantitative = std::move(qt);
    }
    if (!j.at("temporal").is_null()) {
        const auto& tj = j.at("temporal");
        const std::string tpath = child_path(path, "temporal");
        require_keys(tj, tpath, {"logic", "items"});
        TemporalThreshold tt;
        tt.logic = logic_from_json(tj.at("logic"), child_path(tpath, "logic"));
        if (!tj.at("items").is_array()) throw SchemaError(child_path(tpath, "items"), "expected an array");
        std::size_t i = 0;
        for (const auto& item : tj.at("items")) {
            tt.items.push_back(
                temporal_item_from_json(item, index_path(child_path(tpath, "items"), i++)));
        }
        t.temporal = std::move(tt);
    }
    return t;
}

static json enrichment_to_json(const EnrichmentRecord& e) {
    json j = json::object();
    j["status"] = to_string(e.status);
    if (e.status == EnrichStatus::Retrieved) {
        j["summary"] = e.summary;
        j["key_facts"] = e.key_facts;
        j["thresholds"] = e.thresholds;
        j["confidence"] = canonical_number(e.confidence);
    }
    return j;
}

static EnrichmentRecord enrichment_from_json(const json& j, const std::string& path) {
    EnrichmentRecord e;
    if (!j.is_object() || !j.contains("status")) {
        throw SchemaError(path, "expected an enrichment object with status");
    }
    e.status = parse_enum(enrich_status_from_string, get_string(j, "status", path),
                          child_path(path, "status"));
    if (e.status == EnrichStatus::Retrieved) {
        require_keys(j, path, {"status", "summary", "key_facts", "thresholds", "confidence"});
        e.summary = get_string(j, "summary", path);
        for (const auto& f : j.at("key_facts")) e.key_facts.push_back(f.get<std::string>());
        for (const auto& f : j.at("thresholds")) e.thresholds.push_back(f.get<std::string>());
        e.confidence = get_number(j, "confidence", path);
    } else {
        require_keys(j, path, {"status"});
    }
    return e;
}

static json source_to_json(const ReferenceSource& s) {
    json j = json::object();
    j["text"] = s.text;
    j["type"] = to_string(s.type);
    j["link"] = s.link;
    j["link_status"] = to_string(s.link_status);
    j["celex_id"] = s.celex_id ? json(*s.celex_id) : json(nullptr);
    j["enrichment"] = s.enrichment ? enrichment_to_json(*s.enrichment) : json(nullptr);
    return j;
}

static ReferenceSource source_from_json(const json& j, const std::string& path) {
    require_keys(j, path, {"text", "type", "link", "link_status", "celex_id", "enrichment"});
    ReferenceSource s;
    s.text = get_string(j, "text", path);
    s.type = parse_enum(ref_type_from_string, get_string(j, "type", path), child_path(path, "type"));
    s.link = get_string(j, "link", path);
    s.link_status = parse_enum(link_status_from_string, get_string(j, "link_status", path),
                               child_path(path, "link_status"));
    if (!j.at("celex_id").is_null()) s.celex_id = get_string(j, "celex_id", path);
    if (!j.at("enrichment").is_null()) {
        s.enrichment = enrichment_from_json(j.at("enrichment"), child_path(path, "enrichment"));
    }
    return s;
}

json references_to_json(const ReferenceSet& r) {
    json j = json::object();
    j["logic"] = logic_to_json(r.logic);
    j["sources"] = json::array();
    for (const auto& s : r.sources) j["sources"].push_back(source_to_json(s));
    return j;
}

static ReferenceSet references_from_json(const json& j, const std::string& path) {
    require_keys(j, path, {"logic", "sources"});
    ReferenceSet r;
    r.logic = logic_from_json(j.at("logic"), child_path(path, "logic"));
    if (!j.at("sources").is_array()) throw SchemaError(child_path(path, "sources"), "expected an array");
    std::size_t i = 0;
    for (const auto& s : j.at("sources")) {
        r.sources.push_back(source_from_json(s, index_path(child_path(path, "sources"), i++)));
    }
    return r;
}

json dependencies_to_json(const Dependencies& d) {
    json j = json::object();
    j["condition_summary"] = d.condition_summary;
    j["min_conditions_to_meet"] = canonical_number(d.min_conditions_to_meet);
    j["clauses"] = json::array();
    for (const auto& c : d.clauses) {
        json cj = json::object();
        cj["criterion_id"] = c.criterion_id;
        cj["status"] = to_string(c.status);
        j["clauses"].push_back(cj);
    }
    return j;
}

static Dependencies dependencies_from_json(const json& j, const std::string& path) {
    require_keys(j, path, {"condition_summary", "min_conditions_to_meet", "clauses"});
    Dependencies d;
    d.condition_summary = get_string(j, "condition_summary", path);
    d.min_conditions_to_meet = get_int(j, "min_conditions_to_meet", path);
    if (!j.at("clauses").is_array()) throw SchemaError(child_path(path, "clauses"), "expected an array");
    std::size_t i = 0;
    for (const auto& c : j.at("clauses")) {
        const std::string cpath = index_path(child_path(path, "clauses"), i++);
        require_keys(c, cpath, {"criterion_id", "status"});
        DependencyClause clause;
        clause.criterion_id = get_string(c, "criterion_id", cpath);
        clause.status = parse_enum(clause_status_from_string, get_string(c, "status", cpath),
                                   child_path(cpath, "status"));
        d.clauses.push_back(clause);
    }
    return d;
}

static json footnote_item_to_json(const FootnoteItem& item) {
    json j = json::object();
    j["kind"] = item.kind;
    j["title"] = item.title;
    j["celex_id"] = item.celex_id ? json(*item.celex_id) : json(nullptr);
    j["type"] = to_string(item.type);
    j["oj"] = item.oj ? json(*item.oj) : json(nullptr);
    j["enrichment"] = item.enrichment ? enrichment_to_json(*item.enrichment) : json(nullptr);
    return j;
}

static FootnoteItem footnote_item_from_json(const json& j, const std::string& path) {
    // celex_id, oj and enrichment may be omitted on input; they serialize
    // as explicit nulls.
    require_keys(j, path, {"kind", "title", "type"}, {"celex_id", "oj", "enrichment"});
    FootnoteItem item;
    item.kind = get_string(j, "kind", path);
    item.title = get_string(j, "title", path);
    item.type = parse_enum(ref_type_from_string, get_string(j, "type", path), child_path(path, "type"));
    if (j.contains("celex_id") && !j.at("celex_id").is_null()) item.celex_id = get_string(j, "celex_id", path);
    if (j.contains("oj") && !j.at("oj").is_null()) item.oj = get_string(j, "oj", path);
    if (j.contains("enrichment") && !j.at("enrichment").is_null()) {
        item.enrichment = enrichment_from_json(j.at("enrichment"), child_path(path, "enrichment"));
    }
    return item;
}

json footnote_to_json(const Footnote& f) {
    json j = json::object();
    j["id"] = f.id;
    j["verbatim"] = f.verbatim;
    j["categories"] = f.categories;
    j["items"] = json::array();
    for (const auto& item : f.items) j["items"].push_back(footnote_item_to_json(item));
    j["definitions"] = json::array();
    for (const auto& d : f.definitions) {
        json dj = json::object();
        dj["term"] = d.term;
        dj["definition"] = d.definition;
        j["definitions"].push_back(dj);
    }
    j["notes"] = f.notes;
    return j;
}

static Footnote footnote_from_json(const json& j, const std::string& path) {
    require_keys(j, path, {"id", "verbatim", "categories", "items", "definitions", "notes"});
    Footnote f;
    f.id = get_string(j, "id", path);
    f.verbatim = get_string(j, "verbatim", path);
    for (const auto& c : j.at("categories")) f.categories.push_back(c.get<std::string>());
    std::size_t i = 0;
    for (const auto& item : j.at("items")) {
        f.items.push_back(footnote_item_from_json(item, index_path(child_path(path, "items"), i++)));
    }
    i = 0;
    for (const auto& d : j.at("definitions")) {
        const std::string dpath = index_path(child_path(path, "definitions"), i++);
        require_keys(d, dpath, {"term", "definition"});
        f.definitions.push_back({get_string(d, "term", dpath), get_string(d, "definition", dpath)});
    }
    for (const auto& n : j.at("notes")) f.notes.push_back(n.get<std::string>());
    return f;
}

namespace {

const std::vector<std::string> kNodeFields = {
    "criterion_id", "category",   "applicability", "tags",        "verbatim_text",
    "rule_summary", "evaluation_logic", "n_required", "threshold", "references",
    "dependencies", "sub_criteria", "footnotes"};

}  // namespace

json canonical_number(double v) {
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e15) {
        return static_cast<std::int64_t>(v);
    }
    return v;
}

json node_to_json(const CriterionNode& node) {
    json j = json::object();
    j["criterion_id"] = node.criterion_id;
    j["category"] = to_string(node.category);
    j["applicability"] = to_string(node.applicability);
    j["tags"] = json::array();
    for (Tag t : node.tags) j["tags"].push_back(to_string(t));
    j["verbatim_text"] = node.verbatim_text;
    j["rule_summary"] = node.rule_summary;
    j["evaluation_logic"] = to_string(node.evaluation_logic);
    j["n_required"] = node.n_required ? canonical_number(*node.n_required) : json(nullptr);
    j["threshold"] = node.threshold ? threshold_to_json(*node.threshold) : json(nullptr);
    j["references"] = node.references ? references_to_json(*node.references) : json(nullptr);
    j["dependencies"] = node.dependencies ? dependencies_to_json(*node.dependencies) : json(nullptr);
    j["sub_criteria"] = json::array();
    for (const auto& child : node.sub_criteria) j["sub_criteria"].push_back(node_to_json(child));
    j["footnotes"] = json::array();
    for (const auto& f : node.footnotes) j["footnotes"].push_back(footnote_to_json(f));
    return j;
}

CriterionNode node_from_json(const json& j, const std::string& path) {
    require_keys(j, path, kNodeFields);
    CriterionNode node;
    node.criterion_id = get_string(j, "criterion_id", path);
    node.category = parse_enum(category_from_string, get_string(j, "category", path),
                               child_path(path, "category"));
    node.applicability = parse_enum(applicability_from_string, get_string(j, "applicability", path),
                                    child_path(path, "applicability"));
    if (!j.at("tags").is_array()) throw SchemaError(child_path(path, "tags"), "expected an array");
    for (const auto& t : j.at("tags")) {
        node.tags.push_back(parse_enum(tag_from_string, t.get<std::string>(), child_path(path, "tags")));
    }
    node.verbatim_text = get_string(j, "verbatim_text", path);
    node.rule_summary = get_string(j, "rule_summary", path);
    node.evaluation_logic = parse_enum(eval_logic_from_string, get_string(j, "evaluation_logic", path),
                                       child_path(path, "evaluation_logic"));
    if (!j.at("n_required").is_null()) node.n_required = get_int(j, "n_required", path);
    if (!j.at("threshold").is_null()) {
        node.threshold = threshold_from_json(j.at("threshold"), child_path(path, "threshold"));
    }
    if (!j.at("references").is_null()) {
        node.references = references_from_json(j.at("references"), child_path(path, "references"));
    }
    if (!j.at("dependencies").is_null()) {
        node.dependencies = dependencies_from_json(j.at("dependencies"), child_path(path, "dependencies"));
    }
    if (!j.at("sub_criteria").is_array()) {
        throw SchemaError(child_path(path, "sub_criteria"), "expected an array, null not allowed");
    }
    std::size_t i = 0;
    for (const auto& child : j.at("sub_criteria")) {
        node.sub_criteria.push_back(
            node_from_json(child, index_path(child_path(path, "sub_criteria"), i++)));
    }
    if (!j.at("footnotes").is_array()) {
        throw SchemaError(child_path(path, "footnotes"), "expected an array, null not allowed");
    }
    i = 0;
    for (const auto& f : j.at("footnotes")) {
        node.footnotes.push_back(footnote_from_json(f, index_path(child_path(path, "footnotes"), i++)));
    }
    return node;
}

std::string to_canonical_json(const CriterionNode& node) {
    return node_to_json(node).dump(2) + "\n";
}

CriterionNode from_canonical_json(const std::string& bytes) {
    json j;
    try {
        j = json::parse(bytes);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("", std::string("invalid JSON: ") + e.what());
    }
    return node_from_json(j);
}

json activity_to_json(const ActivityTree& tree) {
    json j = json::object();
    j["schema_version"] = "1";
    j["activity_id"] = tree.activity_id;
    j["activity_name"] = tree.activity_name;
    j["objective"] = tree.objective;
    j["tree"] = node_to_json(tree.root);
    return j;
}

ActivityTree activity_from_json(const json& j) {
    require_keys(j, "", {"schema_version", "activity_id", "activity_name", "objective", "tree"});
    if (j.at("schema_version").get<std::string>() != "1") {
        throw SchemaError("/schema_version", "unsupported schema version");
    }
    ActivityTree tree;
    tree.activity_id = get_string(j, "activity_id", "");
    tree.activity_name = get_string(j, "activity_name", "");
    tree.objective = get_string(j, "objective", "");
    tree.root = node_from_json(j.at("tree"), "/tree");
    return tree;
}

std::string activity_to_canonical_json(const ActivityTree& tree) {
    return activity_to_json(tree).dump(2) + "\n";
}

ActivityTree activity_from_canonical_json(const std::string& bytes) {
    json j;
    try {
        j = json::parse(bytes);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("", std::string("invalid JSON: ") + e.what());
    }
    return activity_from_json(j);
}

}  // namespace critex::schema
