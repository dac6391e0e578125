#include "critex/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <set>

#include "critex/text.hpp"

namespace critex::ingest {

namespace {

// ---------------------------------------------------------------------
// Tolerant mini HTML parser. Handles the Taxonomy Compass subset:
// nested lists, paragraphs, headings, superscript markers and hidden
// footnote popovers. Unknown tags are kept as generic containers.
// ---------------------------------------------------------------------

struct Node {
    bool is_text = false;
    std::string text;                    // text node
    std::string tag;                     // element node
    std::map<std::string, std::string> attrs;
    std::vector<std::unique_ptr<Node>> children;
};

const std::set<std::string>& void_tags() {
    static const std::set<std::string> tags = {"br", "hr", "img", "meta", "link", "input", "wbr"};
    return tags;
}

// Tags that implicitly close an open element of the same kind.
bool closes_same(const std::string& tag) { return tag == "li" || tag == "p" || tag == "td" || tag == "th" || tag == "tr"; }

std::string decode_entities(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] != '&') {
            out.push_back(s[i++]);
            continue;
        }
        std::size_t semi = s.find(';', i);
        if (semi == std::string::npos || semi - i > 10) {
            out.push_back(s[i++]);
            continue;
        }
        std::string ent = s.substr(i + 1, semi - i - 1);
        if (ent == "amp") out += "&";
        else if (ent == "lt") out += "<";
        else if (ent == "gt") out += ">";
        else if (ent == "quot") out += "\"";
        else if (ent == "apos" || ent == "#39") out += "'";
        else if (ent == "nbsp") out += " ";
        else if (!ent.empty() && ent[0] == '#') {
            int code = 0;
            try {
                code = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                           ? std::stoi(ent.substr(2), nullptr, 16)
                           : std::stoi(ent.substr(1));
            } catch (...) {
                code = 0;
            }
            if (code > 0 && code < 128) {
                out.push_back(static_cast<char>(code));
            } else if (code >= 128) {
                // Re-encode as UTF-8.
                if (code < 0x800) {
                    out.push_back(static_cast<char>(0xC0 | (code >> 6)));
                    out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
                } else {
                    out.push_back(static_cast<char>(0xE0 | (code >> 12)));
                    out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
                    out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
                }
            }
        } else {
            out += "&" + ent + ";";  // unknown entity left intact
        }
        i = semi + 1;
    }
    return out;
}

struct TagToken {
    std::string name;
    std::map<std::string, std::string> attrs;
    bool closing = false;
    bool self_closing = false;
};

TagToken parse_tag(const std::string& inner) {
    TagToken tok;
    std::size_t i = 0;
    if (i < inner.size() && inner[i] == '/') {
        tok.closing = true;
        ++i;
    }
    while (i < inner.size() && (std::isalnum(static_cast<unsigned char>(inner[i])) || inner[i] == '-')) {
        tok.name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(inner[i]))));
        ++i;
    }
    while (i < inner.size()) {
        while (i < inner.size() && std::isspace(static_cast<unsigned char>(inner[i]))) ++i;
        if (i >= inner.size()) break;
        if (inner[i] == '/') {
            tok.self_closing = true;
            ++i;
            continue;
        }
        std::string name;
        while (i < inner.size() && inner[i] != '=' && inner[i] != '/' &&
               !std::isspace(static_cast<unsigned char>(inner[i]))) {
            name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(inner[i]))));
            ++i;
        }
        std::string value;
        if (i < inner.size() && inner[i] == '=') {
            ++i;
            while (i < inner.size() && std::isspace(static_cast<unsigned char>(inner[i]))) ++i;
            if (i < inner.size() && (inner[i] == '"' || inner[i] == '\'')) {
                char quote = inner[i++];
                while (i < inner.size() && inner[i] != quote) value.push_back(inner[i++]);
                if (i < inner.size()) ++i;
            } else {
                while (i < inner.size() && !std::isspace(static_cast<unsigned char>(inner[i])) &&
                       inner[i] != '/') {
                    value.push_back(inner[i++]);
                }
            }
        }
        if (!name.empty()) tok.attrs[name] = decode_entities(value);
    }
    return tok;
}

std::unique_ptr<Node> parse_dom(const std::string& html) {
    auto root = std::make_unique<Node>();
    root->tag = "#root";
    std::vector<Node*> stack = {root.get()};

    auto open_tags_contains = [&](const std::string& tag) {
        return std::any_of(stack.begin(), stack.end(), [&](Node* n) { return n->tag == tag; });
    };

    std::size_t i = 0;
    while (i < html.size()) {
        if (html[i] == '<') {
            if (html.compare(i, 4, "<!--") == 0) {
                std::size_t end = html.find("-->", i);
                i = end == std::string::npos ? html.size() : end + 3;
                continue;
            }
            if (html.compare(i, 2, "<!") == 0 || html.compare(i, 2, "<?") == 0) {
                std::size_t end = html.find('>', i);
                i = end == std::string::npos ? html.size() : end + 1;
                continue;
            }
            std::size_t end = html.find('>', i);
            if (end == std::string::npos) {
                // Malformed trailing '<': treat as text.
                stack.back()->children.push_back(std::make_unique<Node>());
                stack.back()->children.back()->is_text = true;
                stack.back()->children.back()->text = html.substr(i);
                break;
            }
            TagToken tok = parse_tag(html.substr(i + 1, end - i - 1));
            i = end + 1;
            if (tok.name.empty()) continue;

            if (tok.closing) {
                // Pop to the matching open tag if any; ignore strays.
                if (open_tags_contains(tok.name)) {
                    while (stack.size() > 1 && stack.back()->tag != tok.name) stack.pop_back();
                    if (stack.size() > 1) stack.pop_back();
                }
                continue;
            }

            if (tok.name == "script" || tok.name == "style") {
                std::string close = "</" + tok.name;
                std::size_t stop = html.find(close, i);
                i = stop == std::string::npos ? html.size() : html.find('>', stop) + 1;
                continue;
            }

            if (closes_same(tok.name) && stack.back()->tag == tok.name) stack.pop_back();
            // A new list item also closes an open paragraph and vice versa.
            if (tok.name == "li" && stack.back()->tag == "p") stack.pop_back();

            auto node = std::make_unique<Node>();
            node->tag = tok.name;
            node->attrs = std::move(tok.attrs);
            Node* raw = node.get();
            stack.back()->children.push_back(std::move(node));
            if (!tok.self_closing && !void_tags().count(tok.name)) stack.push_back(raw);
        } else {
            std::size_t end = html.find('<', i);
            if (end == std::string::npos) end = html.size();
            std::string raw = decode_entities(html.substr(i, end - i));
            if (!text::normalize_ws(raw).empty() || raw.find(' ') != std::string::npos) {
                auto node = std::make_unique<Node>();
                node->is_text = true;
                node->text = std::move(raw);
                stack.back()->children.push_back(std::move(node));
            }
            i = end;
        }
    }
    return root;
}

// ---------------------------------------------------------------------
// Segment extraction
// ---------------------------------------------------------------------

const std::set<std::string>& inline_tags() {
    static const std::set<std::string> tags = {"span", "b",      "i",    "em",  "strong", "a",
                                               "u",    "small",  "code", "sub", "abbr",   "q"};
    return tags;
}

bool is_heading(const std::string& tag) {
    return tag.size() == 2 && tag[0] == 'h' && tag[1] >= '1' && tag[1] <= '6';
}

bool is_popover(const Node& n) {
    auto it = n.attrs.find("id");
    if (it != n.attrs.end()) {
        static const std::regex fn_id(R"(^fn-\d+$)");
        if (std::regex_match(it->second, fn_id)) return true;
    }
    auto cls = n.attrs.find("class");
    if (cls != n.attrs.end() &&
        (cls->second.find("popover") != std::string::npos ||
         cls->second.find("footnote") != std::string::npos)) {
        return true;
    }
    return false;
}

std::optional<std::string> sup_footnote_marker(const std::string& sup_text) {
    static const std::regex marker(R"(^\((\d+)\)$)");
    std::smatch m;
    std::string trimmed = text::normalize_ws(sup_text);
    if (std::regex_match(trimmed, m, marker)) return "fn-" + m[1].str();
    return std::nullopt;
}

struct InlineCollector {
    std::string text;
    std::vector<std::string> markers;
};

void collect_inline(const Node& n, InlineCollector& out);

void collect_children_inline(const Node& n, InlineCollector& out) {
    for (const auto& child : n.children) collect_inline(*child, out);
}

void collect_inline(const Node& n, InlineCollector& out) {
    if (n.is_text) {
        out.text += n.text;
        return;
    }
    if (n.tag == "sup") {
        InlineCollector sup;
        collect_children_inline(n, sup);
        if (auto marker = sup_footnote_marker(sup.text)) {
            out.markers.push_back(*marker);
            out.text += text::normalize_ws(sup.text);  // markers stay visible
        } else {
            out.text += sup.text;
        }
        return;
    }
    if (n.tag == "br") {
        out.text += " ";
        return;
    }
    collect_children_inline(n, out);
}

std::string positional_marker(const std::string& list_type, std::size_t index) {
    if (list_type == "a" || list_type == "A") {
        std::string letters;
        std::size_t v = index;
        do {
            letters.insert(letters.begin(), static_cast<char>('a' + v % 26));
            v = v / 26;
        } while (v-- > 0 && !letters.empty() && letters.size() < 3);
        return "(" + letters + ")";
    }
    if (list_type == "i" || list_type == "I") {
        static const char* ones[] = {"", "i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x"};
        if (index + 1 <= 10) return "(" + std::string(ones[index + 1]) + ")";
        return "(" + std::to_string(index + 1) + ")";
    }
    return std::to_string(index + 1) + ".";
}

std::optional<std::string> explicit_marker(const std::string& normalized_text) {
    static const std::regex lead(R"(^(\([0-9a-z]{1,4}\)|\d{1,3}\.)\s+)");
    std::smatch m;
    if (std::regex_search(normalized_text, m, lead)) return m[1].str();
    return std::nullopt;
}

struct Walker {
    std::vector<Segment> segments;
    std::vector<FootnoteBlob> blobs;

    void emit(SegmentKind kind, int depth, std::string marker, InlineCollector collected) {
        Segment seg;
        seg.kind = kind;
        seg.depth_hint = depth;
        seg.text = text::normalize_ws(collected.text);
        if (seg.text.empty() && collected.markers.empty()) return;
        seg.footnote_markers = std::move(collected.markers);
        if (kind == SegmentKind::ListItem) {
            if (auto em = explicit_marker(seg.text)) {
                seg.marker = *em;
            } else {
                seg.marker = std::move(marker);
            }
        }
        segments.push_back(std::move(seg));
    }

    void walk_list(const Node& list, int list_depth) {
        std::string type = "1";
        auto it = list.attrs.find("type");
        if (it != list.attrs.end()) type = it->second;
        if (list.tag == "ul") type = "-";
        std::size_t index = 0;
        for (const auto& child : list.children) {
            if (child->is_text) continue;
            if (child->tag == "li") {
                walk_li(*child, list_depth, positional_marker(type, index));
                ++index;
            } else {
                walk(*child, list_depth + 1);
            }
        }
    }

    void walk_li(const Node& li, int list_depth, std::string marker) {
        InlineCollector own;
        bool emitted = false;
        bool saw_paragraph = false;
        auto flush = [&]() {
            if (!emitted) {
                emit(SegmentKind::ListItem, list_depth, marker, std::move(own));
                emitted = true;
                own = InlineCollector{};
            }
        };
        for (const auto& child : li.children) {
            if (child->is_text || inline_tags().count(child->tag) || child->tag == "sup" ||
                child->tag == "br") {
                if (emitted) {
                    // Trailing inline content forms its own paragraph.
                    collect_inline(*child, own);
                    continue;
                }
                collect_inline(*child, own);
                continue;
            }
            if (child->tag == "p" && !saw_paragraph && !emitted &&
                text::normalize_ws(own.text).empty()) {
                // Leading <p> supplies the item's own text.
                collect_children_inline(*child, own);
                saw_paragraph = true;
                continue;
            }
            flush();
            walk(*child, list_depth + 1);
        }
        if (!emitted) {
            flush();
        } else if (!text::normalize_ws(own.text).empty()) {
            emit(SegmentKind::UnnumberedParagraph, list_depth + 1, "", std::move(own));
        }
    }

    void walk(const Node& n, int list_depth) {
        if (n.is_text) {
            InlineCollector c;
            c.text = n.text;
            emit(SegmentKind::UnnumberedParagraph, list_depth, "", std::move(c));
            return;
        }
        if (n.tag == "head" || n.tag == "title") return;
        if (is_popover(n)) {
            InlineCollector c;
            collect_children_inline(n, c);
            std::string id;
            auto it = n.attrs.find("id");
            if (it != n.attrs.end()) id = it->second;
            blobs.push_back(FootnoteBlob{id, text::normalize_ws(c.text)});
            return;
        }
        if (n.tag == "ol" || n.tag == "ul") {
            walk_list(n, list_depth);
            return;
        }
        if (n.tag == "p" || n.tag == "td" || n.tag == "th") {
            InlineCollector c;
            collect_children_inline(n, c);
            emit(SegmentKind::UnnumberedParagraph, list_depth, "", std::move(c));
            return;
        }
        if (is_heading(n.tag)) {
            InlineCollector c;
            collect_children_inline(n, c);
            emit(SegmentKind::Heading, 0, "", std::move(c));
            return;
        }
        if (inline_tags().count(n.tag) || n.tag == "sup") {
            InlineCollector c;
            collect_inline(n, c);
            emit(SegmentKind::UnnumberedParagraph, list_depth, "", std::move(c));
            return;
        }
        for (const auto& child : n.children) walk(*child, list_depth);
    }
};

}  // namespace

std::string to_string(SegmentKind k) {
    switch (k) {
        case SegmentKind::ListItem: return "ListItem";
        case SegmentKind::UnnumberedParagraph: return "UnnumberedParagraph";
        case SegmentKind::Heading: return "Heading";
    }
    return {};
}

ActivityDocument parse_activity_html(const std::string& raw_html, const ActivityMeta& meta) {
    ActivityDocument doc;
    doc.activity_id = meta.activity_id;
    doc.activity_name = meta.activity_name;
    doc.objective = meta.objective;
    doc.raw_html = raw_html;

    auto dom = parse_dom(raw_html);
    Walker walker;
    walker.walk(*dom, 0);
    doc.segments = std::move(walker.segments);
    doc.footnotes = std::move(walker.blobs);

    if (doc.segments.empty()) throw EmptyDocument("no segments in activity HTML");

    std::set<std::string> known;
    for (const auto& blob : doc.footnotes) known.insert(blob.footnote_id);
    for (std::size_t i = 0; i < doc.segments.size(); ++i) {
        for (const auto& marker : doc.segments[i].footnote_markers) {
            if (!known.count(marker)) doc.unresolved_markers.push_back({i, marker});
        }
    }
    return doc;
}

std::string render_skeleton(const ActivityDocument& doc) {
    std::string out;
    bool list_open = false;
    auto close_list = [&]() {
        if (list_open) {
            out += "</ol>\n";
            list_open = false;
        }
    };
    for (const auto& seg : doc.segments) {
        switch (seg.kind) {
            case SegmentKind::Heading:
                close_list();
                out += "<h2>" + seg.text + "</h2>\n";
                break;
            case SegmentKind::ListItem:
                if (!list_open) {
                    out += "<ol>\n";
                    list_open = true;
                }
                out += "<li>" + seg.text + "</li>\n";
                break;
            case SegmentKind::UnnumberedParagraph:
                out += "<p>" + seg.text + "</p>\n";
                break;
        }
    }
    close_list();
    for (const auto& blob : doc.footnotes) {
        out += "<div id=\"" + blob.footnote_id + "\" class=\"footnote-popover\" hidden>" +
               blob.verbatim + "</div>\n";
    }
    return out;
}

std::string visible_text(const std::string& raw_html) {
    auto dom = parse_dom(raw_html);
    std::string out;
    // Preorder text collection, popovers skipped.
    std::function<void(const Node&)> visit = [&](const Node& n) {
        if (n.is_text) {
            out += n.text;  // raw nodes keep their own whitespace
            return;
        }
        if (n.tag == "head" || n.tag == "title") return;
        if (is_popover(n)) return;
        for (const auto& child : n.children) visit(*child);
        // Only block elements imply a break in the running text.
        if (!inline_tags().count(n.tag) && n.tag != "sup" && n.tag != "br") out += " ";
    };
    visit(*dom);
    return text::normalize_ws(out);
}

}  // namespace critex::ingest
