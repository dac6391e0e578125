#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace critex::ingest {

enum class SegmentKind { ListItem, UnnumberedParagraph, Heading };

std::string to_string(SegmentKind k);

struct Segment {
    SegmentKind kind = SegmentKind::UnnumberedParagraph;
    int depth_hint = 0;          // markup nesting depth, advisory only
    std::string marker;          // e.g. "(a)", "1."; empty for paragraphs
    std::string text;            // whitespace-normalized
    std::vector<std::string> footnote_markers;  // e.g. "fn-230"
};

struct FootnoteBlob {
    std::string footnote_id;  // e.g. "fn-230"
    std::string verbatim;
};

struct UnresolvedMarker {
    std::size_t segment_index;
    std::string footnote_id;
};

struct ActivityMeta {
    std::string activity_id;
    std::string activity_name;
    std::string objective;
};

struct ActivityDocument {
    std::string activity_id;
    std::string activity_name;
    std::string objective;
    std::string raw_html;
    std::vector<Segment> segments;
    std::vector<FootnoteBlob> footnotes;
    std::vector<UnresolvedMarker> unresolved_markers;
};

struct EmptyDocument : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flattens semi-structured regulatory HTML into an ordered segment
/// stream. Parsing is tolerant: unclosed tags are recovered, unknown
/// tags pass through. Footnote popovers (hidden elements whose id is
/// "fn-<n>") become FootnoteBlob records; superscripted "(n)" markers
/// in running text are linked to them, or flagged unresolved.
/// Throws EmptyDocument when no segments are found.
ActivityDocument parse_activity_html(const std::string& raw_html, const ActivityMeta& meta);

/// Minimal HTML rendering of the segment stream; reparsing it yields
/// the same segment kinds in the same order. Used for debug dumps.
std::string render_skeleton(const ActivityDocument& doc);

/// All visible text of the document (popovers excluded), normalized.
std::string visible_text(const std::string& raw_html);

}  // namespace critex::ingest
