#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace kgqa {

// The seven entity label kinds. Closed set: anything else is a schema error.
enum class LabelKind {
    OrgName,
    OrgRole,
    OrgSubRole,
    PersonName,
    PersonPosition,
    Location,
    LocationType,
};

// The six directed relation kinds plus same-kind continuation chaining.
enum class RelationKind {
    OrgHasRole,        // OrgName -> OrgRole
    RoleHasSubRole,    // OrgRole -> OrgSubRole
    OrgHasPerson,      // OrgName -> PersonName
    PersonHasPosition, // PersonName -> PersonPosition
    OrgHasLocation,    // OrgName -> Location
    LocationHasType,   // Location -> LocationType
    Continuation,      // same-kind span chaining
};

const char* to_string(LabelKind k);
const char* to_string(RelationKind k);
std::optional<LabelKind> label_kind_from_string(std::string_view s);
std::optional<RelationKind> relation_kind_from_string(std::string_view s);

// Legal (source, target) label kinds for a non-Continuation relation.
LabelKind relation_source_kind(RelationKind k);
LabelKind relation_target_kind(RelationKind k);

struct EntitySpan {
    std::string span_id;
    std::string doc_id;
    LabelKind kind = LabelKind::OrgName;
    std::string text;
    std::size_t char_start = 0;
    std::size_t char_end = 0; // half-open
};

struct Relation {
    std::string from_span;
    std::string to_span;
    RelationKind kind = RelationKind::OrgHasRole;
};

struct AnnotationSet {
    std::string doc_id;
    std::string document_text;
    std::vector<EntitySpan> spans;
    std::vector<Relation> relations;

    const EntitySpan* find_span(std::string_view span_id) const;
};

// One schema violation. Violations are returned data, not failures.
struct Violation {
    std::string code;    // e.g. "illegal-relation", "duplicate-location-type"
    std::string message; // human readable, names the offending ids
};

// Parses the canonical UTF-8 JSON annotation format:
//   {"document": {"id", "text"},
//    "spans": [{"id", "kind", "start", "end", "text"}, ...],
//    "relations": [{"from", "to", "kind"}, ...]}
// Throws ParseError (malformed syntax, with position), SchemaError (unknown
// kinds, bad offsets, span text disagreeing with the document substring after
// whitespace normalization), ReferenceError (dangling relation endpoints).
AnnotationSet parse_annotation_file(std::string_view bytes);

// Inverse of parse_annotation_file; parse(serialize(a)) == a.
std::string serialize_annotation_file(const AnnotationSet& a);

// Collapses every continuation chain to a single span whose text is the
// chain's texts joined by single spaces in link order; relations touching
// any chain member are re-pointed at the merged span. Output contains no
// Continuation relations. Idempotent. Throws ValidationError on cyclic or
// non-linear chains and on chains that mix label kinds.
AnnotationSet merge_continuations(const AnnotationSet& a);

// Checks relation legality, the one-type-per-location rule, offset ranges
// and duplicate spans. Empty result means the set is clean.
std::vector<Violation> validate_schema(const AnnotationSet& a);

// Per-document min/avg/max rows over token count, sentence count and the
// per-kind span/relation counts.
struct StatsRow {
    std::string name;
    double min = 0, avg = 0, max = 0;
};

struct CorpusStats {
    std::vector<StatsRow> rows;

    std::string to_csv() const;   // header row,min,avg,max
    std::string to_table() const; // aligned plain text
};

// Throws ValidationError on an empty corpus.
CorpusStats compute_corpus_stats(const std::vector<AnnotationSet>& corpus);

} // namespace kgqa
