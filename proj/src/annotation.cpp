#include "kgqa/annotation.hpp"

#include "kgqa/errors.hpp"
#include "kgqa/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace kgqa {

using nlohmann::json;

namespace {

constexpr struct {
    LabelKind kind;
    const char* name;
} kLabelNames[] = {
    {LabelKind::OrgName, "OrgName"},
    {LabelKind::OrgRole, "OrgRole"},
    {LabelKind::OrgSubRole, "OrgSubRole"},
    {LabelKind::PersonName, "PersonName"},
    {LabelKind::PersonPosition, "PersonPosition"},
    {LabelKind::Location, "Location"},
    {LabelKind::LocationType, "LocationType"},
};

constexpr struct {
    RelationKind kind;
    const char* name;
} kRelationNames[] = {
    {RelationKind::OrgHasRole, "OrgHasRole"},
    {RelationKind::RoleHasSubRole, "RoleHasSubRole"},
    {RelationKind::OrgHasPerson, "OrgHasPerson"},
    {RelationKind::PersonHasPosition, "PersonHasPosition"},
    {RelationKind::OrgHasLocation, "OrgHasLocation"},
    {RelationKind::LocationHasType, "LocationHasType"},
    {RelationKind::Continuation, "Continuation"},
};

} // namespace

const char* to_string(LabelKind k) {
    for (const auto& e : kLabelNames)
        if (e.kind == k)
            return e.name;
    return "?";
}

const char* to_string(RelationKind k) {
    for (const auto& e : kRelationNames)
        if (e.kind == k)
            return e.name;
    return "?";
}

std::optional<LabelKind> label_kind_from_string(std::string_view s) {
    for (const auto& e : kLabelNames)
        if (s == e.name)
            return e.kind;
    return std::nullopt;
}

std::optional<RelationKind> relation_kind_from_string(std::string_view s) {
    for (const auto& e : kRelationNames)
        if (s == e.name)
            return e.kind;
    return std::nullopt;
}

LabelKind relation_source_kind(RelationKind k) {
    switch (k) {
    case RelationKind::OrgHasRole: return LabelKind::OrgName;
    case RelationKind::RoleHasSubRole: return LabelKind::OrgRole;
    case RelationKind::OrgHasPerson: return LabelKind::OrgName;
    case RelationKind::PersonHasPosition: return LabelKind::PersonName;
    case RelationKind::OrgHasLocation: return LabelKind::OrgName;
    case RelationKind::LocationHasType: return LabelKind::Location;
    case RelationKind::Continuation: break;
    }
    throw ValidationError("Continuation has no fixed source kind");
}

LabelKind relation_target_kind(RelationKind k) {
    switch (k) {
    case RelationKind::OrgHasRole: return LabelKind::OrgRole;
    case RelationKind::RoleHasSubRole: return LabelKind::OrgSubRole;
    case RelationKind::OrgHasPerson: return LabelKind::PersonName;
    case RelationKind::PersonHasPosition: return LabelKind::PersonPosition;
    case RelationKind::OrgHasLocation: return LabelKind::Location;
    case RelationKind::LocationHasType: return LabelKind::LocationType;
    case RelationKind::Continuation: break;
    }
    throw ValidationError("Continuation has no fixed target kind");
}

const EntitySpan* AnnotationSet::find_span(std::string_view span_id) const {
    for (const auto& s : spans)
        if (s.span_id == span_id)
            return &s;
    return nullptr;
}

namespace {

// Converts a byte offset from the JSON parser into line/column for messages.
std::string describe_position(std::string_view bytes, std::size_t byte_pos) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte_pos && i < bytes.size(); ++i) {
        if (bytes[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    std::ostringstream os;
    os << "line " << line << ", column " << col << " (offset " << byte_pos << ")";
    return os.str();
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string())
        throw SchemaError(where + ": missing or non-string field '" + key + "'");
    return it->get<std::string>();
}

std::size_t require_offset(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_number_unsigned())
        throw SchemaError(where + ": missing or non-integer field '" + key + "'");
    return it->get<std::size_t>();
}

} // namespace

AnnotationSet parse_annotation_file(std::string_view bytes) {
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("annotation parse error at ") +
                         describe_position(bytes, e.byte ? e.byte - 1 : 0) + ": " + e.what());
    }
    if (!doc.is_object())
        throw SchemaError("annotation file: top level must be a JSON object");

    AnnotationSet out;
    const auto& d = doc.find("document");
    if (d == doc.end() || !d->is_object())
        throw SchemaError("annotation file: missing 'document' object");
    out.doc_id = require_string(*d, "id", "document");
    out.document_text = require_string(*d, "text", "document");

    std::unordered_map<std::string, LabelKind> span_kinds;
    if (auto spans = doc.find("spans"); spans != doc.end()) {
        if (!spans->is_array())
            throw SchemaError("annotation file: 'spans' must be an array");
        for (const auto& s : *spans) {
            EntitySpan span;
            span.doc_id = out.doc_id;
            span.span_id = require_string(s, "id", "span");
            auto kind_str = require_string(s, "kind", "span " + span.span_id);
            auto kind = label_kind_from_string(kind_str);
            if (!kind)
                throw SchemaError("span " + span.span_id + ": unknown label kind '" + kind_str +
                                  "'");
            span.kind = *kind;
            span.char_start = require_offset(s, "start", "span " + span.span_id);
            span.char_end = require_offset(s, "end", "span " + span.span_id);
            span.text = require_string(s, "text", "span " + span.span_id);
            if (!(span.char_start < span.char_end) || span.char_end > out.document_text.size())
                throw SchemaError("span " + span.span_id + ": offsets [" +
                                  std::to_string(span.char_start) + "," +
                                  std::to_string(span.char_end) + ") out of range");
            auto substr = out.document_text.substr(span.char_start,
                                                   span.char_end - span.char_start);
            if (collapse_whitespace(substr) != collapse_whitespace(span.text))
                throw SchemaError("span " + span.span_id +
                                  ": text does not match the document substring");
            if (span_kinds.count(span.span_id))
                throw SchemaError("duplicate span id '" + span.span_id + "'");
            span_kinds.emplace(span.span_id, span.kind);
            out.spans.push_back(std::move(span));
        }
    }

    if (auto rels = doc.find("relations"); rels != doc.end()) {
        if (!rels->is_array())
            throw SchemaError("annotation file: 'relations' must be an array");
        for (const auto& r : *rels) {
            Relation rel;
            rel.from_span = require_string(r, "from", "relation");
            rel.to_span = require_string(r, "to", "relation");
            auto kind_str = require_string(r, "kind", "relation");
            auto kind = relation_kind_from_string(kind_str);
            if (!kind)
                throw SchemaError("relation " + rel.from_span + "->" + rel.to_span +
                                  ": unknown relation kind '" + kind_str + "'");
            rel.kind = *kind;
            if (!span_kinds.count(rel.from_span))
                throw ReferenceError("relation endpoint '" + rel.from_span +
                                     "' does not resolve to a span");
            if (!span_kinds.count(rel.to_span))
                throw ReferenceError("relation endpoint '" + rel.to_span +
                                     "' does not resolve to a span");
            out.relations.push_back(std::move(rel));
        }
    }
    return out;
}

std::string serialize_annotation_file(const AnnotationSet& a) {
    json doc;
    doc["document"] = {{"id", a.doc_id}, {"text", a.document_text}};
    doc["spans"] = json::array();
    for (const auto& s : a.spans) {
        doc["spans"].push_back({{"id", s.span_id},
                                {"kind", to_string(s.kind)},
                                {"start", s.char_start},
                                {"end", s.char_end},
                                {"text", s.text}});
    }
    doc["relations"] = json::array();
    for (const auto& r : a.relations) {
        doc["relations"].push_back(
            {{"from", r.from_span}, {"to", r.to_span}, {"kind", to_string(r.kind)}});
    }
    return doc.dump(2) + "\n";
}

AnnotationSet merge_continuations(const AnnotationSet& a) {
    // Chain topology: at most one outgoing and one incoming link per span.
    std::unordered_map<std::string, std::string> next;
    std::unordered_set<std::string> has_incoming;
    for (const auto& r : a.relations) {
        if (r.kind != RelationKind::Continuation)
            continue;
        const auto* from = a.find_span(r.from_span);
        const auto* to = a.find_span(r.to_span);
        if (!from || !to)
            throw ReferenceError("continuation endpoint does not resolve");
        if (from->kind != to->kind)
            throw ValidationError("continuation chain mixes label kinds: " + r.from_span +
                                  " -> " + r.to_span);
        if (!next.emplace(r.from_span, r.to_span).second)
            throw ValidationError("span " + r.from_span + " has two outgoing continuations");
        if (!has_incoming.insert(r.to_span).second)
            throw ValidationError("span " + r.to_span + " has two incoming continuations");
    }
    if (next.empty()) {
        AnnotationSet copy = a;
        return copy;
    }

    // Walk each chain from its head; a chain without a head is a cycle.
    std::unordered_map<std::string, std::string> merged_into; // member -> head id
    std::unordered_map<std::string, EntitySpan> merged_spans; // head id -> merged span
    std::unordered_set<std::string> visited;
    for (const auto& [from, to] : next) {
        if (has_incoming.count(from))
            continue; // not a head
        EntitySpan merged = *a.find_span(from);
        std::string cur = from;
        visited.insert(cur);
        merged_into[cur] = from;
        while (true) {
            auto it = next.find(cur);
            if (it == next.end())
                break;
            cur = it->second;
            if (!visited.insert(cur).second)
                throw ValidationError("cyclic continuation chain through span " + cur);
            const auto* seg = a.find_span(cur);
            merged.text += " " + seg->text;
            merged.char_start = std::min(merged.char_start, seg->char_start);
            merged.char_end = std::max(merged.char_end, seg->char_end);
            merged_into[cur] = from;
        }
        merged_spans.emplace(from, std::move(merged));
    }
    // Any linked span not reached from a head sits on a cycle.
    for (const auto& [from, to] : next) {
        if (!visited.count(from))
            throw ValidationError("cyclic continuation chain through span " + from);
    }

    AnnotationSet out;
    out.doc_id = a.doc_id;
    out.document_text = a.document_text;
    for (const auto& s : a.spans) {
        auto it = merged_into.find(s.span_id);
        if (it == merged_into.end()) {
            out.spans.push_back(s);
        } else if (it->second == s.span_id) {
            out.spans.push_back(merged_spans.at(s.span_id));
        } // non-head members vanish
    }
    for (const auto& r : a.relations) {
        if (r.kind == RelationKind::Continuation)
            continue;
        Relation rel = r;
        if (auto it = merged_into.find(rel.from_span); it != merged_into.end())
            rel.from_span = it->second;
        if (auto it = merged_into.find(rel.to_span); it != merged_into.end())
            rel.to_span = it->second;
        out.relations.push_back(std::move(rel));
    }
    return out;
}

std::vector<Violation> validate_schema(const AnnotationSet& a) {
    std::vector<Violation> out;
    for (const auto& s : a.spans) {
        if (!(s.char_start < s.char_end) || s.char_end > a.document_text.size())
            out.push_back({"offset-out-of-range",
                           "span " + s.span_id + " offsets [" + std::to_string(s.char_start) +
                               "," + std::to_string(s.char_end) + ") out of range"});
    }
    // Duplicate (kind, start, end) among spans.
    std::map<std::tuple<LabelKind, std::size_t, std::size_t>, std::string> seen;
    for (const auto& s : a.spans) {
        auto key = std::make_tuple(s.kind, s.char_start, s.char_end);
        auto [it, inserted] = seen.emplace(key, s.span_id);
        if (!inserted)
            out.push_back({"duplicate-span", "spans " + it->second + " and " + s.span_id +
                                                 " share kind and offsets"});
    }
    std::map<std::string, int> location_type_count;
    for (const auto& r : a.relations) {
        const auto* from = a.find_span(r.from_span);
        const auto* to = a.find_span(r.to_span);
        if (!from || !to) {
            out.push_back({"dangling-relation",
                           "relation " + r.from_span + "->" + r.to_span + " has missing spans"});
            continue;
        }
        if (r.kind == RelationKind::Continuation) {
            if (from->kind != to->kind)
                out.push_back({"continuation-kind-mismatch",
                               "continuation " + r.from_span + "->" + r.to_span +
                                   " links different label kinds"});
            continue;
        }
        LabelKind want_from = relation_source_kind(r.kind);
        LabelKind want_to = relation_target_kind(r.kind);
        if (from->kind != want_from || to->kind != want_to) {
            out.push_back({"illegal-relation",
                           std::string(to_string(r.kind)) + " " + r.from_span + "->" + r.to_span +
                               " expects " + to_string(want_from) + "->" + to_string(want_to) +
                               ", got " + to_string(from->kind) + "->" + to_string(to->kind)});
        }
        if (r.kind == RelationKind::LocationHasType)
            ++location_type_count[r.from_span];
    }
    for (const auto& [loc, count] : location_type_count) {
        if (count > 1)
            out.push_back({"duplicate-location-type",
                           "location " + loc + " has " + std::to_string(count) +
                               " LocationHasType relations; exactly one type is allowed"});
    }
    return out;
}

CorpusStats compute_corpus_stats(const std::vector<AnnotationSet>& corpus) {
    if (corpus.empty())
        throw ValidationError("compute_corpus_stats: corpus is empty");

    auto add_row = [&](const std::string& name, const std::vector<double>& values) {
        StatsRow row;
        row.name = name;
        row.min = *std::min_element(values.begin(), values.end());
        row.max = *std::max_element(values.begin(), values.end());
        double sum = 0;
        for (double v : values)
            sum += v;
        row.avg = sum / static_cast<double>(values.size());
        return row;
    };

    CorpusStats stats;
    std::vector<double> tokens, sentences;
    for (const auto& a : corpus) {
        tokens.push_back(estimate_tokens(a.document_text));
        sentences.push_back(static_cast<double>(split_sentences(a.document_text).size()));
    }
    stats.rows.push_back(add_row("Tokens", tokens));
    stats.rows.push_back(add_row("Sentences", sentences));

    for (const auto& e : kLabelNames) {
        std::vector<double> counts;
        for (const auto& a : corpus) {
            double c = 0;
            for (const auto& s : a.spans)
                if (s.kind == e.kind)
                    ++c;
            counts.push_back(c);
        }
        stats.rows.push_back(add_row(e.name, counts));
    }
    for (const auto& e : kRelationNames) {
        if (e.kind == RelationKind::Continuation)
            continue; // merged away before stats
        std::vector<double> counts;
        for (const auto& a : corpus) {
            double c = 0;
            for (const auto& r : a.relations)
                if (r.kind == e.kind)
                    ++c;
            counts.push_back(c);
        }
        stats.rows.push_back(add_row(e.name, counts));
    }
    return stats;
}

namespace {

std::string format_number(double v) {
    std::ostringstream os;
    if (v == static_cast<long long>(v)) {
        os << static_cast<long long>(v);
    } else {
        os.setf(std::ios::fixed);
        os.precision(2);
        os << v;
    }
    return os.str();
}

} // namespace

std::string CorpusStats::to_csv() const {
    std::ostringstream os;
    os << "row,min,avg,max\n";
    for (const auto& r : rows)
        os << r.name << "," << format_number(r.min) << "," << format_number(r.avg) << ","
           << format_number(r.max) << "\n";
    return os.str();
}

std::string CorpusStats::to_table() const {
    std::size_t name_w = 4;
    for (const auto& r : rows)
        name_w = std::max(name_w, r.name.size());
    std::ostringstream os;
    os << std::left;
    os.width(static_cast<std::streamsize>(name_w));
    os << "Row";
    os << "  " << std::right;
    auto cell = [&](const std::string& s) {
        os.width(10);
        os << s;
    };
    cell("Min");
    cell("Avg");
    cell("Max");
    os << "\n";
    for (const auto& r : rows) {
        os << std::left;
        os.width(static_cast<std::streamsize>(name_w));
        os << r.name << "  " << std::right;
        cell(format_number(r.min));
        cell(format_number(r.avg));
        cell(format_number(r.max));
        os << "\n";
    }
    return os.str();
}

} // namespace kgqa
