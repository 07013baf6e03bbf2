#pragma once

#include "kgqa/kg.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace kgqa {

// One position of a triple pattern: a variable or a ground term.
struct PatternSlot {
    bool is_var = false;
    std::string var; // without the '?'
    Term term = Literal{};

    static PatternSlot variable(std::string name) { return {true, std::move(name), Literal{}}; }
    static PatternSlot ground(Term t) { return {false, "", std::move(t)}; }
};

struct TriplePattern {
    PatternSlot subject, predicate, object;
};

// STRSTARTS(STR(?var), "prefix")
struct FilterExpr {
    std::string var;
    std::string prefix;
};

// (GROUP_CONCAT(?var; separator="...") as ?alias)
struct AggregateExpr {
    std::string var;
    std::string separator = " ";
    std::string alias;
};

struct Projection {
    bool is_aggregate = false;
    std::string var; // plain variable when !is_aggregate
    AggregateExpr aggregate;

    const std::string& column_name() const { return is_aggregate ? aggregate.alias : var; }
};

struct Query {
    std::vector<Projection> projection;
    bool distinct = false;
    std::vector<TriplePattern> patterns;
    std::vector<FilterExpr> filters;
    std::vector<std::string> group_by;
};

// A solution cell is either a bound term or an aggregate string.
struct SolutionCell {
    bool is_term = true;
    Term term = Literal{};
    std::string text; // aggregate result when !is_term

    std::string display() const;
};

struct SolutionTable {
    std::vector<std::string> columns;
    std::vector<std::vector<SolutionCell>> rows; // sorted by stringified row

    std::string to_tsv() const;
};

// Display/aggregation name of an IRI: the segment after the last '/' or '#'
// (ignoring a trailing separator).
std::string iri_display_name(const std::string& full_iri);

// Parses the SELECT subset: DISTINCT, basic graph patterns with ';'/','
// abbreviations, `a`, PREFIX declarations, STRSTARTS filters, GROUP BY and
// GROUP_CONCAT. Out-of-subset keywords raise UnsupportedFeatureError naming
// the construct; malformed text raises ParseError with position.
Query parse_query(std::string_view text);

// Brute-force-equivalent semantics: natural join of pattern matches in
// order, conjunctive filters, grouping, aggregation, projection, dedup under
// DISTINCT. Aggregate members are sorted lexicographically before joining.
SolutionTable evaluate(const Query& q, const KnowledgeGraph& g);

} // namespace kgqa
