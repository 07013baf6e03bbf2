#pragma once

#include "kgqa/annotation.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace kgqa {

// Absolute IRI split into a namespace prefix and a percent-encoded local
// name. Predicates configured as full IRIs carry an empty local part.
struct Iri {
    std::string ns;
    std::string local;

    std::string full() const { return ns + local; }
    // The ns/local split is presentational; identity is the full IRI.
    bool operator==(const Iri& o) const { return full() == o.full(); }
    bool operator<(const Iri& o) const { return full() < o.full(); }
};

struct Literal {
    std::string value;
    bool operator==(const Literal& o) const { return value == o.value; }
};

// Literals appear only in object position.
using Term = std::variant<Iri, Literal>;

bool term_equal(const Term& a, const Term& b);
// Stable ordering key: IRIs before literals, then by content.
std::string term_key(const Term& a);

struct Triple {
    Iri subject;
    Iri predicate;
    Term object;

    bool operator==(const Triple& o) const {
        return subject == o.subject && predicate == o.predicate && term_equal(object, o.object);
    }
};

// Deterministic, display-reversible local name: lowercase, spaces to
// underscores, all other non-alphanumerics percent-encoded.
std::string encode_local_name(std::string_view surface);

// Namespace table. Defaults match the example.org layout of the published
// extraction query, with rdf:type as the top-level typing predicate so the
// Turtle/SPARQL keyword `a` resolves naturally.
struct NamespaceConfig {
    std::string base = "http://example.org/base/";
    std::string organization = "http://example.org/organization/";
    std::string person = "http://example.org/person/";
    std::string location = "http://example.org/location/";
    std::string org_role = "http://example.org/org_role/";
    std::string org_sub_role = "http://example.org/org_sub_role/";
    std::string person_position = "http://example.org/person_position/";
    std::string location_type = "http://example.org/location_type/";

    std::string type_pred = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
    std::string subclass_pred = "http://example.org/subClassOf/";
    std::string instance_of_pred = "http://example.org/isInstanceOf/";
    std::string has_employee_pred = "http://example.org/hasEmployee/";
    std::string is_location_of_pred = "http://example.org/isLocationOf/";
    std::string label_pred = "http://example.org/label/";

    // Prefix table used by the Turtle serializer, sorted by prefix name.
    std::vector<std::pair<std::string, std::string>> prefixes() const;

    Iri cls_person() const { return {base, "Person"}; }
    Iri cls_organization() const { return {base, "Organization"}; }
    Iri cls_location() const { return {base, "Location"}; }
    Iri cls_class() const { return {base, "Class"}; }

    Iri pred(const std::string& full_iri) const { return {full_iri, ""}; }
};

// Immutable after finalize(); pattern lookups run off (s), (p), (o) indexes.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;
    explicit KnowledgeGraph(NamespaceConfig ns) : ns_(std::move(ns)) {}

    void add(Triple t); // deduplicating; invalid after finalize()
    void finalize();    // sorts triples and builds indexes

    const std::vector<Triple>& triples() const { return triples_; }
    const NamespaceConfig& ns() const { return ns_; }
    std::size_t size() const { return triples_.size(); }

    // Triples matching all bound positions, in canonical (s,p,o) order.
    std::vector<Triple> match(const std::optional<Term>& s, const std::optional<Term>& p,
                              const std::optional<Term>& o) const;

    // Class-hierarchy subset: subClassOf edges, Class typings and labels of
    // class-namespace subjects.
    std::vector<Triple> ontology() const;

    // Lexicographically smallest label literal of a node, if any.
    std::optional<std::string> label_of(const Iri& node) const;

    bool operator==(const KnowledgeGraph& o) const { return triples_ == o.triples_; }

private:
    NamespaceConfig ns_;
    std::vector<Triple> triples_;
    bool finalized_ = false;
    std::unordered_map<std::string, std::vector<std::size_t>> by_subject_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_predicate_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_object_;
};

// Builds the two-layer graph from a merged, schema-validated annotation set.
// Ontology triples: the three top-level classes; each distinct role,
// position and location-type text as a class under its top-level class; each
// sub-role as a class under its parent role. Data triples: instances with
// one top-level type edge, isInstanceOf edges to their classes (sub-role
// classes shadow the parent role on the instance edge), hasEmployee and
// isLocationOf between instances, and a label literal per named node.
// Throws ValidationError when the set still has continuation links or
// schema violations.
KnowledgeGraph build_graph(const AnnotationSet& a, const NamespaceConfig& ns = {});

// Triple-set union with shared namespaces; ontology dedupes by construction.
KnowledgeGraph union_graphs(const std::vector<KnowledgeGraph>& graphs,
                            const NamespaceConfig& ns = {});

// Byte-deterministic Turtle: prefix block, then triples sorted by the full
// (subject, predicate, object) strings.
std::string serialize_turtle(const KnowledgeGraph& g);

// Supported subset: @prefix, prefixed names, <full IRIs>, `a`, quoted string
// literals with \" \\ \n \r \t escapes, `;`/`,` abbreviations, `#` comments.
// Throws ParseError with line/column, or on unknown prefixes.
KnowledgeGraph parse_turtle(std::string_view text, const NamespaceConfig& ns = {});

} // namespace kgqa
