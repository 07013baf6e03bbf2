#include "kgqa/kg.hpp"

#include "kgqa/errors.hpp"
#include "kgqa/text.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace kgqa {

bool term_equal(const Term& a, const Term& b) {
    if (a.index() != b.index())
        return false;
    if (std::holds_alternative<Iri>(a))
        return std::get<Iri>(a) == std::get<Iri>(b);
    return std::get<Literal>(a) == std::get<Literal>(b);
}

std::string term_key(const Term& t) {
    if (std::holds_alternative<Iri>(t))
        return "I" + std::get<Iri>(t).full();
    return "L" + std::get<Literal>(t).value;
}

std::string encode_local_name(std::string_view surface) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    out.reserve(surface.size());
    for (unsigned char c : surface) {
        if (std::isalnum(c)) {
            out.push_back(static_cast<char>(std::tolower(c)));
        } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            out.push_back('_');
        } else if (c == '_') {
            out.push_back('_');
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> NamespaceConfig::prefixes() const {
    return {
        {"base", base},
        {"location", location},
        {"loctype", location_type},
        {"org", organization},
        {"person", person},
        {"position", person_position},
        {"rdf", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"},
        {"role", org_role},
        {"subrole", org_sub_role},
    };
}

namespace {

struct TripleLess {
    bool operator()(const Triple& a, const Triple& b) const {
        if (a.subject.full() != b.subject.full())
            return a.subject.full() < b.subject.full();
        if (a.predicate.full() != b.predicate.full())
            return a.predicate.full() < b.predicate.full();
        return term_key(a.object) < term_key(b.object);
    }
};

} // namespace

void KnowledgeGraph::add(Triple t) {
    if (finalized_)
        throw ValidationError("KnowledgeGraph: add() after finalize()");
    triples_.push_back(std::move(t));
}

void KnowledgeGraph::finalize() {
    std::sort(triples_.begin(), triples_.end(), TripleLess{});
    triples_.erase(std::unique(triples_.begin(), triples_.end()), triples_.end());
    by_subject_.clear();
    by_predicate_.clear();
    by_object_.clear();
    for (std::size_t i = 0; i < triples_.size(); ++i) {
        by_subject_[triples_[i].subject.full()].push_back(i);
        by_predicate_[triples_[i].predicate.full()].push_back(i);
        by_object_[term_key(triples_[i].object)].push_back(i);
    }
    finalized_ = true;
}

std::vector<Triple> KnowledgeGraph::match(const std::optional<Term>& s,
                                          const std::optional<Term>& p,
                                          const std::optional<Term>& o) const {
    auto matches = [&](const Triple& t) {
        if (s) {
            if (!std::holds_alternative<Iri>(*s))
                return false;
            if (!(t.subject == std::get<Iri>(*s)))
                return false;
        }
        if (p) {
            if (!std::holds_alternative<Iri>(*p))
                return false;
            if (!(t.predicate == std::get<Iri>(*p)))
                return false;
        }
        if (o && !term_equal(t.object, *o))
            return false;
        return true;
    };

    // Pick the narrowest index among the bound positions; fall back to scan.
    const std::vector<std::size_t>* candidates = nullptr;
    if (finalized_) {
        auto consider = [&](const std::unordered_map<std::string, std::vector<std::size_t>>& idx,
                            const std::string& key) {
            auto it = idx.find(key);
            static const std::vector<std::size_t> kEmpty;
            const std::vector<std::size_t>* found = (it == idx.end()) ? &kEmpty : &it->second;
            if (!candidates || found->size() < candidates->size())
                candidates = found;
        };
        if (s && std::holds_alternative<Iri>(*s))
            consider(by_subject_, std::get<Iri>(*s).full());
        if (p && std::holds_alternative<Iri>(*p))
            consider(by_predicate_, std::get<Iri>(*p).full());
        if (o)
            consider(by_object_, term_key(*o));
    }

    std::vector<Triple> out;
    if (candidates) {
        for (std::size_t i : *candidates)
            if (matches(triples_[i]))
                out.push_back(triples_[i]);
    } else {
        for (const auto& t : triples_)
            if (matches(t))
                out.push_back(t);
    }
    std::sort(out.begin(), out.end(), TripleLess{});
    return out;
}

std::vector<Triple> KnowledgeGraph::ontology() const {
    auto is_class_ns = [&](const std::string& ns) {
        return ns == ns_.base || ns == ns_.org_role || ns == ns_.org_sub_role ||
               ns == ns_.person_position || ns == ns_.location_type;
    };
    std::vector<Triple> out;
    for (const auto& t : triples_) {
        bool ontological = false;
        if (t.predicate.full() == ns_.subclass_pred) {
            ontological = true;
        } else if (t.predicate.full() == ns_.type_pred && std::holds_alternative<Iri>(t.object) &&
                   std::get<Iri>(t.object) == ns_.cls_class()) {
            ontological = true;
        } else if (t.predicate.full() == ns_.label_pred && is_class_ns(t.subject.ns) &&
                   t.subject.ns != ns_.base) {
            ontological = true;
        }
        if (ontological)
            out.push_back(t);
    }
    return out;
}

std::optional<std::string> KnowledgeGraph::label_of(const Iri& node) const {
    auto hits = match(Term{node}, Term{Iri{ns_.label_pred, ""}}, std::nullopt);
    std::optional<std::string> best;
    for (const auto& t : hits) {
        if (!std::holds_alternative<Literal>(t.object))
            continue;
        const auto& v = std::get<Literal>(t.object).value;
        if (!best || v < *best)
            best = v;
    }
    return best;
}

namespace {

struct SpanIndex {
    std::unordered_map<std::string, const EntitySpan*> by_id;
    // Outgoing relation targets by (span id, relation kind).
    std::map<std::pair<std::string, RelationKind>, std::vector<const EntitySpan*>> out;

    explicit SpanIndex(const AnnotationSet& a) {
        for (const auto& s : a.spans)
            by_id.emplace(s.span_id, &s);
        for (const auto& r : a.relations) {
            auto from = by_id.find(r.from_span);
            auto to = by_id.find(r.to_span);
            if (from == by_id.end() || to == by_id.end())
                throw ReferenceError("relation endpoint does not resolve: " + r.from_span +
                                     " -> " + r.to_span);
            out[{r.from_span, r.kind}].push_back(to->second);
        }
    }

    const std::vector<const EntitySpan*>& targets(const std::string& id,
                                                  RelationKind kind) const {
        static const std::vector<const EntitySpan*> kEmpty;
        auto it = out.find({id, kind});
        return it == out.end() ? kEmpty : it->second;
    }
};

} // namespace

KnowledgeGraph build_graph(const AnnotationSet& a, const NamespaceConfig& ns) {
    for (const auto& r : a.relations)
        if (r.kind == RelationKind::Continuation)
            throw ValidationError("build_graph: input still has continuation links; merge first");
    if (auto violations = validate_schema(a); !violations.empty())
        throw ValidationError("build_graph: input has " + std::to_string(violations.size()) +
                              " schema violations; first: " + violations.front().message);

    KnowledgeGraph g(ns);
    const Iri type{ns.type_pred, ""};
    const Iri subclass{ns.subclass_pred, ""};
    const Iri instance_of{ns.instance_of_pred, ""};
    const Iri has_employee{ns.has_employee_pred, ""};
    const Iri is_location_of{ns.is_location_of_pred, ""};
    const Iri label{ns.label_pred, ""};

    g.add({ns.cls_person(), type, ns.cls_class()});
    g.add({ns.cls_organization(), type, ns.cls_class()});
    g.add({ns.cls_location(), type, ns.cls_class()});

    SpanIndex idx(a);

    auto class_iri = [&](const EntitySpan& s) -> Iri {
        const std::string* class_ns = nullptr;
        switch (s.kind) {
        case LabelKind::OrgRole: class_ns = &ns.org_role; break;
        case LabelKind::OrgSubRole: class_ns = &ns.org_sub_role; break;
        case LabelKind::PersonPosition: class_ns = &ns.person_position; break;
        case LabelKind::LocationType: class_ns = &ns.location_type; break;
        default: throw ValidationError("not a class-layer span kind");
        }
        return {*class_ns, encode_local_name(collapse_whitespace(s.text))};
    };
    auto instance_iri = [&](const EntitySpan& s) -> Iri {
        const std::string* inst_ns = nullptr;
        switch (s.kind) {
        case LabelKind::OrgName: inst_ns = &ns.organization; break;
        case LabelKind::PersonName: inst_ns = &ns.person; break;
        case LabelKind::Location: inst_ns = &ns.location; break;
        default: throw ValidationError("not a data-layer span kind");
        }
        return {*inst_ns, encode_local_name(collapse_whitespace(s.text))};
    };
    auto declare_class = [&](const EntitySpan& s, const Iri& parent) {
        Iri cls = class_iri(s);
        g.add({cls, subclass, parent});
        g.add({cls, label, Literal{collapse_whitespace(s.text)}});
        return cls;
    };

    // Ontology layer from the class-bearing spans.
    for (const auto& s : a.spans) {
        switch (s.kind) {
        case LabelKind::OrgRole: {
            Iri role_cls = declare_class(s, ns.cls_organization());
            for (const auto* sub : idx.targets(s.span_id, RelationKind::RoleHasSubRole)) {
                Iri sub_cls = declare_class(*sub, role_cls);
                (void)sub_cls;
            }
            break;
        }
        case LabelKind::PersonPosition:
            declare_class(s, ns.cls_person());
            break;
        case LabelKind::LocationType:
            declare_class(s, ns.cls_location());
            break;
        default:
            break;
        }
    }

    // Data layer.
    for (const auto& s : a.spans) {
        if (s.kind != LabelKind::OrgName && s.kind != LabelKind::PersonName &&
            s.kind != LabelKind::Location)
            continue;
        Iri inst = instance_iri(s);
        Iri top = s.kind == LabelKind::OrgName      ? ns.cls_organization()
                  : s.kind == LabelKind::PersonName ? ns.cls_person()
                                                    : ns.cls_location();
        g.add({inst, type, top});
        g.add({inst, label, Literal{collapse_whitespace(s.text)}});
    }
    for (const auto& s : a.spans) {
        if (s.kind == LabelKind::OrgName) {
            Iri org = instance_iri(s);
            for (const auto* role : idx.targets(s.span_id, RelationKind::OrgHasRole)) {
                const auto& subs = idx.targets(role->span_id, RelationKind::RoleHasSubRole);
                if (subs.empty()) {
                    g.add({org, instance_of, class_iri(*role)});
                } else {
                    // Sub-roles shadow the parent role on the instance edge.
                    for (const auto* sub : subs)
                        g.add({org, instance_of, class_iri(*sub)});
                }
            }
            for (const auto* person : idx.targets(s.span_id, RelationKind::OrgHasPerson))
                g.add({org, has_employee, instance_iri(*person)});
            for (const auto* loc : idx.targets(s.span_id, RelationKind::OrgHasLocation))
                g.add({instance_iri(*loc), is_location_of, org});
        } else if (s.kind == LabelKind::PersonName) {
            Iri person = instance_iri(s);
            for (const auto* pos : idx.targets(s.span_id, RelationKind::PersonHasPosition))
                g.add({person, instance_of, class_iri(*pos)});
        } else if (s.kind == LabelKind::Location) {
            Iri loc = instance_iri(s);
            for (const auto* t : idx.targets(s.span_id, RelationKind::LocationHasType))
                g.add({loc, instance_of, class_iri(*t)});
        }
    }

    g.finalize();
    return g;
}

KnowledgeGraph union_graphs(const std::vector<KnowledgeGraph>& graphs,
                            const NamespaceConfig& ns) {
    KnowledgeGraph out(ns);
    for (const auto& g : graphs)
        for (const auto& t : g.triples())
            out.add(t);
    out.finalize();
    return out;
}

} // namespace kgqa
