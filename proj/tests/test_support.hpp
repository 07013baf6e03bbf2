#pragma once

// Shared test fixtures: random legal annotation sets, random graphs and the
// independent brute-force oracles the unit and acceptance suites check the
// library against. Everything here must stay independent of the library's
// query/join/set machinery: plain loops and string maps only.

#include "kgqa/annotation.hpp"
#include "kgqa/kg.hpp"
#include "kgqa/qagen.hpp"
#include "kgqa/query.hpp"
#include "kgqa/templates.hpp"
#include "kgqa/text.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace testsupport {

inline std::string repo_path(const std::string& rel) {
    return std::string(KGQA_SOURCE_DIR) + "/" + rel;
}

inline std::string golden_path(const std::string& name) {
    return std::string(KGQA_GOLDEN_DIR) + "/" + name;
}

// ---------------------------------------------------------------- builders

class DocBuilder {
public:
    explicit DocBuilder(std::string doc_id) { set_.doc_id = std::move(doc_id); }

    void emit(const std::string& s) { set_.document_text += s; }

    std::string mark(const std::string& s, kgqa::LabelKind kind) {
        kgqa::EntitySpan span;
        span.doc_id = set_.doc_id;
        span.span_id = "s" + std::to_string(++counter_);
        span.kind = kind;
        span.char_start = set_.document_text.size();
        set_.document_text += s;
        span.char_end = set_.document_text.size();
        span.text = s;
        set_.spans.push_back(span);
        return set_.spans.back().span_id;
    }

    void rel(const std::string& from, const std::string& to, kgqa::RelationKind kind) {
        set_.relations.push_back({from, to, kind});
    }

    const kgqa::AnnotationSet& result() const { return set_; }

private:
    kgqa::AnnotationSet set_;
    int counter_ = 0;
};

// Random legal annotation set with at most `max_entities` spans. Surfaces
// come from fixed pools with no case-variant collisions.
inline kgqa::AnnotationSet random_annotation_set(std::mt19937& rng, int max_entities = 15) {
    static const std::vector<std::string> kOrgs = {
        "Acme Corp", "Beta Holdings", "Gamma Bank NA", "Delta Partners", "Epsilon Trust"};
    static const std::vector<std::string> kRoles = {"Lender", "Borrower", "Guarantor", "Agent",
                                                    "Arranger"};
    static const std::vector<std::string> kSubRoles = {"Administrative Agent",
                                                       "Documentation Agent", "Lead Lender"};
    static const std::vector<std::string> kPersons = {"Alice North", "Bob South", "Cara West",
                                                      "Dan East", "Eve Stone", "Frank Hill"};
    static const std::vector<std::string> kPositions = {
        "Vice President", "Treasurer", "Secretary", "General Manager", "Director"};
    static const std::vector<std::string> kLocations = {
        "1 Oak Street, Springfield", "2 Elm Road, Riverton", "3 Pine Lane, Hilltop",
        "4 Birch Way, Lakeside"};
    static const std::vector<std::string> kTypes = {"Headquarters", "Branch Office",
                                                    "Registered Office"};

    auto pick = [&](const std::vector<std::string>& pool, std::set<std::string>& used)
        -> const std::string* {
        std::vector<const std::string*> free;
        for (const auto& s : pool)
            if (!used.count(s))
                free.push_back(&s);
        if (free.empty())
            return nullptr;
        const std::string* chosen = free[rng() % free.size()];
        used.insert(*chosen);
        return chosen;
    };
    auto chance = [&](int pct) { return static_cast<int>(rng() % 100) < pct; };

    DocBuilder d("rand_doc");
    int budget = max_entities;
    std::set<std::string> used_orgs, used_persons, used_locations;

    int n_orgs = 1 + static_cast<int>(rng() % 3);
    for (int oi = 0; oi < n_orgs && budget > 1; ++oi) {
        const std::string* org_name = pick(kOrgs, used_orgs);
        if (!org_name)
            break;
        d.emit("This Agreement names ");
        std::string org = d.mark(*org_name, kgqa::LabelKind::OrgName);
        --budget;

        // roles (position spans per org, same text may repeat across orgs)
        std::set<std::string> used_roles;
        int n_roles = static_cast<int>(rng() % 3);
        for (int ri = 0; ri < n_roles && budget > 0; ++ri) {
            const std::string* role_name = pick(kRoles, used_roles);
            if (!role_name)
                break;
            d.emit(ri == 0 ? " as " : " and ");
            std::string role = d.mark(*role_name, kgqa::LabelKind::OrgRole);
            --budget;
            d.rel(org, role, kgqa::RelationKind::OrgHasRole);
            if (budget > 0 && chance(25)) {
                d.emit(" (acting as ");
                const std::string& sub = kSubRoles[rng() % kSubRoles.size()];
                std::string sub_id = d.mark(sub, kgqa::LabelKind::OrgSubRole);
                --budget;
                d.emit(")");
                d.rel(role, sub_id, kgqa::RelationKind::RoleHasSubRole);
            }
        }
        d.emit(". ");

        // persons with positions
        int n_persons = static_cast<int>(rng() % 3);
        std::vector<std::pair<std::string, std::string>> position_spans; // text -> id
        for (int pi = 0; pi < n_persons && budget > 0; ++pi) {
            const std::string* person_name = pick(kPersons, used_persons);
            if (!person_name)
                break;
            d.emit("It is signed by ");
            std::string person = d.mark(*person_name, kgqa::LabelKind::PersonName);
            --budget;
            d.rel(org, person, kgqa::RelationKind::OrgHasPerson);
            std::set<std::string> person_used_positions;
            int n_pos = static_cast<int>(rng() % 4);
            for (int xi = 0; xi < n_pos; ++xi) {
                const std::string& pos_text = kPositions[rng() % kPositions.size()];
                if (person_used_positions.count(pos_text))
                    continue;
                person_used_positions.insert(pos_text);
                std::string pos_id;
                // reuse a same-text span sometimes, once-per-description style
                for (const auto& [text, id] : position_spans)
                    if (text == pos_text && chance(50))
                        pos_id = id;
                if (pos_id.empty()) {
                    if (budget <= 0)
                        break;
                    d.emit(xi == 0 ? ", " : " and ");
                    pos_id = d.mark(pos_text, kgqa::LabelKind::PersonPosition);
                    --budget;
                    position_spans.emplace_back(pos_text, pos_id);
                }
                d.rel(person, pos_id, kgqa::RelationKind::PersonHasPosition);
            }
            d.emit(". ");
        }

        // locations, occasionally as a continuation chain, with 0..1 types
        int n_locs = static_cast<int>(rng() % 2);
        for (int li = 0; li < n_locs && budget > 0; ++li) {
            const std::string* loc_name = pick(kLocations, used_locations);
            if (!loc_name)
                break;
            d.emit("Its office is at ");
            std::string loc;
            auto comma = loc_name->find(", ");
            if (comma != std::string::npos && budget > 1 && chance(40)) {
                loc = d.mark(loc_name->substr(0, comma), kgqa::LabelKind::Location);
                d.emit("\n");
                std::string tail =
                    d.mark(loc_name->substr(comma + 2), kgqa::LabelKind::Location);
                budget -= 2;
                d.rel(loc, tail, kgqa::RelationKind::Continuation);
            } else {
                loc = d.mark(*loc_name, kgqa::LabelKind::Location);
                --budget;
            }
            d.rel(org, loc, kgqa::RelationKind::OrgHasLocation);
            if (budget > 0 && chance(50)) {
                d.emit(", its ");
                std::string type = d.mark(kTypes[rng() % kTypes.size()],
                                          kgqa::LabelKind::LocationType);
                --budget;
                d.rel(loc, type, kgqa::RelationKind::LocationHasType);
            }
            d.emit(". ");
        }
    }
    d.emit("END.\n");
    return d.result();
}

// ------------------------------------------------ independent QA oracle

// Surface-label relation maps over a merged annotation set; all lookups are
// plain string walks, no graph or query machinery.
struct AnnotationOracle {
    std::map<std::string, std::set<std::string>> person_positions;
    std::map<std::string, std::set<std::string>> org_roleclasses;
    std::map<std::string, std::set<std::string>> roleclass_orgs;
    std::map<std::string, std::set<std::string>> org_persons;
    std::map<std::string, std::set<std::string>> person_orgs;
    std::map<std::string, std::set<std::string>> org_locations;
    std::map<std::string, std::set<std::string>> location_orgs;
    std::map<std::string, std::set<std::string>> location_types;

    explicit AnnotationOracle(const kgqa::AnnotationSet& a) {
        auto span = [&](const std::string& id) { return a.find_span(id); };
        auto text = [&](const kgqa::EntitySpan* s) { return kgqa::collapse_whitespace(s->text); };
        // role span id -> its sub-role texts
        std::map<std::string, std::set<std::string>> subroles_of_role;
        for (const auto& r : a.relations)
            if (r.kind == kgqa::RelationKind::RoleHasSubRole)
                subroles_of_role[r.from_span].insert(text(span(r.to_span)));
        for (const auto& r : a.relations) {
            const auto* from = span(r.from_span);
            const auto* to = span(r.to_span);
            switch (r.kind) {
            case kgqa::RelationKind::OrgHasRole: {
                auto it = subroles_of_role.find(r.to_span);
                if (it != subroles_of_role.end() && !it->second.empty()) {
                    for (const auto& sub : it->second) {
                        org_roleclasses[text(from)].insert(sub);
                        roleclass_orgs[sub].insert(text(from));
                    }
                } else {
                    org_roleclasses[text(from)].insert(text(to));
                    roleclass_orgs[text(to)].insert(text(from));
                }
                break;
            }
            case kgqa::RelationKind::OrgHasPerson:
                org_persons[text(from)].insert(text(to));
                person_orgs[text(to)].insert(text(from));
                break;
            case kgqa::RelationKind::PersonHasPosition:
                person_positions[text(from)].insert(text(to));
                break;
            case kgqa::RelationKind::OrgHasLocation:
                org_locations[text(from)].insert(text(to));
                location_orgs[text(to)].insert(text(from));
                break;
            case kgqa::RelationKind::LocationHasType:
                location_types[text(from)].insert(text(to));
                break;
            default:
                break;
            }
        }
    }

    static std::set<std::string> lookup(const std::map<std::string, std::set<std::string>>& m,
                                        const std::string& key) {
        auto it = m.find(key);
        return it == m.end() ? std::set<std::string>{} : it->second;
    }
};

// Naive set algebra by explicit element loops.
inline std::set<std::string> naive_set_expr(const kgqa::SetExprSpec& expr,
                                            const std::vector<std::set<std::string>>& bases) {
    if (expr.empty())
        return bases.at(0);
    std::set<std::string> result;
    const auto& first = bases.at(static_cast<std::size_t>(expr.positive.at(0)));
    for (const auto& e : first) {
        bool in_all = true;
        for (int idx : expr.positive)
            if (!bases.at(static_cast<std::size_t>(idx)).count(e))
                in_all = false;
        bool excluded = false;
        for (int idx : expr.negative)
            if (bases.at(static_cast<std::size_t>(idx)).count(e))
                excluded = true;
        if (in_all && !excluded)
            result.insert(e);
    }
    return result;
}

// Recomputes a generated pair's answer set straight from the annotations.
inline std::set<std::string> oracle_answers(const kgqa::TemplateSpec& t, const kgqa::QAPair& qa,
                                            const AnnotationOracle& o) {
    using kgqa::Family;
    using kgqa::Selector;
    using kgqa::SetSite;

    std::vector<std::string> anchors;
    std::vector<std::string> positions;
    std::vector<std::string> roles;
    std::vector<std::string> combo;
    std::string org_slot, location_slot, employee_slot, type_slot;
    for (std::size_t i = 0; i < t.slots.size(); ++i) {
        const auto& role = t.slots[i].role;
        const auto& b = qa.bindings.at(i);
        if (role == "anchor")
            anchors.push_back(b.surface);
        else if (role == "position")
            positions.push_back(b.surface);
        else if (role == "role")
            roles.push_back(b.surface);
        else if (role == "role_combo")
            combo = b.labels;
        else if (role == "org")
            org_slot = b.surface;
        else if (role == "location" || role == "location_diff")
            location_slot = b.surface;
        else if (role == "employee")
            employee_slot = b.surface;
        else if (role == "location_type")
            type_slot = b.surface;
    }

    auto selected_orgs = [&]() -> std::set<std::string> {
        switch (t.selector) {
        case Selector::Org: return {org_slot};
        case Selector::Location:
        case Selector::LocationDiff: return AnnotationOracle::lookup(o.location_orgs, location_slot);
        case Selector::Employee: return AnnotationOracle::lookup(o.person_orgs, employee_slot);
        case Selector::RoleCombo: {
            std::set<std::string> out;
            for (const auto& [org, classes] : o.org_roleclasses) {
                bool all = true;
                for (const auto& c : combo)
                    if (!classes.count(c))
                        all = false;
                if (all && !combo.empty())
                    out.insert(org);
            }
            return out;
        }
        case Selector::RolePair: {
            std::vector<std::set<std::string>> bases;
            for (const auto& r : roles)
                bases.push_back(AnnotationOracle::lookup(o.roleclass_orgs, r));
            return naive_set_expr(t.set_expr, bases);
        }
        case Selector::None: break;
        }
        return {};
    };

    switch (t.family) {
    case Family::PositionsOfPerson: {
        std::vector<std::set<std::string>> bases;
        for (const auto& a : anchors)
            bases.push_back(AnnotationOracle::lookup(o.person_positions, a));
        return naive_set_expr(t.set_expr, bases);
    }
    case Family::OrgOfPerson:
        return AnnotationOracle::lookup(o.person_orgs, anchors.at(0));
    case Family::PersonsOfOrg:
        return AnnotationOracle::lookup(o.org_persons, anchors.at(0));
    case Family::RolesOfOrg: {
        std::vector<std::set<std::string>> bases;
        for (const auto& a : anchors)
            bases.push_back(AnnotationOracle::lookup(o.org_roleclasses, a));
        return naive_set_expr(t.set_expr, bases);
    }
    case Family::OrgsOfRole: {
        std::vector<std::set<std::string>> bases;
        for (const auto& a : anchors)
            bases.push_back(AnnotationOracle::lookup(o.roleclass_orgs, a));
        return naive_set_expr(t.set_expr, bases);
    }
    case Family::LocationsOfOrg:
        return AnnotationOracle::lookup(o.org_locations, anchors.at(0));
    case Family::OrgOfLocation:
        return AnnotationOracle::lookup(o.location_orgs, anchors.at(0));
    case Family::TypesOfLocation:
        return AnnotationOracle::lookup(o.location_types, anchors.at(0));
    case Family::RolesOfOrgOfPerson: {
        std::set<std::string> out;
        for (const auto& org : AnnotationOracle::lookup(o.person_orgs, anchors.at(0)))
            for (const auto& r : AnnotationOracle::lookup(o.org_roleclasses, org))
                out.insert(r);
        return out;
    }
    case Family::RolesOfOrgOfLocation: {
        std::set<std::string> out;
        for (const auto& org : AnnotationOracle::lookup(o.location_orgs, anchors.at(0)))
            for (const auto& r : AnnotationOracle::lookup(o.org_roleclasses, org))
                out.insert(r);
        return out;
    }
    case Family::PersonsByCompany: {
        std::set<std::string> members;
        for (const auto& org : selected_orgs())
            for (const auto& p : AnnotationOracle::lookup(o.org_persons, org))
                members.insert(p);
        std::vector<std::set<std::string>> bases;
        for (const auto& pos : positions) {
            std::set<std::string> base;
            for (const auto& m : members)
                if (AnnotationOracle::lookup(o.person_positions, m).count(pos))
                    base.insert(m);
            bases.push_back(std::move(base));
        }
        if (t.set_site == SetSite::Positions)
            return naive_set_expr(t.set_expr, bases);
        return bases.at(0);
    }
    case Family::LocationByCompany: {
        std::set<std::string> out;
        for (const auto& org : selected_orgs())
            for (const auto& loc : AnnotationOracle::lookup(o.org_locations, org))
                if (AnnotationOracle::lookup(o.location_types, loc).count(type_slot))
                    out.insert(loc);
        if (t.selector == Selector::LocationDiff)
            out.erase(location_slot);
        return out;
    }
    }
    return {};
}

// ------------------------------------------------ random graphs & queries

inline kgqa::KnowledgeGraph random_graph(std::mt19937& rng, int max_triples = 30) {
    kgqa::NamespaceConfig ns;
    static const std::vector<std::string> kSubjects = {"alpha", "beta", "gamma", "delta",
                                                       "x%2Ey", "node_1"};
    static const std::vector<std::string> kPredicates = {"knows", "near", "part_of"};
    static const std::vector<std::string> kLiterals = {
        "plain", "with \"quote\"", "tab\tsep", "line\nbreak", "back\\slash"};
    kgqa::KnowledgeGraph g(ns);
    int n = 1 + static_cast<int>(rng() % static_cast<unsigned>(max_triples));
    for (int i = 0; i < n; ++i) {
        kgqa::Iri s{ns.organization, kSubjects[rng() % kSubjects.size()]};
        kgqa::Iri p{"http://example.org/pred/" + kPredicates[rng() % kPredicates.size()], ""};
        kgqa::Term o;
        if (rng() % 3 == 0)
            o = kgqa::Literal{kLiterals[rng() % kLiterals.size()]};
        else
            o = kgqa::Iri{ns.person, kSubjects[rng() % kSubjects.size()]};
        g.add({s, p, o});
    }
    g.finalize();
    return g;
}

// Exhaustive-enumeration query oracle: per-pattern full scans with explicit
// unification, then the same filter/group semantics re-derived by hand.
inline std::vector<std::map<std::string, kgqa::Term>>
oracle_join(const kgqa::Query& q, const kgqa::KnowledgeGraph& g) {
    using Row = std::map<std::string, kgqa::Term>;
    std::vector<Row> rows{Row{}};
    for (const auto& pat : q.patterns) {
        std::vector<Row> next;
        for (const auto& row : rows) {
            for (const auto& triple : g.triples()) { // full scan, no indexes
                Row candidate = row;
                bool ok = true;
                auto unify = [&](const kgqa::PatternSlot& slot, const kgqa::Term& value) {
                    if (!ok)
                        return;
                    if (slot.is_var) {
                        auto it = candidate.find(slot.var);
                        if (it == candidate.end())
                            candidate.emplace(slot.var, value);
                        else if (!kgqa::term_equal(it->second, value))
                            ok = false;
                    } else if (!kgqa::term_equal(slot.term, value)) {
                        ok = false;
                    }
                };
                unify(pat.subject, kgqa::Term{triple.subject});
                unify(pat.predicate, kgqa::Term{triple.predicate});
                unify(pat.object, triple.object);
                if (ok)
                    next.push_back(std::move(candidate));
            }
        }
        rows = std::move(next);
    }
    std::vector<Row> kept;
    for (const auto& row : rows) {
        bool pass = true;
        for (const auto& f : q.filters) {
            auto it = row.find(f.var);
            if (it == row.end()) {
                pass = false;
                break;
            }
            std::string s = std::holds_alternative<kgqa::Iri>(it->second)
                                ? std::get<kgqa::Iri>(it->second).full()
                                : std::get<kgqa::Literal>(it->second).value;
            if (s.substr(0, f.prefix.size()) != f.prefix)
                pass = false;
        }
        if (pass)
            kept.push_back(row);
    }
    return kept;
}

// Renders a solution table as sorted display rows for comparison.
inline std::vector<std::vector<std::string>> table_rows(const kgqa::SolutionTable& t) {
    std::vector<std::vector<std::string>> out;
    for (const auto& row : t.rows) {
        std::vector<std::string> cells;
        for (const auto& c : row)
            cells.push_back(c.display());
        out.push_back(std::move(cells));
    }
    return out;
}

inline std::vector<std::vector<std::string>>
oracle_evaluate_rows(const kgqa::Query& q, const kgqa::KnowledgeGraph& g) {
    auto rows = oracle_join(q, g);
    auto display = [](const kgqa::Term& t) {
        return std::holds_alternative<kgqa::Iri>(t) ? std::get<kgqa::Iri>(t).full()
                                                    : std::get<kgqa::Literal>(t).value;
    };
    std::vector<std::vector<std::string>> out;
    if (!q.group_by.empty()) {
        std::map<std::vector<std::string>, std::vector<std::map<std::string, kgqa::Term>>> groups;
        for (const auto& row : rows) {
            std::vector<std::string> key;
            for (const auto& v : q.group_by)
                key.push_back(kgqa::term_key(row.at(v)));
            groups[key].push_back(row);
        }
        for (const auto& [key, members] : groups) {
            std::vector<std::string> cells;
            for (const auto& proj : q.projection) {
                if (proj.is_aggregate) {
                    std::vector<std::string> parts;
                    for (const auto& m : members) {
                        const auto& term = m.at(proj.aggregate.var);
                        parts.push_back(std::holds_alternative<kgqa::Iri>(term)
                                            ? kgqa::iri_display_name(
                                                  std::get<kgqa::Iri>(term).full())
                                            : std::get<kgqa::Literal>(term).value);
                    }
                    std::sort(parts.begin(), parts.end());
                    std::string joined;
                    for (std::size_t i = 0; i < parts.size(); ++i)
                        joined += (i ? proj.aggregate.separator : "") + parts[i];
                    cells.push_back(joined);
                } else {
                    cells.push_back(display(members.front().at(proj.var)));
                }
            }
            out.push_back(std::move(cells));
        }
    } else {
        for (const auto& row : rows) {
            std::vector<std::string> cells;
            for (const auto& proj : q.projection)
                cells.push_back(display(row.at(proj.var)));
            out.push_back(std::move(cells));
        }
    }
    std::sort(out.begin(), out.end());
    if (q.distinct)
        out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Rows from the library result, re-sorted with the oracle's plain ordering
// so the comparison does not depend on either side's sort key.
inline std::vector<std::vector<std::string>> normalized_rows(const kgqa::SolutionTable& t) {
    auto rows = table_rows(t);
    std::sort(rows.begin(), rows.end());
    return rows;
}

// Random query over terms that occur in the graph (so joins are non-vacuous).
inline kgqa::Query random_query(std::mt19937& rng, const kgqa::KnowledgeGraph& g) {
    static const std::vector<std::string> kVars = {"a", "b", "c", "d"};
    const auto& triples = g.triples();
    auto random_slot = [&](int position) -> kgqa::PatternSlot {
        unsigned r = rng() % 10;
        if (r < 5)
            return kgqa::PatternSlot::variable(kVars[rng() % kVars.size()]);
        const auto& t = triples[rng() % triples.size()];
        if (position == 0)
            return kgqa::PatternSlot::ground(kgqa::Term{t.subject});
        if (position == 1)
            return kgqa::PatternSlot::ground(kgqa::Term{t.predicate});
        return kgqa::PatternSlot::ground(t.object);
    };

    kgqa::Query q;
    int n_patterns = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < n_patterns; ++i)
        q.patterns.push_back({random_slot(0), random_slot(1), random_slot(2)});

    std::set<std::string> vars;
    for (const auto& p : q.patterns)
        for (const auto* slot : {&p.subject, &p.predicate, &p.object})
            if (slot->is_var)
                vars.insert(slot->var);
    if (vars.empty()) {
        q.patterns[0].subject = kgqa::PatternSlot::variable("a");
        vars.insert("a");
    }
    std::vector<std::string> var_list(vars.begin(), vars.end());

    q.distinct = rng() % 2 == 0;
    if (rng() % 3 == 0) {
        static const std::vector<std::string> kPrefixes = {
            "http://example.org/organization/", "http://example.org/person/", "http://", "zzz"};
        q.filters.push_back({var_list[rng() % var_list.size()],
                             kPrefixes[rng() % kPrefixes.size()]});
    }
    if (rng() % 3 == 0 && !var_list.empty()) {
        // grouped query: group by one var, aggregate another (may coincide)
        std::string group_var = var_list[rng() % var_list.size()];
        std::string agg_var = var_list[rng() % var_list.size()];
        q.group_by.push_back(group_var);
        q.projection.push_back({false, group_var, {}});
        kgqa::AggregateExpr agg;
        agg.var = agg_var;
        agg.separator = "|";
        agg.alias = "agg";
        q.projection.push_back({true, "", agg});
        q.distinct = false;
    } else {
        int n_proj = 1 + static_cast<int>(rng() % var_list.size());
        for (int i = 0; i < n_proj; ++i)
            q.projection.push_back({false, var_list[static_cast<std::size_t>(i)], {}});
    }
    return q;
}

// ------------------------------------------------ scalar oracles

inline int naive_levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::vector<int>> d(a.size() + 1, std::vector<int>(b.size() + 1, 0));
    for (std::size_t i = 0; i <= a.size(); ++i)
        d[i][0] = static_cast<int>(i);
    for (std::size_t j = 0; j <= b.size(); ++j)
        d[0][j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= a.size(); ++i)
        for (std::size_t j = 1; j <= b.size(); ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                                d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    return d[a.size()][b.size()];
}

// Textbook Pearson via explicit sums.
inline double naive_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
    }
    double cov = sxy - sx * sy / n;
    double vx = sxx - sx * sx / n;
    double vy = syy - sy * sy / n;
    return cov / std::sqrt(vx * vy);
}

// Tau-b straight from the textbook formula with n1/n2 tie sums.
inline double naive_kendall_b(const std::vector<double>& x, const std::vector<double>& y) {
    long long c = 0, d = 0;
    long long n = static_cast<long long>(x.size());
    long long n0 = n * (n - 1) / 2;
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            double prod = (x[i] - x[j]) * (y[i] - y[j]);
            if (prod > 0)
                ++c;
            else if (prod < 0)
                ++d;
        }
    }
    auto tie_sum = [](const std::vector<double>& v) {
        std::map<double, long long> counts;
        for (double e : v)
            ++counts[e];
        long long s = 0;
        for (const auto& [val, k] : counts)
            s += k * (k - 1) / 2;
        return s;
    };
    long long n1 = tie_sum(x), n2 = tie_sum(y);
    double denom = std::sqrt(static_cast<double>(n0 - n1)) *
                   std::sqrt(static_cast<double>(n0 - n2));
    return (static_cast<double>(c) - static_cast<double>(d)) / denom;
}

// ------------------------------------------------ exhaustive count oracle

namespace detail {

inline std::string ci_key(const std::string& s) {
    std::string k;
    for (unsigned char c : s)
        k.push_back(static_cast<char>(std::tolower(c)));
    return k + "\x1f" + s;
}

inline std::vector<std::string> sorted_keys(const std::map<std::string, std::set<std::string>>& m) {
    std::vector<std::string> out;
    for (const auto& [k, v] : m)
        if (!v.empty())
            out.push_back(k);
    std::sort(out.begin(), out.end(),
              [](const std::string& a, const std::string& b) { return ci_key(a) < ci_key(b); });
    return out;
}

inline std::vector<std::vector<std::string>> tuples_for(const std::vector<std::string>& cands,
                                                        const kgqa::SetExprSpec& expr) {
    std::size_t np = expr.empty() ? 1 : expr.positive.size();
    std::size_t nn = expr.empty() ? 0 : expr.negative.size();
    std::vector<std::vector<std::string>> out;
    std::size_t n = cands.size();
    if (n < np + nn)
        return out;
    std::vector<std::size_t> pos(np), neg(nn);
    std::function<void(std::size_t, std::size_t)> pick_neg = [&](std::size_t start,
                                                                 std::size_t depth) {
        if (depth == nn) {
            std::vector<std::string> tuple;
            for (auto i : pos)
                tuple.push_back(cands[i]);
            for (auto i : neg)
                tuple.push_back(cands[i]);
            out.push_back(std::move(tuple));
            return;
        }
        for (std::size_t i = start; i < n; ++i) {
            bool used = false;
            for (auto p : pos)
                if (p == i)
                    used = true;
            if (!used) {
                neg[depth] = i;
                pick_neg(i + 1, depth + 1);
            }
        }
    };
    std::function<void(std::size_t, std::size_t)> pick_pos = [&](std::size_t start,
                                                                 std::size_t depth) {
        if (depth == np) {
            pick_neg(0, 0);
            return;
        }
        for (std::size_t i = start; i < n; ++i) {
            pos[depth] = i;
            pick_pos(i + 1, depth + 1);
        }
    };
    pick_pos(0, 0);
    return out;
}

} // namespace detail

// Counts the applicable instantiations of a template by walking the oracle
// maps directly; used to pin the checked-in golden pair count.
inline long oracle_pair_count(const kgqa::TemplateSpec& t, const AnnotationOracle& o) {
    using kgqa::Family;
    using kgqa::Selector;
    using kgqa::SetSite;
    using detail::sorted_keys;
    using detail::tuples_for;

    auto passes = [&](const std::set<std::string>& answers) {
        if (answers.empty())
            return false;
        return t.plurality == 0 ? answers.size() == 1 : answers.size() >= 2;
    };

    // simple anchored families
    auto count_anchored = [&](const std::map<std::string, std::set<std::string>>& base_map,
                              auto answer_of) {
        long count = 0;
        std::set<std::vector<std::string>> seen;
        for (const auto& tuple : tuples_for(sorted_keys(base_map), t.set_expr)) {
            auto answers = answer_of(tuple);
            if (passes(answers) && seen.insert(tuple).second)
                ++count;
        }
        return count;
    };

    switch (t.family) {
    case Family::PositionsOfPerson:
        return count_anchored(o.person_positions, [&](const std::vector<std::string>& tuple) {
            std::vector<std::set<std::string>> bases;
            for (const auto& a : tuple)
                bases.push_back(AnnotationOracle::lookup(o.person_positions, a));
            return naive_set_expr(t.set_expr, bases);
        });
    case Family::OrgOfPerson:
        return count_anchored(o.person_orgs, [&](const std::vector<std::string>& tuple) {
            return AnnotationOracle::lookup(o.person_orgs, tuple[0]);
        });
    case Family::PersonsOfOrg:
        return count_anchored(o.org_persons, [&](const std::vector<std::string>& tuple) {
            return AnnotationOracle::lookup(o.org_persons, tuple[0]);
        });
    case Family::RolesOfOrg:
        return count_anchored(o.org_roleclasses, [&](const std::vector<std::string>& tuple) {
            std::vector<std::set<std::string>> bases;
            for (const auto& a : tuple)
                bases.push_back(AnnotationOracle::lookup(o.org_roleclasses, a));
            return naive_set_expr(t.set_expr, bases);
        });
    case Family::OrgsOfRole:
        return count_anchored(o.roleclass_orgs, [&](const std::vector<std::string>& tuple) {
            std::vector<std::set<std::string>> bases;
            for (const auto& a : tuple)
                bases.push_back(AnnotationOracle::lookup(o.roleclass_orgs, a));
            return naive_set_expr(t.set_expr, bases);
        });
    case Family::LocationsOfOrg:
        return count_anchored(o.org_locations, [&](const std::vector<std::string>& tuple) {
            return AnnotationOracle::lookup(o.org_locations, tuple[0]);
        });
    case Family::OrgOfLocation:
        return count_anchored(o.location_orgs, [&](const std::vector<std::string>& tuple) {
            return AnnotationOracle::lookup(o.location_orgs, tuple[0]);
        });
    case Family::TypesOfLocation:
        return count_anchored(o.location_types, [&](const std::vector<std::string>& tuple) {
            return AnnotationOracle::lookup(o.location_types, tuple[0]);
        });
    case Family::RolesOfOrgOfPerson: {
        std::map<std::string, std::set<std::string>> eligible;
        for (const auto& [p, orgs] : o.person_orgs) {
            std::set<std::string> roles;
            for (const auto& org : orgs)
                for (const auto& r : AnnotationOracle::lookup(o.org_roleclasses, org))
                    roles.insert(r);
            if (!roles.empty())
                eligible[p] = roles;
        }
        return count_anchored(eligible, [&](const std::vector<std::string>& tuple) {
            return eligible.at(tuple[0]);
        });
    }
    case Family::RolesOfOrgOfLocation: {
        std::map<std::string, std::set<std::string>> eligible;
        for (const auto& [loc, orgs] : o.location_orgs) {
            std::set<std::string> roles;
            for (const auto& org : orgs)
                for (const auto& r : AnnotationOracle::lookup(o.org_roleclasses, org))
                    roles.insert(r);
            if (!roles.empty())
                eligible[loc] = roles;
        }
        return count_anchored(eligible, [&](const std::vector<std::string>& tuple) {
            return eligible.at(tuple[0]);
        });
    }
    case Family::PersonsByCompany:
    case Family::LocationByCompany:
        break; // handled below
    }

    // selector families
    struct SelBinding {
        std::vector<std::string> surface_key;
        std::set<std::string> orgs;
    };
    std::vector<SelBinding> selections;
    switch (t.selector) {
    case Selector::Org: {
        const auto& m = t.family == Family::PersonsByCompany ? o.org_persons : o.org_locations;
        for (const auto& org : sorted_keys(m))
            selections.push_back({{org}, {org}});
        break;
    }
    case Selector::Location:
    case Selector::LocationDiff:
        for (const auto& loc : sorted_keys(o.location_orgs))
            selections.push_back({{loc}, AnnotationOracle::lookup(o.location_orgs, loc)});
        break;
    case Selector::Employee:
        for (const auto& p : sorted_keys(o.person_orgs))
            selections.push_back({{p}, AnnotationOracle::lookup(o.person_orgs, p)});
        break;
    case Selector::RoleCombo: {
        std::set<std::string> seen_combos;
        for (const auto& [org, classes] : o.org_roleclasses) {
            if (classes.empty())
                continue;
            std::vector<std::string> combo(classes.begin(), classes.end());
            std::sort(combo.begin(), combo.end(), [](const std::string& a, const std::string& b) {
                return detail::ci_key(a) < detail::ci_key(b);
            });
            std::string render;
            for (std::size_t i = 0; i < combo.size(); ++i)
                render += (i ? " and " : "") + combo[i];
            if (!seen_combos.insert(render).second)
                continue;
            std::set<std::string> holders;
            for (const auto& [other, other_classes] : o.org_roleclasses) {
                bool all = true;
                for (const auto& c : combo)
                    if (!other_classes.count(c))
                        all = false;
                if (all)
                    holders.insert(other);
            }
            selections.push_back({{render}, holders});
        }
        std::sort(selections.begin(), selections.end(),
                  [](const SelBinding& a, const SelBinding& b) {
                      return a.surface_key < b.surface_key;
                  });
        break;
    }
    case Selector::RolePair:
        for (const auto& tuple : tuples_for(sorted_keys(o.roleclass_orgs), t.set_expr)) {
            std::vector<std::set<std::string>> bases;
            for (const auto& r : tuple)
                bases.push_back(AnnotationOracle::lookup(o.roleclass_orgs, r));
            selections.push_back({tuple, naive_set_expr(t.set_expr, bases)});
        }
        break;
    case Selector::None:
        break;
    }

    long count = 0;
    std::set<std::vector<std::string>> seen;
    for (const auto& sel : selections) {
        if (t.unique_company && sel.orgs.size() != 1)
            continue;
        if (t.family == Family::PersonsByCompany) {
            std::set<std::string> members;
            for (const auto& org : sel.orgs)
                for (const auto& p : AnnotationOracle::lookup(o.org_persons, org))
                    members.insert(p);
            std::map<std::string, std::set<std::string>> avail; // position -> holders
            for (const auto& m : members)
                for (const auto& pos : AnnotationOracle::lookup(o.person_positions, m))
                    avail[pos].insert(m);
            const kgqa::SetExprSpec pos_expr =
                t.set_site == SetSite::Positions ? t.set_expr : kgqa::SetExprSpec{};
            for (const auto& tuple : detail::tuples_for(sorted_keys(avail), pos_expr)) {
                std::vector<std::set<std::string>> bases;
                for (const auto& pos : tuple)
                    bases.push_back(avail.at(pos));
                auto answers = naive_set_expr(pos_expr, bases);
                if (answers.empty())
                    continue;
                if (t.plurality == 0 && answers.size() != 1)
                    continue;
                if (t.plurality == 1 && answers.size() < 2)
                    continue;
                std::vector<std::string> key = sel.surface_key;
                key.insert(key.end(), tuple.begin(), tuple.end());
                if (seen.insert(key).second)
                    ++count;
            }
        } else { // LocationByCompany
            std::set<std::string> types;
            for (const auto& org : sel.orgs)
                for (const auto& loc : AnnotationOracle::lookup(o.org_locations, org))
                    for (const auto& ty : AnnotationOracle::lookup(o.location_types, loc))
                        types.insert(ty);
            for (const auto& ty : types) {
                std::set<std::string> answers;
                for (const auto& org : sel.orgs)
                    for (const auto& loc : AnnotationOracle::lookup(o.org_locations, org))
                        if (AnnotationOracle::lookup(o.location_types, loc).count(ty))
                            answers.insert(loc);
                if (t.selector == Selector::LocationDiff)
                    answers.erase(sel.surface_key.front());
                if (answers.empty())
                    continue;
                if (t.plurality == 0 && answers.size() != 1)
                    continue;
                if (t.plurality == 1 && answers.size() < 2)
                    continue;
                std::vector<std::string> key = sel.surface_key;
                key.push_back(ty);
                if (seen.insert(key).second)
                    ++count;
            }
        }
    }
    return count;
}

} // namespace testsupport
