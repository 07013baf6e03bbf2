#include "kgqa/qagen.hpp"

#include "kgqa/errors.hpp"
#include "kgqa/query.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace kgqa {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string bucket_for_level(int level) {
    if (level <= 1)
        return "Easy";
    if (level <= 4)
        return "Medium";
    return "Hard";
}

namespace {

std::string lc(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Sorted-unique vectors of IRIs keyed by full string.
using IriSet = std::vector<Iri>;

void sort_unique(IriSet& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

IriSet intersect(const IriSet& a, const IriSet& b) {
    IriSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

IriSet subtract(const IriSet& a, const IriSet& b) {
    IriSet out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

IriSet unite(const IriSet& a, const IriSet& b) {
    IriSet out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

IriSet apply_set_expr(const SetExprSpec& expr, const std::vector<IriSet>& bases) {
    if (expr.empty())
        return bases.at(0);
    IriSet result = bases.at(static_cast<std::size_t>(expr.positive.at(0)));
    for (std::size_t i = 1; i < expr.positive.size(); ++i)
        result = intersect(result, bases.at(static_cast<std::size_t>(expr.positive[i])));
    IriSet negatives;
    for (int idx : expr.negative)
        negatives = unite(negatives, bases.at(static_cast<std::size_t>(idx)));
    return subtract(result, negatives);
}

// Hop-traversal helpers over the pattern indexes.
struct GraphView {
    const KnowledgeGraph& g;
    const NamespaceConfig& ns;

    explicit GraphView(const KnowledgeGraph& graph) : g(graph), ns(graph.ns()) {}

    static Iri pred_iri(const std::string& p) { return Iri{p, ""}; }

    IriSet objects_of(const Iri& subject, const std::string& pred,
                      const std::vector<const std::string*>& ns_filter = {}) const {
        IriSet out;
        for (const auto& t : g.match(Term{subject}, Term{pred_iri(pred)}, std::nullopt)) {
            if (!std::holds_alternative<Iri>(t.object))
                continue;
            const auto& iri = std::get<Iri>(t.object);
            if (!ns_filter.empty()) {
                bool ok = false;
                for (const auto* f : ns_filter)
                    if (iri.full().rfind(*f, 0) == 0)
                        ok = true;
                if (!ok)
                    continue;
            }
            out.push_back(iri);
        }
        sort_unique(out);
        return out;
    }

    IriSet subjects_of(const std::string& pred, const Iri& object) const {
        IriSet out;
        for (const auto& t : g.match(std::nullopt, Term{pred_iri(pred)}, Term{object}))
            out.push_back(t.subject);
        sort_unique(out);
        return out;
    }

    IriSet positions_of(const Iri& person) const {
        return objects_of(person, ns.instance_of_pred, {&ns.person_position});
    }
    IriSet role_classes_of(const Iri& org) const {
        return objects_of(org, ns.instance_of_pred, {&ns.org_role, &ns.org_sub_role});
    }
    IriSet types_of(const Iri& loc) const {
        return objects_of(loc, ns.instance_of_pred, {&ns.location_type});
    }
    IriSet employees_of(const Iri& org) const {
        return objects_of(org, ns.has_employee_pred);
    }
    IriSet employers_of(const Iri& person) const {
        return subjects_of(ns.has_employee_pred, person);
    }
    IriSet locations_of(const Iri& org) const {
        return subjects_of(ns.is_location_of_pred, org);
    }
    IriSet orgs_at(const Iri& loc) const {
        return objects_of(loc, ns.is_location_of_pred);
    }
    IriSet instances_of(const Iri& cls) const {
        return subjects_of(ns.instance_of_pred, cls);
    }

    std::string label(const Iri& node) const {
        if (auto l = g.label_of(node))
            return *l;
        return iri_display_name(node.full());
    }
};

// --- candidate harvesting through the query engine ---

PatternSlot var(const char* name) { return PatternSlot::variable(name); }
PatternSlot ground(const Iri& iri) { return PatternSlot::ground(Term{iri}); }

Query make_query(std::vector<std::string> projection, std::vector<TriplePattern> patterns,
                 std::vector<FilterExpr> filters) {
    Query q;
    q.distinct = true;
    for (auto& v : projection)
        q.projection.push_back({false, std::move(v), {}});
    q.patterns = std::move(patterns);
    q.filters = std::move(filters);
    return q;
}

IriSet run_single(const KnowledgeGraph& g, const Query& q) {
    IriSet out;
    for (const auto& row : evaluate(q, g).rows)
        out.push_back(std::get<Iri>(row.at(0).term));
    sort_unique(out);
    return out;
}

std::vector<std::pair<Iri, Iri>> run_pairs(const KnowledgeGraph& g, const Query& q) {
    std::vector<std::pair<Iri, Iri>> out;
    for (const auto& row : evaluate(q, g).rows)
        out.emplace_back(std::get<Iri>(row.at(0).term), std::get<Iri>(row.at(1).term));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (!(a.first == b.first))
            return a.first < b.first;
        return a.second < b.second;
    });
    out.erase(std::unique(out.begin(), out.end(),
                          [](const auto& a, const auto& b) {
                              return a.first == b.first && a.second == b.second;
                          }),
              out.end());
    return out;
}

struct Candidates {
    const KnowledgeGraph& g;
    const NamespaceConfig& ns;

    explicit Candidates(const KnowledgeGraph& graph) : g(graph), ns(graph.ns()) {}

    Iri type_pred() const { return Iri{ns.type_pred, ""}; }
    Iri instance_of() const { return Iri{ns.instance_of_pred, ""}; }
    Iri has_employee() const { return Iri{ns.has_employee_pred, ""}; }
    Iri is_location_of() const { return Iri{ns.is_location_of_pred, ""}; }

    IriSet persons_with_positions() const {
        auto q = make_query({"p"},
                            {{var("p"), ground(type_pred()), ground(ns.cls_person())},
                             {var("p"), ground(instance_of()), var("c")}},
                            {{"c", ns.person_position}});
        return run_single(g, q);
    }
    IriSet persons_with_employer() const {
        auto q = make_query({"p"}, {{var("o"), ground(has_employee()), var("p")}}, {});
        return run_single(g, q);
    }
    IriSet orgs_with_employees() const {
        auto q = make_query({"o"}, {{var("o"), ground(has_employee()), var("p")}}, {});
        return run_single(g, q);
    }
    IriSet orgs_with_roles() const {
        IriSet out;
        for (const auto* f : {&ns.org_role, &ns.org_sub_role}) {
            auto q = make_query({"o"},
                                {{var("o"), ground(type_pred()), ground(ns.cls_organization())},
                                 {var("o"), ground(instance_of()), var("c")}},
                                {{"c", *f}});
            out = unite(out, run_single(g, q));
        }
        return out;
    }
    IriSet role_classes_in_use() const {
        IriSet out;
        for (const auto* f : {&ns.org_role, &ns.org_sub_role}) {
            auto q = make_query({"c"}, {{var("o"), ground(instance_of()), var("c")}},
                                {{"c", *f}});
            out = unite(out, run_single(g, q));
        }
        return out;
    }
    IriSet orgs_with_locations() const {
        auto q = make_query({"o"}, {{var("l"), ground(is_location_of()), var("o")}}, {});
        return run_single(g, q);
    }
    IriSet locations_with_org() const {
        auto q = make_query({"l"}, {{var("l"), ground(is_location_of()), var("o")}}, {});
        return run_single(g, q);
    }
    IriSet locations_with_types() const {
        auto q = make_query({"l"}, {{var("l"), ground(instance_of()), var("t")}},
                            {{"t", ns.location_type}});
        return run_single(g, q);
    }
    IriSet persons_whose_org_has_roles() const {
        IriSet out;
        for (const auto* f : {&ns.org_role, &ns.org_sub_role}) {
            auto q = make_query({"p"},
                                {{var("o"), ground(has_employee()), var("p")},
                                 {var("o"), ground(instance_of()), var("c")}},
                                {{"c", *f}});
            out = unite(out, run_single(g, q));
        }
        return out;
    }
    IriSet locations_whose_org_has_roles() const {
        IriSet out;
        for (const auto* f : {&ns.org_role, &ns.org_sub_role}) {
            auto q = make_query({"l"},
                                {{var("l"), ground(is_location_of()), var("o")},
                                 {var("o"), ground(instance_of()), var("c")}},
                                {{"c", *f}});
            out = unite(out, run_single(g, q));
        }
        return out;
    }
    // (org, position) pairs reachable via hasEmployee + isInstanceOf.
    std::vector<std::pair<Iri, Iri>> org_position_pairs() const {
        auto q = make_query({"o", "c"},
                            {{var("o"), ground(has_employee()), var("p")},
                             {var("p"), ground(instance_of()), var("c")}},
                            {{"c", ns.person_position}});
        return run_pairs(g, q);
    }
    std::vector<std::pair<Iri, Iri>> location_position_pairs() const {
        auto q = make_query({"l", "c"},
                            {{var("l"), ground(is_location_of()), var("o")},
                             {var("o"), ground(has_employee()), var("p")},
                             {var("p"), ground(instance_of()), var("c")}},
                            {{"c", ns.person_position}});
        return run_pairs(g, q);
    }
    std::vector<std::pair<Iri, Iri>> anchor_person_position_pairs() const {
        auto q = make_query({"a", "c"},
                            {{var("o"), ground(has_employee()), var("a")},
                             {var("o"), ground(has_employee()), var("p")},
                             {var("p"), ground(instance_of()), var("c")}},
                            {{"c", ns.person_position}});
        return run_pairs(g, q);
    }
    std::vector<std::pair<Iri, Iri>> org_type_pairs() const {
        auto q = make_query({"o", "t"},
                            {{var("l"), ground(is_location_of()), var("o")},
                             {var("l"), ground(instance_of()), var("t")}},
                            {{"t", ns.location_type}});
        return run_pairs(g, q);
    }
    std::vector<std::pair<Iri, Iri>> anchor_location_type_pairs() const {
        auto q = make_query({"a", "t"},
                            {{var("a"), ground(is_location_of()), var("o")},
                             {var("l"), ground(is_location_of()), var("o")},
                             {var("l"), ground(instance_of()), var("t")}},
                            {{"t", ns.location_type}});
        return run_pairs(g, q);
    }
    std::vector<std::pair<Iri, Iri>> person_location_type_pairs() const {
        auto q = make_query({"p", "t"},
                            {{var("o"), ground(has_employee()), var("p")},
                             {var("l"), ground(is_location_of()), var("o")},
                             {var("l"), ground(instance_of()), var("t")}},
                            {{"t", ns.location_type}});
        return run_pairs(g, q);
    }
};

// Candidates ordered by (lowercased label, label, iri) so question output is
// stable and human-sensible.
std::vector<Iri> label_sorted(const GraphView& view, IriSet items) {
    std::sort(items.begin(), items.end(), [&](const Iri& a, const Iri& b) {
        auto la = view.label(a), lb = view.label(b);
        auto ka = lc(la), kb = lc(lb);
        if (ka != kb)
            return ka < kb;
        if (la != lb)
            return la < lb;
        return a < b;
    });
    return items;
}

BoundSlot make_slot(const GraphView& view, const std::string& slot_name,
                    const std::string& kind, const Iri& node) {
    BoundSlot b;
    b.slot = slot_name;
    b.kind = kind;
    b.nodes = {node};
    b.labels = {view.label(node)};
    b.surface = b.labels.front();
    return b;
}

BoundSlot make_combo_slot(const GraphView& view, const std::string& slot_name,
                          const std::vector<Iri>& combo_sorted) {
    BoundSlot b;
    b.slot = slot_name;
    b.kind = "role_combo";
    b.nodes = combo_sorted;
    std::string joined;
    for (std::size_t i = 0; i < combo_sorted.size(); ++i) {
        b.labels.push_back(view.label(combo_sorted[i]));
        joined += (i ? " and " : "") + b.labels.back();
    }
    b.surface = joined;
    return b;
}

std::string anchor_kind_token(Family f) {
    switch (f) {
    case Family::PositionsOfPerson:
    case Family::OrgOfPerson:
    case Family::RolesOfOrgOfPerson: return "person";
    case Family::PersonsOfOrg:
    case Family::RolesOfOrg:
    case Family::LocationsOfOrg: return "org";
    case Family::OrgsOfRole: return "role";
    case Family::OrgOfLocation:
    case Family::TypesOfLocation:
    case Family::RolesOfOrgOfLocation: return "location";
    default: return "?";
    }
}

std::string answer_kind_token(Family f) {
    switch (f) {
    case Family::PositionsOfPerson: return "position";
    case Family::OrgOfPerson:
    case Family::OrgsOfRole:
    case Family::OrgOfLocation: return "org";
    case Family::PersonsOfOrg:
    case Family::PersonsByCompany: return "person";
    case Family::RolesOfOrg:
    case Family::RolesOfOrgOfPerson:
    case Family::RolesOfOrgOfLocation: return "role";
    case Family::LocationsOfOrg:
    case Family::LocationByCompany: return "location";
    case Family::TypesOfLocation: return "location_type";
    }
    return "?";
}

// Anchor tuples honoring the set expression: positives are an unordered
// combination, negatives an unordered combination of the rest; singletons
// when there is no set expression.
std::vector<std::vector<Iri>> anchor_tuples(const std::vector<Iri>& cands,
                                            const SetExprSpec& expr) {
    std::vector<std::vector<Iri>> out;
    const std::size_t np = expr.empty() ? 1 : expr.positive.size();
    const std::size_t nn = expr.empty() ? 0 : expr.negative.size();
    const std::size_t n = cands.size();
    if (n < np + nn)
        return out;

    std::vector<std::size_t> pos_idx(np), neg_idx(nn);
    // Iterative combination generation over candidate indices.
    std::function<void(std::size_t, std::size_t)> choose_neg =
        [&](std::size_t start, std::size_t depth) {
            if (depth == nn) {
                std::vector<Iri> tuple;
                for (auto i : pos_idx)
                    tuple.push_back(cands[i]);
                for (auto i : neg_idx)
                    tuple.push_back(cands[i]);
                out.push_back(std::move(tuple));
                return;
            }
            for (std::size_t i = start; i < n; ++i) {
                bool used = false;
                for (auto p : pos_idx)
                    if (p == i)
                        used = true;
                if (used)
                    continue;
                neg_idx[depth] = i;
                choose_neg(i + 1, depth + 1);
            }
        };
    std::function<void(std::size_t, std::size_t)> choose_pos =
        [&](std::size_t start, std::size_t depth) {
            if (depth == np) {
                choose_neg(0, 0);
                return;
            }
            for (std::size_t i = start; i < n; ++i) {
                pos_idx[depth] = i;
                choose_pos(i + 1, depth + 1);
            }
        };
    choose_pos(0, 0);
    return out;
}

// --- company selector resolution (families PersonsByCompany / LocationByCompany) ---

struct SelectorBinding {
    std::vector<BoundSlot> slots; // selector slots in template order
    IriSet orgs;                  // selected companies
};

IriSet orgs_holding_all(const GraphView& view, const std::vector<Iri>& combo) {
    IriSet result;
    bool first = true;
    for (const auto& cls : combo) {
        IriSet holders = view.instances_of(cls);
        result = first ? holders : intersect(result, holders);
        first = false;
    }
    return result;
}

std::vector<SelectorBinding> enumerate_selectors(const TemplateSpec& t, const GraphView& view,
                                                 const Candidates& c) {
    std::vector<SelectorBinding> out;
    auto slot_names_by_role = [&](const std::string& role) {
        std::vector<std::string> names;
        for (const auto& s : t.slots)
            if (s.role == role)
                names.push_back(s.name);
        return names;
    };

    switch (t.selector) {
    case Selector::Org: {
        auto names = slot_names_by_role("org");
        for (const auto& org : label_sorted(view, c.orgs_with_employees())) {
            SelectorBinding sb;
            sb.slots.push_back(make_slot(view, names.at(0), "org", org));
            sb.orgs = {org};
            out.push_back(std::move(sb));
        }
        // LocationByCompany needs orgs with locations instead.
        if (t.family == Family::LocationByCompany) {
            out.clear();
            for (const auto& org : label_sorted(view, c.orgs_with_locations())) {
                SelectorBinding sb;
                sb.slots.push_back(make_slot(view, names.at(0), "org", org));
                sb.orgs = {org};
                out.push_back(std::move(sb));
            }
        }
        break;
    }
    case Selector::Location:
    case Selector::LocationDiff: {
        auto role = t.selector == Selector::Location ? "location" : "location_diff";
        auto names = slot_names_by_role(role);
        for (const auto& loc : label_sorted(view, c.locations_with_org())) {
            SelectorBinding sb;
            sb.slots.push_back(make_slot(view, names.at(0), "location", loc));
            sb.orgs = view.orgs_at(loc);
            out.push_back(std::move(sb));
        }
        break;
    }
    case Selector::Employee: {
        auto names = slot_names_by_role("employee");
        for (const auto& person : label_sorted(view, c.persons_with_employer())) {
            SelectorBinding sb;
            sb.slots.push_back(make_slot(view, names.at(0), "person", person));
            sb.orgs = view.employers_of(person);
            out.push_back(std::move(sb));
        }
        break;
    }
    case Selector::RoleCombo: {
        auto names = slot_names_by_role("role_combo");
        for (const auto& org : label_sorted(view, c.orgs_with_roles())) {
            auto combo = label_sorted(view, view.role_classes_of(org));
            if (combo.empty())
                continue;
            SelectorBinding sb;
            sb.slots.push_back(make_combo_slot(view, names.at(0), combo));
            sb.orgs = orgs_holding_all(view, combo);
            out.push_back(std::move(sb));
        }
        // Two orgs with identical combos produce identical questions; the
        // uniqueness filter drops both, so dedupe by combo here.
        std::sort(out.begin(), out.end(), [](const SelectorBinding& a, const SelectorBinding& b) {
            return a.slots.front().surface < b.slots.front().surface;
        });
        out.erase(std::unique(out.begin(), out.end(),
                              [](const SelectorBinding& a, const SelectorBinding& b) {
                                  return a.slots.front().surface == b.slots.front().surface;
                              }),
                  out.end());
        break;
    }
    case Selector::RolePair: {
        auto names = slot_names_by_role("role");
        auto roles = label_sorted(view, c.role_classes_in_use());
        auto tuples = anchor_tuples(roles, t.set_expr);
        for (const auto& tuple : tuples) {
            SelectorBinding sb;
            for (std::size_t i = 0; i < tuple.size(); ++i)
                sb.slots.push_back(make_slot(view, names.at(i), "role", tuple[i]));
            std::vector<IriSet> bases;
            for (const auto& r : tuple)
                bases.push_back(view.instances_of(r));
            sb.orgs = apply_set_expr(t.set_expr, bases);
            out.push_back(std::move(sb));
        }
        break;
    }
    case Selector::None:
        break;
    }
    return out;
}

// Positions available among the employees of the selected companies.
IriSet positions_in_orgs(const GraphView& view, const IriSet& orgs) {
    IriSet out;
    for (const auto& org : orgs)
        for (const auto& person : view.employees_of(org))
            out = unite(out, view.positions_of(person));
    return out;
}

std::vector<std::string> position_slot_names(const TemplateSpec& t) {
    std::vector<std::string> names;
    for (const auto& s : t.slots)
        if (s.role == "position")
            names.push_back(s.name);
    return names;
}

// Reorders per-role slot groups into the template's declared slot order.
Binding align_binding(const TemplateSpec& t, const std::vector<BoundSlot>& slots) {
    Binding out;
    for (const auto& spec : t.slots) {
        bool found = false;
        for (const auto& s : slots) {
            if (s.slot == spec.name) {
                out.push_back(s);
                found = true;
                break;
            }
        }
        if (!found)
            throw ValidationError("internal: slot " + spec.name + " not bound");
    }
    return out;
}

} // namespace

std::vector<Binding> enumerate_bindings(const TemplateSpec& t, const KnowledgeGraph& g) {
    GraphView view(g);
    Candidates c(g);
    std::vector<Binding> out;

    auto anchor_names = [&]() {
        std::vector<std::string> names;
        for (const auto& s : t.slots)
            if (s.role == "anchor")
                names.push_back(s.name);
        return names;
    };

    switch (t.family) {
    case Family::PositionsOfPerson:
    case Family::OrgOfPerson:
    case Family::PersonsOfOrg:
    case Family::RolesOfOrg:
    case Family::OrgsOfRole:
    case Family::LocationsOfOrg:
    case Family::OrgOfLocation:
    case Family::TypesOfLocation:
    case Family::RolesOfOrgOfPerson:
    case Family::RolesOfOrgOfLocation: {
        IriSet cands;
        switch (t.family) {
        case Family::PositionsOfPerson: cands = c.persons_with_positions(); break;
        case Family::OrgOfPerson: cands = c.persons_with_employer(); break;
        case Family::PersonsOfOrg: cands = c.orgs_with_employees(); break;
        case Family::RolesOfOrg: cands = c.orgs_with_roles(); break;
        case Family::OrgsOfRole: cands = c.role_classes_in_use(); break;
        case Family::LocationsOfOrg: cands = c.orgs_with_locations(); break;
        case Family::OrgOfLocation: cands = c.locations_with_org(); break;
        case Family::TypesOfLocation: cands = c.locations_with_types(); break;
        case Family::RolesOfOrgOfPerson: cands = c.persons_whose_org_has_roles(); break;
        case Family::RolesOfOrgOfLocation: cands = c.locations_whose_org_has_roles(); break;
        default: break;
        }
        auto names = anchor_names();
        auto kind = anchor_kind_token(t.family);
        for (const auto& tuple : anchor_tuples(label_sorted(view, cands), t.set_expr)) {
            std::vector<BoundSlot> slots;
            for (std::size_t i = 0; i < tuple.size(); ++i)
                slots.push_back(make_slot(view, names.at(i), kind, tuple[i]));
            out.push_back(align_binding(t, slots));
        }
        break;
    }
    case Family::PersonsByCompany: {
        // Per-company position inventory narrows the position slots.
        auto pos_names = position_slot_names(t);
        const SetExprSpec& pos_expr =
            t.set_site == SetSite::Positions ? t.set_expr : SetExprSpec{};
        for (const auto& sel : enumerate_selectors(t, view, c)) {
            auto positions = label_sorted(view, positions_in_orgs(view, sel.orgs));
            for (const auto& tuple : anchor_tuples(positions, pos_expr)) {
                std::vector<BoundSlot> slots = sel.slots;
                for (std::size_t i = 0; i < tuple.size(); ++i)
                    slots.push_back(make_slot(view, pos_names.at(i), "position", tuple[i]));
                out.push_back(align_binding(t, slots));
            }
        }
        break;
    }
    case Family::LocationByCompany: {
        std::vector<std::string> type_names;
        for (const auto& s : t.slots)
            if (s.role == "location_type")
                type_names.push_back(s.name);
        for (const auto& sel : enumerate_selectors(t, view, c)) {
            IriSet types;
            for (const auto& org : sel.orgs)
                for (const auto& loc : view.locations_of(org))
                    types = unite(types, view.types_of(loc));
            for (const auto& type_cls : label_sorted(view, types)) {
                std::vector<BoundSlot> slots = sel.slots;
                slots.push_back(make_slot(view, type_names.at(0), "location_type", type_cls));
                out.push_back(align_binding(t, slots));
            }
        }
        break;
    }
    }
    return out;
}

namespace {

const BoundSlot& slot_by_role(const TemplateSpec& t, const Binding& b, const std::string& role,
                              std::size_t index = 0) {
    std::size_t seen = 0;
    for (std::size_t i = 0; i < t.slots.size(); ++i) {
        if (t.slots[i].role == role) {
            if (seen == index)
                return b.at(i);
            ++seen;
        }
    }
    throw ValidationError("internal: no slot with role " + role);
}

std::vector<const BoundSlot*> slots_by_role(const TemplateSpec& t, const Binding& b,
                                            const std::string& role) {
    std::vector<const BoundSlot*> out;
    for (std::size_t i = 0; i < t.slots.size(); ++i)
        if (t.slots[i].role == role)
            out.push_back(&b.at(i));
    return out;
}

IriSet resolve_selected_orgs(const TemplateSpec& t, const Binding& b, const GraphView& view) {
    switch (t.selector) {
    case Selector::Org:
        return {slot_by_role(t, b, "org").nodes.front()};
    case Selector::Location:
        return view.orgs_at(slot_by_role(t, b, "location").nodes.front());
    case Selector::LocationDiff:
        return view.orgs_at(slot_by_role(t, b, "location_diff").nodes.front());
    case Selector::Employee:
        return view.employers_of(slot_by_role(t, b, "employee").nodes.front());
    case Selector::RoleCombo:
        return orgs_holding_all(view, slot_by_role(t, b, "role_combo").nodes);
    case Selector::RolePair: {
        std::vector<IriSet> bases;
        for (const auto* s : slots_by_role(t, b, "role"))
            bases.push_back(view.instances_of(s->nodes.front()));
        return apply_set_expr(t.set_expr, bases);
    }
    case Selector::None:
        break;
    }
    return {};
}

IriSet answer_iris(const TemplateSpec& t, const Binding& b, const GraphView& view) {
    auto anchors = slots_by_role(t, b, "anchor");
    switch (t.family) {
    case Family::PositionsOfPerson: {
        std::vector<IriSet> bases;
        for (const auto* a : anchors)
            bases.push_back(view.positions_of(a->nodes.front()));
        return apply_set_expr(t.set_expr, bases);
    }
    case Family::OrgOfPerson:
        return view.employers_of(anchors.at(0)->nodes.front());
    case Family::PersonsOfOrg:
        return view.employees_of(anchors.at(0)->nodes.front());
    case Family::RolesOfOrg: {
        std::vector<IriSet> bases;
        for (const auto* a : anchors)
            bases.push_back(view.role_classes_of(a->nodes.front()));
        return apply_set_expr(t.set_expr, bases);
    }
    case Family::OrgsOfRole: {
        std::vector<IriSet> bases;
        for (const auto* a : anchors)
            bases.push_back(view.instances_of(a->nodes.front()));
        return apply_set_expr(t.set_expr, bases);
    }
    case Family::LocationsOfOrg:
        return view.locations_of(anchors.at(0)->nodes.front());
    case Family::OrgOfLocation:
        return view.orgs_at(anchors.at(0)->nodes.front());
    case Family::TypesOfLocation:
        return view.types_of(anchors.at(0)->nodes.front());
    case Family::RolesOfOrgOfPerson: {
        IriSet out;
        for (const auto& org : view.employers_of(anchors.at(0)->nodes.front()))
            out = unite(out, view.role_classes_of(org));
        return out;
    }
    case Family::RolesOfOrgOfLocation: {
        IriSet out;
        for (const auto& org : view.orgs_at(anchors.at(0)->nodes.front()))
            out = unite(out, view.role_classes_of(org));
        return out;
    }
    case Family::PersonsByCompany: {
        IriSet orgs = resolve_selected_orgs(t, b, view);
        IriSet members;
        for (const auto& org : orgs)
            members = unite(members, view.employees_of(org));
        std::vector<IriSet> bases;
        for (const auto* p : slots_by_role(t, b, "position"))
            bases.push_back(intersect(members, view.instances_of(p->nodes.front())));
        if (t.set_site == SetSite::Positions)
            return apply_set_expr(t.set_expr, bases);
        return bases.at(0);
    }
    case Family::LocationByCompany: {
        IriSet orgs = resolve_selected_orgs(t, b, view);
        const auto& type_cls = slot_by_role(t, b, "location_type").nodes.front();
        IriSet typed = view.instances_of(type_cls);
        IriSet out;
        for (const auto& org : orgs)
            out = unite(out, intersect(view.locations_of(org), typed));
        if (t.selector == Selector::LocationDiff) {
            IriSet anchor{slot_by_role(t, b, "location_diff").nodes.front()};
            out = subtract(out, anchor);
        }
        return out;
    }
    }
    return {};
}

std::vector<std::string> labels_sorted(const GraphView& view, const IriSet& iris) {
    std::vector<std::string> out;
    for (const auto& iri : iris)
        out.push_back(view.label(iri));
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) {
        auto ka = lc(a), kb = lc(b);
        if (ka != kb)
            return ka < kb;
        return a < b;
    });
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string render_question(const TemplateSpec& t, const Binding& b) {
    std::string text = t.pattern;
    for (const auto& slot : b) {
        auto pos = text.find(slot.slot);
        if (pos == std::string::npos)
            throw ValidationError("internal: placeholder " + slot.slot + " missing in pattern");
        text.replace(pos, slot.slot.size(), slot.surface);
    }
    return text;
}

std::string binding_sort_key(const Binding& b) {
    std::string key;
    for (const auto& s : b) {
        key += lc(s.surface);
        key.push_back('\x1f');
        key += s.surface;
        key.push_back('\x1f');
    }
    return key;
}

} // namespace

std::vector<std::string> answer_set(const TemplateSpec& t, const Binding& binding,
                                    const KnowledgeGraph& g) {
    GraphView view(g);
    return labels_sorted(view, answer_iris(t, binding, view));
}

std::vector<QAPair> instantiate(const TemplateSpec& t, const KnowledgeGraph& g,
                                const std::string& doc_id) {
    GraphView view(g);
    auto bindings = enumerate_bindings(t, g);
    std::stable_sort(bindings.begin(), bindings.end(), [](const Binding& a, const Binding& b) {
        return binding_sort_key(a) < binding_sort_key(b);
    });

    std::vector<QAPair> out;
    std::set<std::string> seen_questions; // symmetric duplicates collapse
    for (const auto& binding : bindings) {
        if (t.unique_company) {
            IriSet orgs = resolve_selected_orgs(t, binding, view);
            if (orgs.size() != 1)
                continue;
        }
        auto iris = answer_iris(t, binding, view);
        auto answers = labels_sorted(view, iris);
        if (answers.empty())
            continue;
        if (t.plurality == 0 && answers.size() != 1)
            continue;
        if (t.plurality == 1 && answers.size() < 2)
            continue;

        QAPair qa;
        qa.doc_id = doc_id;
        qa.template_id = t.template_id;
        qa.question = render_question(t, binding);
        if (!seen_questions.insert(qa.question).second)
            continue;
        qa.answers = std::move(answers);
        qa.p = t.plurality;
        qa.h = t.hops;
        qa.so = t.set_ops;
        qa.l = t.level();
        qa.bucket = bucket_for_level(qa.l);
        qa.answer_kind = answer_kind_token(t.family);
        qa.bindings = binding;
        out.push_back(std::move(qa));
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::ostringstream id;
        id << out[i].doc_id << "#" << out[i].template_id << "#";
        id.width(3);
        id.fill('0');
        id << i;
        out[i].qa_id = id.str();
    }
    return out;
}

std::vector<QAPair> instantiate_all(const std::vector<TemplateSpec>& catalog,
                                    const KnowledgeGraph& g, const std::string& doc_id) {
    std::vector<const TemplateSpec*> ordered;
    for (const auto& t : catalog)
        ordered.push_back(&t);
    std::sort(ordered.begin(), ordered.end(),
              [](const TemplateSpec* a, const TemplateSpec* b) {
                  return a->template_id < b->template_id;
              });
    std::vector<QAPair> out;
    for (const auto* t : ordered) {
        auto pairs = instantiate(*t, g, doc_id);
        out.insert(out.end(), pairs.begin(), pairs.end());
    }
    return out;
}

std::string qa_to_jsonl_line(const QAPair& qa) {
    ordered_json j;
    j["qa_id"] = qa.qa_id;
    j["doc_id"] = qa.doc_id;
    j["template_id"] = qa.template_id;
    j["question"] = qa.question;
    j["answers"] = qa.answers;
    j["P"] = qa.p;
    j["H"] = qa.h;
    j["SO"] = qa.so;
    j["L"] = qa.l;
    j["bucket"] = qa.bucket;
    j["answer_kind"] = qa.answer_kind;
    ordered_json bindings = ordered_json::array();
    for (const auto& b : qa.bindings) {
        ordered_json jb;
        jb["slot"] = b.slot;
        jb["kind"] = b.kind;
        jb["labels"] = b.labels;
        jb["surface"] = b.surface;
        ordered_json nodes = ordered_json::array();
        for (const auto& n : b.nodes)
            nodes.push_back(n.full());
        jb["nodes"] = nodes;
        bindings.push_back(std::move(jb));
    }
    j["bindings"] = bindings;
    return j.dump();
}

QAPair qa_from_jsonl_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("qa jsonl: ") + e.what());
    }
    QAPair qa;
    qa.qa_id = j.at("qa_id").get<std::string>();
    qa.doc_id = j.at("doc_id").get<std::string>();
    qa.template_id = j.at("template_id").get<std::string>();
    qa.question = j.at("question").get<std::string>();
    qa.answers = j.at("answers").get<std::vector<std::string>>();
    qa.p = j.at("P").get<int>();
    qa.h = j.at("H").get<int>();
    qa.so = j.at("SO").get<int>();
    qa.l = j.at("L").get<int>();
    qa.bucket = j.at("bucket").get<std::string>();
    qa.answer_kind = j.value("answer_kind", "");
    if (j.contains("bindings")) {
        for (const auto& jb : j["bindings"]) {
            BoundSlot b;
            b.slot = jb.at("slot").get<std::string>();
            b.kind = jb.at("kind").get<std::string>();
            b.labels = jb.at("labels").get<std::vector<std::string>>();
            b.surface = jb.at("surface").get<std::string>();
            for (const auto& n : jb.at("nodes"))
                b.nodes.push_back(Iri{n.get<std::string>(), ""});
            qa.bindings.push_back(std::move(b));
        }
    }
    return qa;
}

std::vector<QAPair> read_qa_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open QA file: " + path);
    std::vector<QAPair> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        out.push_back(qa_from_jsonl_line(line));
    }
    return out;
}

void write_qa_jsonl(const std::string& path, const std::vector<QAPair>& pairs) {
    std::ofstream outf(path, std::ios::binary);
    if (!outf)
        throw ConfigError("cannot write QA file: " + path);
    for (const auto& qa : pairs)
        outf << qa_to_jsonl_line(qa) << "\n";
}

BucketSummary bucketize(const std::vector<QAPair>& pairs) {
    BucketSummary s;
    s.per_bucket["Easy"] = 0;
    s.per_bucket["Medium"] = 0;
    s.per_bucket["Hard"] = 0;
    for (const auto& qa : pairs) {
        ++s.per_bucket[qa.bucket];
        std::ostringstream cell;
        cell << qa.p << "," << qa.h << "," << qa.so;
        ++s.per_cell[cell.str()];
        ++s.total;
    }
    return s;
}

std::string BucketSummary::to_string() const {
    std::ostringstream os;
    os << "Easy " << per_bucket.at("Easy") << " / Medium " << per_bucket.at("Medium")
       << " / Hard " << per_bucket.at("Hard") << " / total " << total << "\n";
    for (const auto& [cell, count] : per_cell)
        os << "  (P,H,SO)=(" << cell << "): " << count << "\n";
    return os.str();
}

std::pair<std::vector<QAPair>, std::vector<QAPair>>
split_dataset(const std::vector<QAPair>& pairs, const std::vector<std::string>& dev_doc_ids) {
    std::set<std::string> known;
    for (const auto& qa : pairs)
        known.insert(qa.doc_id);
    std::set<std::string> dev(dev_doc_ids.begin(), dev_doc_ids.end());
    for (const auto& id : dev)
        if (!known.count(id))
            throw ReferenceError("split_dataset: unknown doc id '" + id + "'");
    std::vector<QAPair> dev_pairs, test_pairs;
    for (const auto& qa : pairs)
        (dev.count(qa.doc_id) ? dev_pairs : test_pairs).push_back(qa);
    return {dev_pairs, test_pairs};
}

} // namespace kgqa
